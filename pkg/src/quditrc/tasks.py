"""Benchmark runners: amplitude/phase estimation and short-term memory capacity."""
from __future__ import annotations

import functools
import math
import time
import zlib
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ._integrator import IntegratorConfig
from .dynamics import (
    ClassicalParams,
    PiecewiseDrive,
    SinusoidalDrive,
    sample_classical_output,
    sample_quantum_output,
    sample_segments,
)
from .errors import ConfigError, RidgeError, TaskFailure
from .operators import QuantumParams, ground_state
from .readout import k_delay_r2, ridge_train, rmse, stmc

Reservoir = Union[QuantumParams, ClassicalParams]


def random_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named purpose derived from the master seed."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]))


def gamma_grid(exponents: Sequence[int] = (-12, 0), signed: bool = True) -> tuple:
    lo, hi = exponents
    values = [10.0 ** p for p in range(int(lo), int(hi) + 1)]
    if signed:
        values = values + [-v for v in values]
    return tuple(values)


def reservoir_to_dict(p: Reservoir) -> dict:
    if isinstance(p, QuantumParams):
        return {"type": "quantum", "d": p.d, "Omega": p.Omega, "K": p.K, "kappa": p.kappa}
    return {"type": "classical", "Omega": p.Omega, "K": p.K, "kappa": p.kappa}


def reservoir_from_dict(data: dict) -> Reservoir:
    data = dict(data)
    kind = data.pop("type", "quantum")
    if kind == "classical":
        return ClassicalParams(**data)
    return QuantumParams(**data)


def system_label(p: Reservoir) -> str:
    return f"d={p.d}" if isinstance(p, QuantumParams) else "classical"


@dataclass(frozen=True)
class SignalTaskConfig:
    reservoir: Reservoir
    omega: float = 1.0
    beta: float = 10.0
    J_train: int = 10
    J_test: int = 3000
    phase_interval: tuple = (0.0, math.pi / 2)
    amplitude_interval: tuple = (1.0, 10.0)
    T_f: Optional[float] = None
    T: Optional[int] = None
    gamma_exponents: tuple = (-12, 0)
    seed: int = 0
    bias: bool = False
    integrator: IntegratorConfig = IntegratorConfig()

    def __post_init__(self):
        for name in ("phase_interval", "amplitude_interval", "gamma_exponents"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.J_train < 1 or self.J_test < 1:
            raise ConfigError("J_train and J_test must be >= 1")
        if self.n_samples < 1 or not self.window_length > 0:
            raise ConfigError("need T >= 1 samples over a window T_f > 0")
        for name in ("phase_interval", "amplitude_interval"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name} must be ordered, got {[lo, hi]}")

    @property
    def window_length(self) -> float:
        """Sampling window; unset means 2 for qudits and 0.5 for the oscillator."""
        if self.T_f is not None:
            return self.T_f
        return 2.0 if isinstance(self.reservoir, QuantumParams) else 0.5

    @property
    def n_samples(self) -> int:
        if self.T is not None:
            return self.T
        return 51 if isinstance(self.reservoir, QuantumParams) else 21

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["reservoir"] = reservoir_to_dict(self.reservoir)
        out["integrator"] = asdict(self.integrator)
        for name in ("phase_interval", "amplitude_interval", "gamma_exponents"):
            out[name] = list(out[name])
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SignalTaskConfig":
        data = dict(data)
        data.pop("sampling", None)
        data["reservoir"] = reservoir_from_dict(data["reservoir"])
        if "integrator" in data:
            data["integrator"] = IntegratorConfig(**data["integrator"])
        return cls(**data)


@dataclass(frozen=True)
class StmcTaskConfig:
    reservoir: Reservoir
    dt: float = 0.5
    amplitude_interval: tuple = (1.0, 10.0)
    J_train: int = 3000
    J_test: int = 4000
    T: int = 100
    k_max: int = 30
    gamma_exponents: tuple = (-12, 0)
    seed: int = 0
    washout: int = 0
    bias: bool = False
    integrator: IntegratorConfig = IntegratorConfig()

    def __post_init__(self):
        for name in ("amplitude_interval", "gamma_exponents"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"hold time dt must be > 0, got {self.dt!r}")
        if self.J_train < 1 or self.J_test < 1:
            raise ConfigError("J_train and J_test must be >= 1")
        if self.T < 1 or self.k_max < 1 or self.washout < 0:
            raise ConfigError("T and k_max must be >= 1, washout >= 0")
        lo, hi = self.amplitude_interval
        if lo > hi:
            raise ConfigError(f"amplitude_interval must be ordered, got {[lo, hi]}")

    @property
    def J(self) -> int:
        return self.J_train + self.J_test

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["reservoir"] = reservoir_to_dict(self.reservoir)
        out["integrator"] = asdict(self.integrator)
        for name in ("amplitude_interval", "gamma_exponents"):
            out[name] = list(out[name])
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "StmcTaskConfig":
        data = dict(data)
        data["reservoir"] = reservoir_from_dict(data["reservoir"])
        if "integrator" in data:
            data["integrator"] = IntegratorConfig(**data["integrator"])
        return cls(**data)


@dataclass
class TaskResult:
    """Metrics of one task run.

    ``metrics`` holds ``amplitude_rmse``/``phase_rmse`` (signal) or ``stmc``
    (memory capacity); ``best_gamma`` the selected ridge parameter per output.
    """

    task: str
    parameters: dict
    metrics: dict
    best_gamma: dict
    r2_curve: Optional[list] = None
    wall_time: float = field(default=0.0, compare=False)

    @property
    def amplitude_rmse(self):
        return self.metrics.get("amplitude_rmse")

    @property
    def phase_rmse(self):
        return self.metrics.get("phase_rmse")

    @property
    def stmc(self):
        return self.metrics.get("stmc")

    def to_dict(self) -> dict:
        return {"task": self.task, "parameters": self.parameters, "metrics": self.metrics,
                "best_gamma": self.best_gamma, "r2_curve": self.r2_curve}

    @classmethod
    def from_dict(cls, data: dict) -> "TaskResult":
        return cls(data["task"], data["parameters"], data["metrics"], data["best_gamma"],
                   data.get("r2_curve"))


@dataclass
class GammaChoice:
    gamma: float
    metric: float
    W: np.ndarray
    tried: dict = field(default_factory=dict)


def gamma_sweep(train: Callable[[float], np.ndarray], evaluate: Callable[[np.ndarray], float],
                gammas: Sequence[float], maximize: bool = False) -> GammaChoice:
    """Train at every ridge parameter and keep the best test metric.

    Failed solves (:class:`RidgeError`) and non-finite metrics are skipped.
    Ties go to the smaller ``|gamma|``, then to the positive sign.
    """
    if len(gammas) == 0:
        raise ValueError("empty gamma grid")
    best = None
    tried = {}
    for g in sorted(gammas, key=lambda g: (abs(g), g < 0)):
        try:
            W = train(g)
        except RidgeError:
            tried[g] = None
            continue
        value = float(evaluate(W))
        tried[g] = value
        if not math.isfinite(value):
            continue
        if best is None or (value > best.metric if maximize else value < best.metric):
            best = GammaChoice(g, value, W)
    if best is None:
        raise TaskFailure(f"ridge solve failed for all {len(gammas)} gamma values")
    best.tried = tried
    return best


def build_signal_training_grid(J_train: int, phase_interval=(0.0, math.pi / 2),
                               amplitude_interval=(1.0, 10.0)) -> list:
    """``J_train x J_train`` (alpha, phi) grid; a single point sits at the lower ends."""
    if J_train < 1:
        raise ConfigError("J_train must be >= 1")
    alphas = np.linspace(*amplitude_interval, J_train) if J_train > 1 else np.array([amplitude_interval[0]])
    phis = np.linspace(*phase_interval, J_train) if J_train > 1 else np.array([phase_interval[0]])
    return [(float(a), float(p)) for a in alphas for p in phis]


def draw_signal_test_set(J_test: int, phase_interval, amplitude_interval, seed: int) -> list:
    rng = random_stream(seed, "signal-test")
    alphas = rng.uniform(amplitude_interval[0], amplitude_interval[1], J_test)
    phis = rng.uniform(phase_interval[0], phase_interval[1], J_test)
    return list(zip(alphas.tolist(), phis.tolist()))


def simulate_signal(reservoir: Reservoir, alpha: float, phi: float, omega: float, beta: float,
                    T_f: float, T: int, cfg: IntegratorConfig) -> np.ndarray:
    """Sample vector for one (alpha, phi) signal, starting from the ground state."""
    drive = SinusoidalDrive(alpha, omega, phi, beta)
    if isinstance(reservoir, QuantumParams):
        traj = sample_quantum_output(reservoir, drive, ground_state(reservoir.d), (0.0, T_f), T, cfg)
    else:
        traj = sample_classical_output(reservoir, drive, 0j, (0.0, T_f), T, cfg)
    return traj.samples


def signal_features(reservoir: Reservoir, pairs, omega: float, beta: float, T_f: float, T: int,
                    cfg: IntegratorConfig) -> np.ndarray:
    """Feature matrix S (T x len(pairs)), one column per signal."""
    S = np.empty((T, len(pairs)))
    for col, (alpha, phi) in enumerate(pairs):
        S[:, col] = simulate_signal(reservoir, alpha, phi, omega, beta, T_f, T, cfg)
    return S


@functools.lru_cache(maxsize=16)
def _cached_test_features(reservoir, omega, beta, T_f, T, cfg, J_test, phase_interval,
                          amplitude_interval, seed):
    # the test set is shared by every training-set size of a realization
    pairs = draw_signal_test_set(J_test, phase_interval, amplitude_interval, seed)
    S = signal_features(reservoir, pairs, omega, beta, T_f, T, cfg)
    S.setflags(write=False)
    return pairs, S


def run_signal_task(cfg: SignalTaskConfig) -> TaskResult:
    """Train and test amplitude/phase estimation for one reservoir realization."""
    start = time.perf_counter()
    train_pairs = build_signal_training_grid(cfg.J_train, cfg.phase_interval, cfg.amplitude_interval)
    T_f, T = cfg.window_length, cfg.n_samples
    S_train = signal_features(cfg.reservoir, train_pairs, cfg.omega, cfg.beta, T_f, T, cfg.integrator)
    test_pairs, S_test = _cached_test_features(cfg.reservoir, cfg.omega, cfg.beta, T_f, T,
                                               cfg.integrator, cfg.J_test, cfg.phase_interval,
                                               cfg.amplitude_interval, cfg.seed)
    Y_train = np.array(train_pairs).T
    Y_test = np.array(test_pairs).T
    if cfg.bias:
        S_test = np.vstack([S_test, np.ones((1, S_test.shape[1]))])

    weights = {}

    def train(g):
        if g not in weights:
            try:
                weights[g] = ridge_train(S_train, Y_train, g, bias=cfg.bias)
            except RidgeError as exc:
                weights[g] = exc
        if isinstance(weights[g], Exception):
            raise weights[g]
        return weights[g]

    gammas = gamma_grid(cfg.gamma_exponents, signed=True)
    amp = gamma_sweep(train, lambda W: rmse(W[0] @ S_test, Y_test[0]), gammas)
    phase = gamma_sweep(train, lambda W: rmse(W[1] @ S_test, Y_test[1]), gammas)
    a_span = (cfg.amplitude_interval[1] - cfg.amplitude_interval[0]) or 1.0
    p_span = (cfg.phase_interval[1] - cfg.phase_interval[0]) or 1.0
    shared = gamma_sweep(train, lambda W: rmse(W[0] @ S_test, Y_test[0]) / a_span
                         + rmse(W[1] @ S_test, Y_test[1]) / p_span, gammas)
    metrics = {
        "amplitude_rmse": amp.metric,
        "phase_rmse": phase.metric,
        "shared_amplitude_rmse": rmse(shared.W[0] @ S_test, Y_test[0]),
        "shared_phase_rmse": rmse(shared.W[1] @ S_test, Y_test[1]),
    }
    best_gamma = {"amplitude": amp.gamma, "phase": phase.gamma, "shared": shared.gamma}
    params = cfg.to_dict()
    params["sampling"] = {"T_f": T_f, "T": T}
    return TaskResult("signal", params, metrics, best_gamma,
                      wall_time=time.perf_counter() - start)


def generate_piecewise_input(J: int, interval, dt: float, seed: int) -> PiecewiseDrive:
    if J < 1:
        raise ConfigError("J must be >= 1")
    lo, hi = interval
    amps = random_stream(seed, "stmc-input").uniform(lo, hi, J)
    return PiecewiseDrive(tuple(np.clip(amps, lo, hi).tolist()), dt, (lo, hi), seed)


def memory_curve(S: np.ndarray, amplitudes, J_train: int, k_max: int, gammas: Sequence[float],
                 washout: int = 0, bias: bool = False):
    """r^2_k for k = 1..k_max from per-interval sample vectors.

    ``S[j]`` is the sample vector of hold interval j and ``amplitudes[j]`` its
    input. Interval j is paired with ``amplitudes[j - k]``; intervals before
    ``J_train`` train, the rest test. Returns (r2 list, best gamma list).
    """
    S = np.asarray(S, dtype=np.float64)
    u = np.asarray(amplitudes, dtype=np.float64)
    J = len(u)
    test_idx = np.arange(J_train, J)
    var_u = float(np.var(u[test_idx])) if test_idx.size else 0.0
    r2, best = [], []
    for k in range(1, k_max + 1):
        tr = np.arange(max(k, washout), J_train)
        te = test_idx[test_idx - k >= 0]
        if tr.size == 0 or te.size < 2:
            r2.append(0.0)
            best.append(None)
            continue
        S_tr, y_tr = S[tr].T, u[tr - k][None, :]
        S_te, y_te = S[te].T, u[te - k]
        if bias:
            S_te = np.vstack([S_te, np.ones((1, te.size))])
        try:
            choice = gamma_sweep(lambda g: ridge_train(S_tr, y_tr, g, bias=bias),
                                 lambda W: k_delay_r2(y_te, (W @ S_te)[0], var_u),
                                 gammas, maximize=True)
        except TaskFailure:
            r2.append(0.0)
            best.append(None)
            continue
        r2.append(choice.metric)
        best.append(choice.gamma)
    return r2, best


def run_stmc_task(cfg: StmcTaskConfig) -> TaskResult:
    """Short-term memory capacity of one reservoir under a random held input."""
    start = time.perf_counter()
    drive = generate_piecewise_input(cfg.J, cfg.amplitude_interval, cfg.dt, cfg.seed)
    S, _, _ = sample_segments(cfg.reservoir, drive, cfg.T, cfg.integrator)
    gammas = gamma_grid(cfg.gamma_exponents, signed=False)
    r2, best = memory_curve(S, drive.amplitudes, cfg.J_train, cfg.k_max, gammas,
                            cfg.washout, cfg.bias)
    return TaskResult("stmc", cfg.to_dict(), {"stmc": stmc(r2)}, {"per_k": best}, r2,
                      wall_time=time.perf_counter() - start)


def with_reservoir(cfg, **changes):
    """Copy of a task config with reservoir fields replaced."""
    return replace(cfg, reservoir=replace(cfg.reservoir, **changes))
