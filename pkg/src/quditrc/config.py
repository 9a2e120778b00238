"""YAML run configuration.

Every physical value is a plain number in units of the decay rate; the file
must say so with a top-level ``units: kappa``. Example::

    units: kappa
    task: signal
    reservoir: {d: 3, K: -2.0}
    signal: {omega: 1.5, J_train: 10}
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Optional, Union

import yaml

from ._integrator import IntegratorConfig
from .dynamics import ClassicalParams, PiecewiseDrive, SinusoidalDrive
from .errors import ConfigError, InvalidDimensionError
from .operators import QuantumParams
from .sweep import KDraw, SweepSpec
from .tasks import SignalTaskConfig, StmcTaskConfig, generate_piecewise_input

TASKS = ("simulate", "signal", "stmc", "sweep")

SCHEMA = {
    "": {"units", "task", "seed", "reservoir", "signal", "stmc", "simulate", "sweep", "integrator"},
    "reservoir": {"type", "d", "Omega", "K", "kappa"},
    "signal": {"omega", "beta", "J_train", "J_test", "phase_interval", "amplitude_interval",
               "T_f", "T", "gamma_exponents", "bias"},
    "stmc": {"dt", "amplitude_interval", "J_train", "J_test", "T", "k_max", "gamma_exponents",
             "washout", "bias"},
    "simulate": {"drive", "window", "T"},
    "simulate.drive": {"type", "alpha", "omega", "phi", "beta", "J", "interval", "dt"},
    "sweep": {"task", "dimensions", "K", "Omega", "omega", "beta", "dt", "A", "J_train",
              "workers", "group_by"},
    "sweep.K": {"count", "interval", "seed"},
    "integrator": {"abs_tol", "rel_tol", "max_step", "initial_step"},
}


@dataclass(frozen=True)
class SimulateConfig:
    reservoir: Union[QuantumParams, ClassicalParams]
    drive: Union[SinusoidalDrive, PiecewiseDrive]
    window: tuple = (0.0, 2.0)
    T: int = 51
    integrator: IntegratorConfig = IntegratorConfig()
    seed: int = 0

    def to_dict(self) -> dict:
        from dataclasses import asdict

        from .tasks import reservoir_to_dict
        drive = asdict(self.drive)
        drive["type"] = "sinusoidal" if isinstance(self.drive, SinusoidalDrive) else "piecewise"
        if "amplitudes" in drive:
            drive["amplitudes"] = list(drive["amplitudes"])
            drive["interval"] = list(drive["interval"])
        return {"reservoir": reservoir_to_dict(self.reservoir), "drive": drive,
                "window": list(self.window), "T": self.T,
                "integrator": asdict(self.integrator), "seed": self.seed}


class _Locator:
    """Maps dotted key paths to source lines using the composed YAML tree."""

    def __init__(self, text: str):
        self.lines = {}
        try:
            root = yaml.compose(text)
        except yaml.YAMLError:
            root = None
        if root is not None:
            self._walk(root, "")

    def _walk(self, node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                path = f"{prefix}.{key.value}" if prefix else str(key.value)
                self.lines[path] = key.start_mark.line + 1
                self._walk(value, path)

    def line(self, path: str) -> Optional[int]:
        while path:
            if path in self.lines:
                return self.lines[path]
            path = path.rpartition(".")[0]
        return None


class _Parser:
    def __init__(self, text: str, source: str):
        self.source = source
        self.loc = _Locator(text)
        try:
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f":{mark.line + 1}" if mark else ""
            raise ConfigError(f"{source}{where}: YAML parse error: {exc}") from None
        if not isinstance(self.data, dict):
            raise ConfigError(f"{source}: top level must be a mapping")

    def fail(self, path: str, message: str, cls=ConfigError):
        line = self.loc.line(path)
        where = f":{line}" if line else ""
        raise cls(f"{self.source}{where}: field '{path}': {message}")

    def section(self, name: str, data: Any, schema_key: Optional[str] = None) -> dict:
        if data is None:
            return {}
        if not isinstance(data, dict):
            self.fail(name, "expected a mapping")
        allowed = SCHEMA[schema_key if schema_key is not None else name]
        for key in data:
            if key not in allowed:
                path = f"{name}.{key}" if name else str(key)
                self.fail(path, f"unknown key '{key}' (allowed: {', '.join(sorted(allowed))})")
        return data

    def number(self, path: str, value, *, integer=False, positive=False, minimum=None):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if integer and int(value) != value:
            self.fail(path, f"expected an integer, got {value!r}")
        if not math.isfinite(value):
            self.fail(path, "must be finite")
        if positive and value <= 0:
            self.fail(path, f"must be > 0, got {value!r}")
        if minimum is not None and value < minimum:
            self.fail(path, f"must be >= {minimum}, got {value!r}")
        return int(value) if integer else float(value)

    def pair(self, path: str, value, ordered=True):
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            self.fail(path, f"expected a two-element list, got {value!r}")
        lo, hi = (self.number(f"{path}", v) for v in value)
        if ordered and lo > hi:
            self.fail(path, f"interval must be ordered (low, high), got {[lo, hi]}")
        return (lo, hi)

    # -- sections ---------------------------------------------------------

    def reservoir(self, data, required=True):
        sec = self.section("reservoir", data)
        if not sec and required:
            self.fail("reservoir", "section is required")
        kind = sec.get("type", "quantum")
        if kind not in ("quantum", "classical"):
            self.fail("reservoir.type", f"must be 'quantum' or 'classical', got {kind!r}")
        kappa = self.number("reservoir.kappa", sec.get("kappa", 1.0), positive=True)
        Omega = self.number("reservoir.Omega", sec.get("Omega", 0.0))
        K = self.number("reservoir.K", sec.get("K", 0.0))
        if kind == "classical":
            if "d" in sec:
                self.fail("reservoir.d", "a classical reservoir has no dimension")
            return ClassicalParams(Omega, K, kappa)
        if "d" not in sec:
            if not required:
                return QuantumParams(2, Omega, K, kappa)
            self.fail("reservoir.d", "qudit dimension is required")
        d = sec["d"]
        if isinstance(d, bool) or not isinstance(d, int) or d < 1:
            self.fail("reservoir.d", f"qudit dimension must be an integer >= 1, got {d!r}",
                      InvalidDimensionError)
        return QuantumParams(d, Omega, K, kappa)

    def integrator(self, data):
        sec = self.section("integrator", data)
        defaults = IntegratorConfig()
        kwargs = {k: self.number(f"integrator.{k}", sec.get(k, getattr(defaults, k)), positive=True)
                  for k in ("abs_tol", "rel_tol", "max_step", "initial_step")}
        return IntegratorConfig(**kwargs)

    def exponents(self, path, value):
        lo, hi = self.pair(path, value)
        if int(lo) != lo or int(hi) != hi:
            self.fail(path, "exponents must be integers")
        return (int(lo), int(hi))

    def signal(self, data, reservoir, seed, integ):
        sec = self.section("signal", data)
        kw = {}
        for key in ("omega", "beta"):
            if key in sec:
                kw[key] = self.number(f"signal.{key}", sec[key])
        for key in ("J_train", "J_test", "T"):
            if key in sec:
                kw[key] = self.number(f"signal.{key}", sec[key], integer=True, minimum=1)
        if "T_f" in sec:
            kw["T_f"] = self.number("signal.T_f", sec["T_f"], positive=True)
        for key in ("phase_interval", "amplitude_interval"):
            if key in sec:
                kw[key] = self.pair(f"signal.{key}", sec[key])
        if "gamma_exponents" in sec:
            kw["gamma_exponents"] = self.exponents("signal.gamma_exponents", sec["gamma_exponents"])
        if "bias" in sec:
            kw["bias"] = bool(sec["bias"])
        return SignalTaskConfig(reservoir, seed=seed, integrator=integ, **kw)

    def stmc(self, data, reservoir, seed, integ):
        sec = self.section("stmc", data)
        kw = {}
        if "dt" in sec:
            kw["dt"] = self.number("stmc.dt", sec["dt"], positive=True)
        for key in ("J_train", "J_test", "T", "k_max"):
            if key in sec:
                kw[key] = self.number(f"stmc.{key}", sec[key], integer=True, minimum=1)
        if "washout" in sec:
            kw["washout"] = self.number("stmc.washout", sec["washout"], integer=True, minimum=0)
        if "amplitude_interval" in sec:
            kw["amplitude_interval"] = self.pair("stmc.amplitude_interval", sec["amplitude_interval"])
        if "gamma_exponents" in sec:
            kw["gamma_exponents"] = self.exponents("stmc.gamma_exponents", sec["gamma_exponents"])
        if "bias" in sec:
            kw["bias"] = bool(sec["bias"])
        return StmcTaskConfig(reservoir, seed=seed, integrator=integ, **kw)

    def simulate(self, data, reservoir, seed, integ):
        sec = self.section("simulate", data)
        drv = self.section("simulate.drive", sec.get("drive"))
        kind = drv.get("type", "sinusoidal")
        if kind == "sinusoidal":
            for key in ("J", "interval", "dt"):
                if key in drv:
                    self.fail(f"simulate.drive.{key}", "not used by a sinusoidal drive")
            drive = SinusoidalDrive(*(self.number(f"simulate.drive.{k}", drv.get(k, dflt))
                                      for k, dflt in (("alpha", 1.0), ("omega", 1.0),
                                                      ("phi", 0.0), ("beta", 10.0))))
            default_window = (0.0, 2.0)
        elif kind == "piecewise":
            J = self.number("simulate.drive.J", drv.get("J", 10), integer=True, minimum=1)
            dt = self.number("simulate.drive.dt", drv.get("dt", 0.5), positive=True)
            interval = self.pair("simulate.drive.interval", drv.get("interval", [1.0, 10.0]))
            drive = generate_piecewise_input(J, interval, dt, seed)
            default_window = (0.0, J * dt)
        else:
            self.fail("simulate.drive.type", f"must be 'sinusoidal' or 'piecewise', got {kind!r}")
        window = self.pair("simulate.window", sec.get("window", list(default_window)))
        if window[1] <= window[0]:
            self.fail("simulate.window", "window must have positive length")
        T = self.number("simulate.T", sec.get("T", 51), integer=True, minimum=1)
        return SimulateConfig(reservoir, drive, window, T, integ, seed)

    def sweep(self, data, root, seed, integ):
        sec = self.section("sweep", data)
        task = sec.get("task", "signal")
        if task not in ("signal", "stmc"):
            self.fail("sweep.task", f"must be 'signal' or 'stmc', got {task!r}")
        template = self.reservoir(root.get("reservoir"), required=False)
        base = (self.signal(root.get("signal"), template, seed, integ) if task == "signal"
                else self.stmc(root.get("stmc"), template, seed, integ))
        dims = sec.get("dimensions", [2])
        if not isinstance(dims, list) or not dims:
            self.fail("sweep.dimensions", "expected a non-empty list")
        for d in dims:
            if d != "classical" and (isinstance(d, bool) or not isinstance(d, int) or d < 1):
                self.fail("sweep.dimensions", f"entries must be integers >= 1 or 'classical', got {d!r}",
                          InvalidDimensionError)
        K = sec.get("K", [])
        if isinstance(K, dict):
            ks = self.section("sweep.K", K)
            count = self.number("sweep.K.count", ks.get("count", 1), integer=True, minimum=1)
            interval = self.pair("sweep.K.interval", ks.get("interval", [-0.1, -10.0]), ordered=False)
            K = KDraw(count, interval, self.number("sweep.K.seed", ks.get("seed", seed), integer=True))
        else:
            K = tuple(self.number("sweep.K", k) for k in self._list("sweep.K", K))

        def values(key, **kw):
            return tuple(self.number(f"sweep.{key}", v, **kw) for v in self._list(f"sweep.{key}", sec.get(key, [])))

        A = tuple(self.pair("sweep.A", a) for a in self._list("sweep.A", sec.get("A", [])))
        workers = self.number("sweep.workers", sec.get("workers", 1), integer=True, minimum=0)
        group_by = sec.get("group_by")
        return SweepSpec(task, base, tuple(dims), K, values("Omega"), values("omega"),
                         values("beta"), values("dt", positive=True), A,
                         values("J_train", integer=True, minimum=1), workers,
                         tuple(group_by) if group_by else None)

    def _list(self, path, value):
        if not isinstance(value, list):
            self.fail(path, f"expected a list, got {value!r}")
        return value

    def parse(self):
        root = self.section("", self.data)
        if root.get("units") != "kappa":
            self.fail("units", "mandatory top-level 'units: kappa' (all rates in units of kappa)")
        task = root.get("task")
        if task not in TASKS:
            self.fail("task", f"must be one of {', '.join(TASKS)}, got {task!r}")
        seed = self.number("seed", root.get("seed", 0), integer=True, minimum=0)
        integ = self.integrator(root.get("integrator"))
        if task == "sweep":
            return self.sweep(root.get("sweep"), root, seed, integ)
        for other in ("signal", "stmc", "simulate", "sweep"):
            if other != task and other in root:
                self.fail(other, f"section not used by task '{task}'")
        reservoir = self.reservoir(root.get("reservoir"))
        return getattr(self, task)(root.get(task), reservoir, seed, integ)


def parse_config_text(text: str, source: str = "<config>"):
    return _Parser(text, source).parse()


def parse_config(path) -> Union[SimulateConfig, SignalTaskConfig, StmcTaskConfig, SweepSpec]:
    """Read, validate and default-fill a configuration file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))


def with_seed(cfg, seed: int):
    """Override the master seed of any parsed config."""
    if isinstance(cfg, SweepSpec):
        K = cfg.K
        return replace(cfg, base=replace(cfg.base, seed=seed), K=K)
    if isinstance(cfg, SimulateConfig):
        drive = cfg.drive
        if isinstance(drive, PiecewiseDrive):
            drive = generate_piecewise_input(len(drive.amplitudes), drive.interval, drive.dt, seed)
        return replace(cfg, drive=drive, seed=seed)
    return replace(cfg, seed=seed)
