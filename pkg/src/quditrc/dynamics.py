"""Time evolution of the quantum and classical reservoirs.

The hot loops run in :mod:`quditrc.backend` (compiled when available). The
full-matrix :func:`lindblad_rhs` and the generic :func:`integrate` are the
slow reference path used for checking.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import backend
from ._integrator import IntegratorConfig, tsit5
from .errors import ConfigError, DivergenceError, StiffnessError
from .operators import (
    QuantumParams,
    build_hamiltonian,
    check_state,
    dissipator,
    lowering_operator,
    state_residuals,
)

__all__ = [
    "ClassicalParams", "SinusoidalDrive", "PiecewiseDrive", "IntegratorConfig",
    "Trajectory", "drive_value", "lindblad_rhs", "duffing_rhs", "integrate",
    "sample_quantum_output", "sample_classical_output", "sample_segments",
    "monitor",
]


@dataclass(frozen=True)
class ClassicalParams:
    """Duffing oscillator parameters (units of kappa)."""

    Omega: float = 0.0
    K: float = 0.0
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("Omega", "K", "kappa"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.kappa <= 0:
            raise ConfigError(f"kappa must be > 0, got {self.kappa!r}")


@dataclass(frozen=True)
class SinusoidalDrive:
    """u(t) = alpha sin(omega t + phi) + beta."""

    alpha: float
    omega: float
    phi: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.alpha, self.omega, self.phi, self.beta)):
            raise ConfigError("drive parameters must be finite")


@dataclass(frozen=True)
class PiecewiseDrive:
    """Amplitude ``amplitudes[j]`` held on ``[j dt, (j+1) dt)``."""

    amplitudes: tuple
    dt: float
    interval: tuple = (1.0, 10.0)
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", tuple(float(a) for a in self.amplitudes))
        if len(self.amplitudes) < 1:
            raise ConfigError("piecewise drive needs at least one amplitude")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"hold time must be > 0, got {self.dt!r}")
        lo, hi = self.interval
        if any(a < lo or a > hi for a in self.amplitudes):
            raise ConfigError(f"amplitudes must lie in {list(self.interval)}")

    @property
    def duration(self) -> float:
        return len(self.amplitudes) * self.dt


Drive = Union[SinusoidalDrive, PiecewiseDrive]


@dataclass
class Trajectory:
    sample_times: np.ndarray
    samples: np.ndarray
    final_state: Union[np.ndarray, complex]
    states: Optional[np.ndarray] = None
    n_steps: int = 0


def drive_value(drive: Drive, t: float) -> float:
    if isinstance(drive, SinusoidalDrive):
        return drive.alpha * math.sin(drive.omega * t + drive.phi) + drive.beta
    r = t / drive.dt
    # snap j*dt computed in floating point onto the left-closed boundary
    j = round(r) if abs(r - round(r)) <= 1e-12 * max(1.0, abs(r)) else math.floor(r)
    if t < 0 or j >= len(drive.amplitudes):
        raise ValueError(f"t={t!r} outside [0, {drive.duration!r})")
    return drive.amplitudes[j]


def lindblad_rhs(rho: np.ndarray, t: float, p: QuantumParams, drive: Drive) -> np.ndarray:
    """Full-matrix Lindblad derivative ``-i[H, rho] + kappa D[a] rho``."""
    rho = np.asarray(rho)
    if rho.shape != (p.d, p.d):
        raise ValueError(f"state shape {rho.shape} does not match d={p.d}")
    H = build_hamiltonian(p, drive_value(drive, t))
    return -1j * (H @ rho - rho @ H) + p.kappa * dissipator(lowering_operator(p.d), rho)


def duffing_rhs(a: complex, t: float, p: ClassicalParams, drive: Drive) -> complex:
    u = drive_value(drive, t)
    return (-1j * (p.Omega + p.K) * a - 2j * p.K * a * a * np.conj(a)
            - 0.5 * p.kappa * a - 1j * u)


def integrate(rhs: Callable, state0, t_span: Sequence[float], cfg: IntegratorConfig,
              sample_times, observable: Optional[Callable] = None) -> Trajectory:
    """Integrate ``rhs(t, y)`` with the adaptive Tsitouras 5(4) pair.

    ``samples`` holds ``observable(y)`` at each sample time, or the states
    themselves when no observable is given.
    """
    times = np.asarray(sample_times, dtype=np.float64)
    t0, t1 = map(float, t_span)
    if times.size == 0 or np.any(np.diff(times) <= 0):
        raise ValueError("sample_times must be non-empty and strictly increasing")
    if times[0] < t0 or times[-1] > t1:
        raise ValueError("sample_times must lie inside t_span")
    y0 = np.asarray(state0)
    if not np.iscomplexobj(y0):
        y0 = y0.astype(np.float64)
    states = np.zeros((times.size,) + y0.shape, dtype=y0.dtype)

    def record(i, y):
        states[i] = y

    final, n_steps = tsit5(rhs, y0, t0, times, cfg, record)
    samples = states if observable is None else np.array([observable(s) for s in states])
    return Trajectory(times, samples, final, states, n_steps)


class StateMonitor:
    """Optional validity checking of every sampled density matrix.

    Enabled by ``QUDITRC_VALIDATE=1`` or :meth:`enable`. Tracks the worst
    residuals seen so far and raises on violation.
    """

    trace_tol = 1e-9
    hermitian_tol = 1e-9
    positivity_tol = -1e-8

    def __init__(self):
        self.enabled = os.environ.get("QUDITRC_VALIDATE", "") not in ("", "0")
        self.reset()

    def reset(self):
        self.n_states = 0
        self.worst_trace = 0.0
        self.worst_hermitian = 0.0
        self.min_eigenvalue = math.inf

    def enable(self, flag: bool = True):
        self.enabled = flag

    def check(self, states: np.ndarray):
        trace_err, herm_err, min_eig = state_residuals(states)
        self.n_states += states.shape[0] if states.ndim == 3 else 1
        self.worst_trace = max(self.worst_trace, trace_err)
        self.worst_hermitian = max(self.worst_hermitian, herm_err)
        self.min_eigenvalue = min(self.min_eigenvalue, min_eig)
        if trace_err > self.trace_tol or herm_err > self.hermitian_tol or min_eig < self.positivity_tol:
            # reuse the error messages of the single-state check
            for rho in np.reshape(states, (-1,) + states.shape[-2:]):
                check_state(rho, self.hermitian_tol)


monitor = StateMonitor()


def _kernel_args(cfg: IntegratorConfig):
    return cfg.abs_tol, cfg.rel_tol, cfg.initial_step, cfg.max_step


def _raise_status(status: int, t0: float):
    if status == 1:
        raise StiffnessError(f"step size underflow in segment starting at t={t0:.6g}")
    if status == 2:
        raise DivergenceError(f"non-finite state in segment starting at t={t0:.6g}")


def _drive_tuple(drive: Drive, t: float):
    """(alpha, omega, phi, beta) of the sinusoid active at time t."""
    if isinstance(drive, SinusoidalDrive):
        return drive.alpha, drive.omega, drive.phi, drive.beta
    return 0.0, 0.0, 0.0, drive_value(drive, t)


def _segments(drive: Drive, t0: float, times: np.ndarray):
    """Split ``[t0, times[-1]]`` at drive discontinuities.

    Yields (start, end, indices of the sample times inside the segment).
    The first segment includes its start; later ones only their end.
    """
    t_end = float(times[-1])
    if isinstance(drive, SinusoidalDrive):
        yield t0, t_end, np.arange(times.size)
        return
    if t0 < 0 or t_end > drive.duration * (1 + 1e-12):
        raise ValueError(f"window [{t0!r}, {t_end!r}] outside the drive [0, {drive.duration!r}]")
    cuts = [j * drive.dt for j in range(len(drive.amplitudes) + 1)]
    edges = [t0] + [c for c in cuts if t0 < c < t_end] + [t_end]
    for k, (start, end) in enumerate(zip(edges[:-1], edges[1:])):
        lower = times >= start if k == 0 else times > start
        yield start, end, np.nonzero(lower & (times <= end))[0]


def _evolve(kernel, y0, p_args, drive: Drive, t0: float, times: np.ndarray, cfg: IntegratorConfig):
    """Run ``kernel`` segment by segment; return (states at times, final state, steps)."""
    out = None
    y = y0
    n_total = 0
    for start, end, idx in _segments(drive, t0, times):
        seg_times = times[idx]
        if seg_times.size == 0 or seg_times[-1] != end:
            seg_times = np.append(seg_times, end)
        states, status, n_steps = kernel(y, *p_args, *_drive_tuple(drive, start), start,
                                         np.ascontiguousarray(seg_times), *_kernel_args(cfg))
        _raise_status(status, start)
        n_total += n_steps
        if out is None:
            out = np.zeros((times.size,) + states.shape[1:], dtype=np.complex128)
        out[idx] = states[: idx.size]
        y = states[-1]
    return out, y, n_total


def _sample_grid(window, T: int) -> np.ndarray:
    if T < 1:
        raise ValueError(f"need at least one sample, got T={T}")
    t0, t1 = map(float, window)
    if not t1 > t0 and T > 1:
        raise ValueError(f"empty window {window!r}")
    return np.linspace(t0, t1, T) if T > 1 else np.array([t1])


def sample_quantum_output(p: QuantumParams, drive: Drive, rho0: np.ndarray, window,
                          T: int, cfg: IntegratorConfig = IntegratorConfig(),
                          keep_states: bool = False) -> Trajectory:
    """Evolve ``rho0`` from ``window[0]`` and sample ``<X>`` on T uniform points."""
    times = _sample_grid(window, T)
    rho0 = np.ascontiguousarray(rho0, dtype=np.complex128)
    if rho0.shape != (p.d, p.d):
        raise ValueError(f"state shape {rho0.shape} does not match d={p.d}")
    states, final, n_steps = _evolve(backend.evolve_qudit, rho0, (p.Omega, p.K, p.kappa),
                                     drive, float(window[0]), times, cfg)
    if monitor.enabled:
        monitor.check(states)
    samples = _x_of_states(states)
    return Trajectory(times, samples, final, states if keep_states else None, n_steps)


def sample_classical_output(p: ClassicalParams, drive: Drive, a0: complex, window,
                            T: int, cfg: IntegratorConfig = IntegratorConfig(),
                            keep_states: bool = False) -> Trajectory:
    """Evolve the Duffing amplitude and sample ``X = sqrt(2) Re a``."""
    times = _sample_grid(window, T)
    states, final, n_steps = _evolve(backend.evolve_duffing, complex(a0), (p.Omega, p.K, p.kappa),
                                     drive, float(window[0]), times, cfg)
    samples = math.sqrt(2.0) * states.real
    return Trajectory(times, samples, complex(final), states if keep_states else None, n_steps)


def _x_of_states(states: np.ndarray) -> np.ndarray:
    d = states.shape[-1]
    off = np.diagonal(states, offset=1, axis1=-2, axis2=-1).real
    return math.sqrt(2.0) * off @ np.sqrt(np.arange(1, d, dtype=np.float64))


def sample_segments(params: Union[QuantumParams, ClassicalParams], drive: PiecewiseDrive,
                    T: int, cfg: IntegratorConfig = IntegratorConfig(), state0=None):
    """Sample T endpoint-inclusive points on every hold interval.

    A single continuous evolution over the whole drive, restarted only at the
    hold boundaries. Returns ``(S, final_state, boundary_states)`` where
    ``S[j]`` holds the samples of interval j and ``boundary_states[j]`` is the
    state at ``j * dt`` (length J + 1).
    """
    quantum = isinstance(params, QuantumParams)
    if state0 is None:
        if quantum:
            state0 = np.zeros((params.d, params.d), dtype=np.complex128)
            state0[0, 0] = 1.0
        else:
            state0 = 0j
    J = len(drive.amplitudes)
    local = np.linspace(0.0, drive.dt, T) if T > 1 else np.array([drive.dt])
    S = np.zeros((J, T))
    kernel = backend.evolve_qudit if quantum else backend.evolve_duffing
    p_args = (params.Omega, params.K, params.kappa)
    y = np.ascontiguousarray(state0, dtype=np.complex128) if quantum else complex(state0)
    boundary = [y]
    args = _kernel_args(cfg)
    for j, amp in enumerate(drive.amplitudes):
        t0 = j * drive.dt
        times = t0 + local
        states, status, _ = kernel(y, *p_args, 0.0, 0.0, 0.0, amp, t0, times, *args)
        _raise_status(status, t0)
        if quantum:
            if monitor.enabled:
                monitor.check(states)
            S[j] = _x_of_states(states)
        else:
            S[j] = math.sqrt(2.0) * states.real
        y = states[-1]
        boundary.append(y)
    return S, y, boundary
