"""Adaptive Tsitouras 5(4) integrator in pure numpy.

This is the generic path: any right-hand side ``f(t, y)`` over a real or
complex ndarray. The compiled kernels in ``_kernels.pyx`` implement the same
step controller with the derivative inlined.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._tableau import A, C, E
from .errors import DivergenceError, StiffnessError

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0
H_MIN = 1e-12


@dataclass(frozen=True)
class IntegratorConfig:
    """Step-control settings shared by every integration path.

    ``initial_step`` is clipped to ``max_step``; the controller adapts it
    from the first step onward.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_step: float = 0.1
    initial_step: float = 1e-3

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "max_step", "initial_step"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")

    def halved(self) -> "IntegratorConfig":
        return IntegratorConfig(self.abs_tol / 2, self.rel_tol / 2,
                                self.max_step, self.initial_step)


def _error_norm(err, y, y_new, atol, rtol):
    err = np.asarray(err)
    if np.iscomplexobj(err):
        err = err.view(np.float64) if err.flags.c_contiguous else np.ascontiguousarray(err).view(np.float64)
        y = np.ascontiguousarray(y).view(np.float64)
        y_new = np.ascontiguousarray(y_new).view(np.float64)
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def tsit5(f: Callable, y0, t0: float, sample_times, cfg: IntegratorConfig,
          record: Optional[Callable] = None):
    """Integrate ``y' = f(t, y)`` from ``t0`` and stop exactly on each sample time.

    Parameters
    ----------
    f : callable
        Derivative ``f(t, y)`` returning an array shaped like ``y``.
    y0 : ndarray
        Initial state (copied).
    t0 : float
        Start time; ``sample_times[0]`` may equal it.
    sample_times : array_like
        Strictly increasing times ``>= t0``.
    cfg : IntegratorConfig
    record : callable, optional
        Called as ``record(i, y)`` when sample ``i`` is reached.

    Returns
    -------
    y : ndarray
        State at the last sample time.
    n_steps : int
        Number of accepted steps.
    """
    times = np.asarray(sample_times, dtype=np.float64)
    y = np.array(y0, copy=True)
    t = float(t0)
    atol, rtol = cfg.abs_tol, cfg.rel_tol
    h = min(cfg.initial_step, cfg.max_step)
    k = [None] * 7
    k[0] = f(t, y)
    n_steps = 0

    for idx, target in enumerate(times):
        while t < target:
            h_try = h
            hit = t + h_try >= target
            if hit:
                h_try = target - t
            # overflow in a trial step is detected below and shrinks h
            with np.errstate(over="ignore", invalid="ignore"):
                for s in range(1, 7):
                    acc = y.copy()
                    for j, a in enumerate(A[s]):
                        if a != 0.0:
                            acc += (h_try * a) * k[j]
                    k[s] = f(t + C[s] * h_try, acc)
                y_new = acc  # stage 7 is evaluated at the 5th-order solution
                err = E[0] * k[0]
                for j in range(1, 7):
                    err = err + E[j] * k[j]
                err *= h_try
            if not np.all(np.isfinite(y_new)) or not np.all(np.isfinite(err)):
                h = h_try * FAC_MIN
                if h < H_MIN:
                    raise DivergenceError(f"non-finite state near t={t:.6g}")
                continue
            norm = _error_norm(err, y, y_new, atol, rtol)
            if norm <= 1.0:
                t = float(target) if hit else t + h_try
                y = y_new
                k[0] = k[6]
                n_steps += 1
                factor = FAC_MAX if norm == 0.0 else min(FAC_MAX, max(FAC_MIN, SAFETY * norm ** -0.2))
                h_new = h_try * factor
                if hit:
                    h_new = max(h_new, h)
                h = min(h_new, cfg.max_step)
            else:
                h = h_try * max(FAC_MIN, SAFETY * norm ** -0.2)
                if h < H_MIN:
                    raise StiffnessError(f"step size {h:.3g} below {H_MIN:g} near t={t:.6g}")
        if record is not None:
            record(idx, y)
    return y, n_steps
