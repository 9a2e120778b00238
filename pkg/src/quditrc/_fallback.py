"""Pure-numpy implementations of the compiled kernels (same signatures)."""
from __future__ import annotations

import math

import numpy as np

from ._integrator import IntegratorConfig, tsit5
from .errors import DivergenceError, StiffnessError


def qudit_rhs_factory(d, Omega, K, kappa, alpha, omega, phi, beta):
    """Return ``f(t, rho)`` for the Kerr-qudit Lindblad equation in O(d^2)."""
    n = np.arange(d, dtype=np.float64)
    hd = Omega * n + K * n * n
    sq = np.sqrt(n)
    coherent = -1j * (hd[:, None] - hd[None, :]) - 0.5 * kappa * (n[:, None] + n[None, :])
    jump = kappa * np.outer(sq[1:], sq[1:])
    col = sq[1:, None]
    row = sq[None, 1:]

    def f(t, rho):
        u = beta if alpha == 0.0 else alpha * math.sin(omega * t + phi) + beta
        out = coherent * rho
        out[:-1, :-1] += jump * rho[1:, 1:]
        com = np.zeros_like(rho)
        com[:-1, :] += col * rho[1:, :]
        com[1:, :] += col * rho[:-1, :]
        com[:, 1:] -= row * rho[:, :-1]
        com[:, :-1] -= row * rho[:, 1:]
        out -= (1j * u) * com
        return out

    return f


def duffing_rhs_factory(Omega, K, kappa, alpha, omega, phi, beta):
    def f(t, a):
        u = beta if alpha == 0.0 else alpha * math.sin(omega * t + phi) + beta
        z = a[0]
        mag2 = z.real * z.real + z.imag * z.imag
        return np.array([-1j * (Omega + K) * z - 2j * K * mag2 * z - 0.5 * kappa * z - 1j * u])

    return f


def _run(f, y0, t0, times, atol, rtol, h0, hmax):
    cfg = IntegratorConfig(atol, rtol, hmax, h0)
    out = np.zeros((len(times),) + y0.shape, dtype=np.complex128)

    def record(i, y):
        out[i] = y

    try:
        _, n_steps = tsit5(f, y0, t0, times, cfg, record)
    except StiffnessError:
        return out, 1, 0
    except DivergenceError:
        return out, 2, 0
    return out, 0, n_steps


def evolve_qudit(rho0, Omega, K, kappa, alpha, omega, phi, beta, t0, times,
                 atol, rtol, h0, hmax):
    rho0 = np.ascontiguousarray(rho0, dtype=np.complex128)
    f = qudit_rhs_factory(rho0.shape[0], Omega, K, kappa, alpha, omega, phi, beta)
    return _run(f, rho0, t0, np.asarray(times, dtype=np.float64), atol, rtol, h0, hmax)


def evolve_duffing(a0, Omega, K, kappa, alpha, omega, phi, beta, t0, times,
                   atol, rtol, h0, hmax):
    f = duffing_rhs_factory(Omega, K, kappa, alpha, omega, phi, beta)
    y0 = np.array([complex(a0)], dtype=np.complex128)
    out, status, n_steps = _run(f, y0, t0, np.asarray(times, dtype=np.float64),
                                atol, rtol, h0, hmax)
    return out[:, 0].copy(), status, n_steps
