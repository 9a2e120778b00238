"""Operator and state algebra for a single d-level qudit.

All rates are measured in units of the decay rate, so ``kappa`` defaults to 1.
Matrices are plain complex ndarrays in the Fock basis |0>, ..., |d-1>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidDimensionError, StateValidityError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = -1e-8


@dataclass(frozen=True)
class QuantumParams:
    """Physical parameters of the qudit reservoir (units of kappa)."""

    d: int
    Omega: float = 0.0
    K: float = 0.0
    kappa: float = 1.0

    def __post_init__(self):
        if isinstance(self.d, bool) or int(self.d) != self.d or self.d < 1:
            raise InvalidDimensionError(f"qudit dimension d must be an integer >= 1, got {self.d!r}")
        for name in ("Omega", "K", "kappa"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.kappa <= 0:
            raise ConfigError(f"kappa must be > 0, got {self.kappa!r}")


def lowering_operator(d: int) -> np.ndarray:
    """Truncated annihilation operator with sqrt(n) on the first superdiagonal."""
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise InvalidDimensionError(f"dimension must be an integer >= 1, got {d!r}")
    return np.diag(np.sqrt(np.arange(1, d, dtype=np.float64)), k=1).astype(np.complex128)


def number_operator(d: int) -> np.ndarray:
    return np.diag(np.arange(d, dtype=np.float64)).astype(np.complex128)


def x_operator(d: int) -> np.ndarray:
    a = lowering_operator(d)
    return (a + a.conj().T) / math.sqrt(2.0)


def build_hamiltonian(p: QuantumParams, u: float) -> np.ndarray:
    """Kerr Hamiltonian ``Omega n + K n^2 + u (a + a^dag)`` with hbar = 1."""
    a = lowering_operator(p.d)
    n = a.conj().T @ a
    return p.Omega * n + p.K * (n @ n) + u * (a + a.conj().T)


def dissipator(L: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Lindblad dissipator ``L rho L^dag - {L^dag L, rho} / 2``."""
    L = np.asarray(L)
    rho = np.asarray(rho)
    if L.shape != rho.shape or L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"dimension mismatch: operator {L.shape} vs state {rho.shape}")
    Ld = L.conj().T
    LdL = Ld @ L
    return L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)


def expectation_x(rho: np.ndarray) -> float:
    """Expectation of the quadrature ``X = (a + a^dag)/sqrt(2)``."""
    rho = np.asarray(rho)
    # Tr[rho X] = sqrt(2) * sum_n sqrt(n+1) Re rho[n, n+1]
    off = np.diagonal(rho, offset=1)
    return float(math.sqrt(2.0) * np.dot(np.sqrt(np.arange(1, rho.shape[0])), off.real))


def fock_populations(rho: np.ndarray) -> np.ndarray:
    return np.real(np.diagonal(np.asarray(rho))).copy()


def ground_state(d: int) -> np.ndarray:
    rho = np.zeros((d, d), dtype=np.complex128)
    rho[0, 0] = 1.0
    return rho


def fock_state(d: int, n: int) -> np.ndarray:
    rho = np.zeros((d, d), dtype=np.complex128)
    rho[n, n] = 1.0
    return rho


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def state_residuals(rho: np.ndarray) -> tuple[float, float, float]:
    """Return (|Tr rho - 1|, max |rho - rho^dag|, min eigenvalue).

    Works on a single matrix or a stack of shape (..., d, d); the stack
    returns the worst value of each residual.
    """
    rho = np.asarray(rho)
    trace_err = np.max(np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0))
    herm_err = np.max(np.abs(rho - np.swapaxes(rho, -1, -2).conj()))
    hermitian_part = 0.5 * (rho + np.swapaxes(rho, -1, -2).conj())
    min_eig = np.min(np.linalg.eigvalsh(hermitian_part))
    return float(trace_err), float(herm_err), float(min_eig)


def check_state(rho: np.ndarray, hermitian_tol: float = HERMITIAN_TOL) -> None:
    """Raise :class:`StateValidityError` if ``rho`` is not a valid density matrix."""
    trace_err, herm_err, min_eig = state_residuals(rho)
    if trace_err > TRACE_TOL:
        raise StateValidityError(f"trace deviates from 1 by {trace_err:.3g}")
    if herm_err > hermitian_tol:
        raise StateValidityError(f"Hermiticity residual {herm_err:.3g}")
    if min_eig < POSITIVITY_TOL:
        raise StateValidityError(f"negative eigenvalue {min_eig:.3g}")
