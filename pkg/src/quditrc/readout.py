"""Linear readout: ridge training, prediction and task metrics."""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import SingularSystemError

COND_LIMIT = 1e14
VARIANCE_FLOOR = 1e-14


def ridge_train(S: np.ndarray, Y: np.ndarray, gamma: float, bias: bool = False) -> np.ndarray:
    """Output weights ``W = Y S^T (S S^T + gamma I)^-1``.

    Parameters
    ----------
    S : ndarray, shape (NT, M)
        One column of reservoir samples per training instance.
    Y : ndarray, shape (L, M)
        Labels, one column per instance.
    gamma : float
        Ridge parameter; may be negative.
    bias : bool
        Append a constant feature row (the returned W then has NT + 1 columns).

    Returns
    -------
    W : ndarray, shape (L, NT)

    Notes
    -----
    When M < NT the push-through identity
    ``S^T (S S^T + g I)^-1 = (S^T S + g I)^-1 S^T`` is used so the solve is
    done on the smaller Gram matrix; at ``gamma = 0`` this gives the
    minimum-norm interpolant. Both Gram forms are symmetric but possibly
    indefinite, so an LDL^T (Bunch-Kaufman) solve is used.
    """
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if bias:
        S = np.vstack([S, np.ones((1, S.shape[1]))])
    if S.shape[1] != Y.shape[1]:
        raise ValueError(f"S has {S.shape[1]} instances but Y has {Y.shape[1]}")
    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(Y))):
        raise ValueError("non-finite entries in S or Y")
    nt, m = S.shape
    if m < nt:
        G = S.T @ S
        G[np.diag_indices(m)] += gamma
        _check_conditioning(G, gamma)
        # W = Y G^-1 S^T  ->  W^T = S G^-1 Y^T
        return (S @ scipy.linalg.solve(G, Y.T, assume_a="sym", check_finite=False)).T
    G = S @ S.T
    G[np.diag_indices(nt)] += gamma
    _check_conditioning(G, gamma)
    # G W^T = S Y^T with G symmetric
    return scipy.linalg.solve(G, S @ Y.T, assume_a="sym", check_finite=False).T


def _check_conditioning(G: np.ndarray, gamma: float) -> None:
    sv = np.linalg.svd(G, compute_uv=False)
    if sv[-1] == 0.0 or sv[0] / sv[-1] > COND_LIMIT:
        cond = np.inf if sv[-1] == 0.0 else sv[0] / sv[-1]
        raise SingularSystemError(f"ridge system ill-conditioned (cond {cond:.3g}) at gamma={gamma:g}")


def predict(W: np.ndarray, s: np.ndarray) -> np.ndarray:
    W = np.atleast_2d(W)
    s = np.asarray(s, dtype=np.float64)
    if s.shape[0] != W.shape[1]:
        if s.shape[0] + 1 == W.shape[1]:  # trained with a bias row
            s = np.concatenate([s, np.ones((1,) + s.shape[1:])])
        else:
            raise ValueError(f"sample length {s.shape[0]} does not match weights {W.shape}")
    return W @ s


def rmse(est, act) -> float:
    est = np.asarray(est, dtype=np.float64)
    act = np.asarray(act, dtype=np.float64)
    if est.shape != act.shape:
        raise ValueError(f"length mismatch {est.shape} vs {act.shape}")
    if est.size == 0:
        raise ValueError("rmse of empty vectors")
    return float(np.sqrt(np.mean((est - act) ** 2)))


def k_delay_r2(targets, predictions, input_variance: float | None = None) -> float:
    """Squared correlation ``cov^2[target, pred] / (var[u] var[pred])``.

    ``input_variance`` is the variance of the undelayed input; it defaults to
    the variance of ``targets``. Population moments throughout. Returns 0
    when either variance is below ``VARIANCE_FLOOR``.
    """
    y = np.asarray(targets, dtype=np.float64)
    p = np.asarray(predictions, dtype=np.float64)
    if y.shape != p.shape:
        raise ValueError(f"length mismatch {y.shape} vs {p.shape}")
    if y.size < 2:
        raise ValueError("k_delay_r2 needs at least two samples")
    var_u = float(np.var(y)) if input_variance is None else float(input_variance)
    var_p = float(np.var(p))
    if var_u < VARIANCE_FLOOR or var_p < VARIANCE_FLOOR or np.var(y) < VARIANCE_FLOOR:
        return 0.0
    cov = float(np.mean((y - y.mean()) * (p - p.mean())))
    return min(1.0, cov * cov / (var_u * var_p))


def stmc(r2_values) -> float:
    r2 = np.asarray(r2_values, dtype=np.float64)
    if np.any(r2 < -1e-9) or np.any(r2 > 1 + 1e-9) or not np.all(np.isfinite(r2)):
        raise ValueError("r2 values must lie in [0, 1]")
    return float(np.clip(r2, 0.0, 1.0).sum())
