import math

import numpy as np
import pytest

from quditrc._integrator import IntegratorConfig, tsit5
from quditrc._tableau import A, B, C, E
from quditrc.dynamics import integrate
from quditrc.errors import DivergenceError, StiffnessError


def _matrix():
    M = np.zeros((7, 7))
    for i, row in enumerate(A):
        M[i, : len(row)] = row
    return M


def test_tableau_row_sums():
    np.testing.assert_allclose(_matrix().sum(axis=1), C, atol=1e-15)


def test_tableau_order_conditions():
    M, b, c = _matrix(), np.array(B), np.array(C)
    # all fifth-order conditions reachable from the bushy and tall trees
    for q in range(5):
        assert b @ c**q == pytest.approx(1 / (q + 1), abs=1e-14)
    assert b @ M @ c == pytest.approx(1 / 6, abs=1e-14)
    assert b @ M @ c**2 == pytest.approx(1 / 12, abs=1e-14)
    assert b @ (c * (M @ c)) == pytest.approx(1 / 8, abs=1e-14)
    assert b @ M @ M @ c == pytest.approx(1 / 24, abs=1e-14)
    assert b @ M @ c**3 == pytest.approx(1 / 20, abs=1e-14)
    assert b @ M @ M @ M @ c == pytest.approx(1 / 120, abs=1e-14)


def test_embedded_weights_are_fourth_order():
    bhat = np.array(B) - np.array(E)
    c = np.array(C)
    assert sum(E) == pytest.approx(0.0, abs=1e-15)
    for q in range(4):
        assert bhat @ c**q == pytest.approx(1 / (q + 1), abs=1e-14)


def test_exponential_decay():
    traj = integrate(lambda t, y: -y, np.array([1.0]), (0.0, 1.0), IntegratorConfig(), [1.0])
    assert traj.samples[0, 0] == pytest.approx(math.exp(-1), abs=1e-9)


def _fixed_step_error(h):
    # huge tolerances disable rejection, so every step has size h
    cfg = IntegratorConfig(abs_tol=1e6, rel_tol=1e6, max_step=h, initial_step=h)
    y, _ = tsit5(lambda t, y: np.array([y[1], -y[0]]), np.array([0.0, 1.0]), 0.0, [2.0], cfg)
    return abs(y[0] - math.sin(2.0))


def test_convergence_order_is_five():
    e1, e2 = _fixed_step_error(0.2), _fixed_step_error(0.1)
    assert math.log2(e1 / e2) == pytest.approx(5.0, abs=0.35)


def test_samples_hit_requested_times_exactly():
    times = np.array([0.0, 0.1, 0.35, 1.0])
    traj = integrate(lambda t, y: np.cos(t) * np.ones_like(y), np.zeros(1), (0, 1), IntegratorConfig(), times)
    np.testing.assert_allclose(traj.samples[:, 0], np.sin(times), atol=1e-9)


def test_stiffness_error():
    cfg = IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12)
    with pytest.raises(StiffnessError):
        integrate(lambda t, y: np.sign(np.sin(1e13 * t)) * 1e8 * np.ones_like(y) + 1e8 * y,
                  np.ones(1), (0, 1), cfg, [1.0])


def test_divergence_error():
    with pytest.raises((DivergenceError, StiffnessError)), np.errstate(over="ignore"):
        integrate(lambda t, y: y**2, np.ones(1), (0, 2), IntegratorConfig(), [2.0])


def test_integrate_rejects_bad_sample_times():
    with pytest.raises(ValueError):
        integrate(lambda t, y: y, np.ones(1), (0, 1), IntegratorConfig(), [0.5, 0.2])
    with pytest.raises(ValueError):
        integrate(lambda t, y: y, np.ones(1), (0, 1), IntegratorConfig(), [1.5])


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(abs_tol=0)
