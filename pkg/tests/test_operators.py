import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quditrc.errors import ConfigError, InvalidDimensionError, StateValidityError
from quditrc.operators import (
    QuantumParams,
    build_hamiltonian,
    check_state,
    dissipator,
    expectation_x,
    fock_populations,
    fock_state,
    ground_state,
    lowering_operator,
    pure_state,
    x_operator,
)

from conftest import random_density_matrix

finite = st.floats(-50, 50, allow_nan=False)


def test_lowering_operator_d2():
    np.testing.assert_array_equal(lowering_operator(2), [[0, 1], [0, 0]])


def test_lowering_operator_d3():
    a = lowering_operator(3)
    expected = np.zeros((3, 3))
    expected[0, 1] = 1
    expected[1, 2] = math.sqrt(2)
    np.testing.assert_allclose(a, expected, atol=0)


def test_lowering_operator_d1_is_zero():
    np.testing.assert_array_equal(lowering_operator(1), np.zeros((1, 1)))


@pytest.mark.parametrize("d", [0, -3, 2.5])
def test_lowering_operator_rejects_bad_dimension(d):
    with pytest.raises(InvalidDimensionError):
        lowering_operator(d)


@pytest.mark.parametrize("d", range(1, 9))
def test_truncated_commutator(d):
    a = lowering_operator(d)
    comm = a @ a.conj().T - a.conj().T @ a
    expected = np.eye(d)
    expected[d - 1, d - 1] -= d
    np.testing.assert_allclose(comm, expected, atol=1e-14)


@pytest.mark.parametrize("params, u, expected", [
    (QuantumParams(2, Omega=1.0, K=0.0), 0.0, np.diag([0, 1])),
    (QuantumParams(3, Omega=0.0, K=1.0), 0.0, np.diag([0, 1, 4])),
    (QuantumParams(2, Omega=0.0, K=0.0), 1.0, [[0, 1], [1, 0]]),
])
def test_build_hamiltonian_examples(params, u, expected):
    np.testing.assert_allclose(build_hamiltonian(params, u), expected, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), finite, finite, finite)
def test_hamiltonian_is_hermitian(d, Omega, K, u):
    H = build_hamiltonian(QuantumParams(d, Omega, K), u)
    assert np.max(np.abs(H - H.conj().T)) <= 1e-12


def test_quantum_params_validation():
    with pytest.raises(InvalidDimensionError):
        QuantumParams(0)
    with pytest.raises(ConfigError):
        QuantumParams(2, kappa=0.0)
    with pytest.raises(ConfigError):
        QuantumParams(2, K=math.inf)


def test_dissipator_examples():
    a = lowering_operator(2)
    np.testing.assert_allclose(dissipator(a, fock_state(2, 1)), np.diag([1, -1]), atol=1e-15)
    np.testing.assert_array_equal(dissipator(a, ground_state(2)), np.zeros((2, 2)))
    np.testing.assert_allclose(dissipator(a, np.eye(2) / 2), np.diag([0.5, -0.5]), atol=1e-15)


def test_dissipator_dimension_mismatch():
    with pytest.raises(ValueError):
        dissipator(lowering_operator(3), ground_state(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_dissipator_is_traceless(d, seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(rng, d)
    L = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    assert abs(np.trace(dissipator(L, rho))) < 1e-12 * max(1.0, np.linalg.norm(L) ** 2)


def test_expectation_x_examples():
    assert expectation_x(ground_state(2)) == 0.0
    plus = pure_state([1, 1])
    assert expectation_x(plus) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert expectation_x(fock_state(2, 1)) == 0.0


@pytest.mark.parametrize("d", [2, 3, 6])
def test_expectation_x_matches_trace_formula(rng, d):
    rho = random_density_matrix(rng, d)
    full = np.trace(rho @ x_operator(d))
    assert abs(full.imag) < 1e-10
    assert expectation_x(rho) == pytest.approx(full.real, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_expectation_x_is_linear(d, w, seed):
    rng = np.random.default_rng(seed)
    r1, r2 = random_density_matrix(rng, d), random_density_matrix(rng, d)
    mixed = expectation_x(w * r1 + (1 - w) * r2)
    assert mixed == pytest.approx(w * expectation_x(r1) + (1 - w) * expectation_x(r2), abs=1e-12)


def test_fock_populations():
    np.testing.assert_array_equal(fock_populations(ground_state(3)), [1, 0, 0])
    np.testing.assert_allclose(fock_populations(np.eye(3) / 3), [1 / 3] * 3)


def test_check_state(rng):
    check_state(random_density_matrix(rng, 4))
    with pytest.raises(StateValidityError, match="trace"):
        check_state(2 * ground_state(2))
    with pytest.raises(StateValidityError, match="negative"):
        check_state(np.diag([1.5, -0.5]).astype(complex))
    bad = ground_state(2)
    bad[0, 1] = 1e-6
    with pytest.raises(StateValidityError, match="Hermiticity"):
        check_state(bad)
