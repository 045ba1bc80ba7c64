import numpy as np
import pytest

from deh_sim.exceptions import BranchCutError, DimensionError, HermiticityError, UnitarityError
from deh_sim.smallmat import (
    X,
    Y,
    Z,
    as_matrix,
    eigenphases,
    ensure_hermitian,
    ensure_unitary,
    exp_i,
    hermitian_eig,
    hermiticity_defect,
    mat_exp_i,
    pauli_compose,
    pauli_decompose,
    unitarity_defect,
    unitary_log,
)


def _random_unitary(rng, dim):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_rejects_unsupported_dimensions():
    with pytest.raises(DimensionError):
        as_matrix(np.eye(4))
    with pytest.raises(DimensionError):
        as_matrix(np.ones(3))


def test_ensure_hermitian_and_unitary_reject():
    with pytest.raises(HermiticityError):
        ensure_hermitian([[0, 1], [0, 0]])
    with pytest.raises(UnitarityError):
        ensure_unitary(2 * np.eye(2))


def test_pauli_decompose_reads_literal_coefficients():
    coeffs = pauli_decompose(-0.5 * Z + 0.1 * X)
    assert coeffs.c_i == pytest.approx(0.0, abs=1e-15)
    assert coeffs.c_x == pytest.approx(0.1, abs=1e-15)
    assert coeffs.c_y == pytest.approx(0.0, abs=1e-15)
    assert coeffs.c_z == pytest.approx(-0.5, abs=1e-15)

    # projector on the ground state |0>
    ground = pauli_decompose(np.diag([1.0, 0.0]))
    assert ground.c_z == pytest.approx(0.5)
    assert ground.bloch == pytest.approx((0.0, 0.0, 1.0))


def test_pauli_compose_inverts_decompose(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    h = a + a.conj().T
    np.testing.assert_allclose(pauli_compose(pauli_decompose(h)), h, atol=1e-14)


def test_pauli_decompose_needs_qubit():
    with pytest.raises(DimensionError):
        pauli_decompose(np.eye(3))


def test_hermitian_eig_ascending(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    values, vectors = hermitian_eig(a + a.conj().T)
    assert np.all(np.diff(values) >= 0)
    assert unitarity_defect(vectors) < 1e-12


def test_mat_exp_i_known_value():
    u = mat_exp_i(Z, np.pi / 2)
    np.testing.assert_allclose(u, np.diag([-1j, 1j]), atol=1e-15)
    np.testing.assert_allclose(mat_exp_i(X + Y, 0.0), np.eye(2), atol=1e-15)


@pytest.mark.parametrize("dim", [2, 3])
def test_unitary_log_recovers_unitary(rng, dim):
    u = _random_unitary(rng, dim)
    a = unitary_log(u)
    np.testing.assert_allclose(a, a.conj().T, atol=1e-14)
    np.testing.assert_allclose(exp_i(a), u, atol=1e-12)


def test_eigenphases_principal_branch(rng):
    phases, _ = eigenphases(_random_unitary(rng, 3))
    assert np.all(phases > -np.pi) and np.all(phases <= np.pi)


def test_eigenvalue_minus_one_maps_to_plus_pi():
    swap = np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=complex)
    phases, _ = eigenphases(swap)
    assert np.max(phases) == pytest.approx(np.pi, abs=1e-12)
    np.testing.assert_allclose(exp_i(unitary_log(swap)), swap, atol=1e-12)


def test_phase_just_above_minus_pi_is_refused():
    u = np.diag([np.exp(1j * (-np.pi + 1e-10)), 1.0])
    with pytest.raises(BranchCutError):
        unitary_log(u)


def _random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a + a.conj().T


@pytest.mark.parametrize("dim", [2, 3])
def test_mat_exp_i_is_unitary_and_invertible(rng, dim):
    for _ in range(10):
        h = _random_hermitian(rng, dim)
        t = rng.uniform(-5.0, 5.0)
        u = mat_exp_i(h, t)
        assert unitarity_defect(u) <= 1e-12
        np.testing.assert_allclose(u @ mat_exp_i(h, -t), np.eye(dim), atol=1e-12)


@pytest.mark.parametrize("amp", [0.01, 0.05, 0.5])
def test_quarter_turn_about_x(amp):
    np.testing.assert_allclose(mat_exp_i(amp * X, np.pi / (2 * amp)), -1j * X, atol=1e-12)


def test_pauli_decompose_is_linear(rng):
    a, b = _random_hermitian(rng, 2), _random_hermitian(rng, 2)
    alpha, beta = 0.7, -1.3
    left = pauli_decompose(alpha * a + beta * b)
    ca, cb = pauli_decompose(a), pauli_decompose(b)
    for name in ("c_i", "c_x", "c_y", "c_z"):
        expected = alpha * getattr(ca, name) + beta * getattr(cb, name)
        assert getattr(left, name) == pytest.approx(expected, abs=1e-13)


@pytest.mark.parametrize("dim", [2, 3])
def test_hermitian_eig_diagonalises(rng, dim):
    m = _random_hermitian(rng, dim)
    values, vectors = hermitian_eig(m)
    assert values.sum() == pytest.approx(np.trace(m).real, abs=1e-12)
    np.testing.assert_allclose(vectors.conj().T @ m @ vectors, np.diag(values), atol=1e-12)


def test_hermitian_eig_of_x():
    values, vectors = hermitian_eig(X)
    np.testing.assert_allclose(values, [-1.0, 1.0], atol=1e-15)
    minus = np.array([1.0, -1.0]) / np.sqrt(2)
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    assert abs(np.vdot(minus, vectors[:, 0])) == pytest.approx(1.0, abs=1e-12)
    assert abs(np.vdot(plus, vectors[:, 1])) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("gap", [0.5, 1.0, 3.0])
def test_bare_hamiltonian_ground_state_is_zero(gap):
    values, vectors = hermitian_eig(-0.5 * gap * Z)
    np.testing.assert_allclose(values, [-0.5 * gap, 0.5 * gap], atol=1e-15)
    assert abs(vectors[0, 0]) == pytest.approx(1.0, abs=1e-12)


def test_defects_cover_a_whole_stack(rng):
    stack = np.array([_random_unitary(rng, 2) for _ in range(5)])
    assert unitarity_defect(stack) <= 1e-12
    stack[3] = 1.01 * stack[3]
    assert unitarity_defect(stack) > 1e-3
    h_stack = np.array([_random_hermitian(rng, 3) for _ in range(4)])
    assert hermiticity_defect(h_stack) <= 1e-15
    h_stack[2, 0, 1] += 0.1
    assert hermiticity_defect(h_stack) == pytest.approx(0.1, rel=1e-9)
