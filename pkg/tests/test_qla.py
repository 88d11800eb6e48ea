import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtick import qla
from qtick.errors import NumericError, ValidationError
from qtick.qla import AxisVector, HermitianOperator, StateVector, UnitaryOperator

from .conftest import angles, axes, seeds

UP = StateVector([1, 0])
DOWN = StateVector([0, 1])
R2 = 1 / math.sqrt(2)


# -- states and operators ---------------------------------------------------


def test_state_rejects_unnormalized():
    with pytest.raises(ValidationError):
        StateVector([1, 1])
    assert StateVector.unnormalized([1, 1]).norm() == pytest.approx(math.sqrt(2))


def test_state_rejects_non_finite_and_oversized():
    with pytest.raises(ValidationError):
        StateVector([np.nan, 1])
    with pytest.raises(ValidationError):
        StateVector.basis(65, 0)


def test_state_is_read_only():
    with pytest.raises(ValueError):
        UP.amplitudes[0] = 0


def test_hermitian_and_unitary_checks():
    with pytest.raises(ValidationError):
        HermitianOperator([[0, 1], [0, 0]])
    with pytest.raises(ValidationError):
        UnitaryOperator([[1, 1], [0, 1]])
    assert HermitianOperator.symmetrized([[0, 2], [0, 0]]) == HermitianOperator([[0, 1], [1, 0]])


def test_axis_requires_unit_norm():
    with pytest.raises(ValidationError):
        AxisVector(1, 1, 0)
    a = AxisVector.normalized(1, 1, 0)
    assert a.x == pytest.approx(R2)
    with pytest.raises(ValidationError):
        AxisVector.normalized(0, 0, 0)


# -- pauli_dot and su2_from -------------------------------------------------


def test_pauli_dot_examples():
    np.testing.assert_array_equal(qla.pauli_dot((0, 0, 1)).matrix, np.diag([1, -1]))
    np.testing.assert_array_equal(qla.pauli_dot((1, 0, 0)).matrix, [[0, 1], [1, 0]])
    dec = qla.eig_hermitian(qla.pauli_dot((1, 0, 0)))
    np.testing.assert_allclose(dec.eigenvalues, [-1, 1], atol=1e-15)
    np.testing.assert_allclose(dec.vectors[:, 0], [R2, -R2], atol=1e-15)
    np.testing.assert_allclose(dec.vectors[:, 1], [R2, R2], atol=1e-15)
    with pytest.raises(ValidationError):
        qla.pauli_dot((1, 1, 0))


@given(axes())
def test_pauli_dot_squares_to_identity(a):
    s = qla.pauli_dot(a).matrix
    assert np.abs(s @ s - np.eye(2)).max() <= 1e-12
    assert abs(np.trace(s)) <= 1e-15
    np.testing.assert_allclose(qla.eig_hermitian(qla.pauli_dot(a)).eigenvalues, [-1, 1], atol=1e-12)


def test_su2_examples():
    np.testing.assert_allclose(qla.su2_from(qla.Z_AXIS, 0).matrix, np.eye(2), atol=0)
    np.testing.assert_allclose(qla.su2_from(qla.Z_AXIS, math.pi).matrix, np.diag([-1j, 1j]), atol=1e-15)
    for theta in (0.3, 1.0, 2.5):
        u = qla.su2_from(qla.X_AXIS, theta)
        assert u.matrix[0, 0] == pytest.approx(math.cos(theta / 2), abs=1e-15)


@given(axes(), angles, angles)
def test_su2_composition_and_determinant(a, t, p):
    lhs = qla.su2_from(a, t).matrix @ qla.su2_from(a, p).matrix
    assert np.abs(lhs - qla.su2_from(a, t + p).matrix).max() <= 1e-12
    assert abs(np.linalg.det(qla.su2_from(a, t).matrix) - 1) <= 1e-12


# -- eigendecomposition -----------------------------------------------------


def test_eig_sigma_z():
    dec = qla.eig_hermitian(qla.pauli_dot(qla.Z_AXIS))
    np.testing.assert_array_equal(dec.eigenvalues, [-1, 1])
    assert dec.eigenvectors[0] == DOWN
    assert dec.eigenvectors[1] == UP


def test_eig_total_spin_spectrum():
    s = qla.pauli_dot(qla.Z_AXIS)
    total = HermitianOperator(qla.tensor(s, qla.identity(2)).matrix + qla.tensor(qla.identity(2), s).matrix)
    np.testing.assert_allclose(qla.eig_hermitian(total).eigenvalues, [-2, 0, 0, 2], atol=1e-14)


def test_eig_matches_numpy_oracle(rng):
    # independent oracle: LAPACK eigenvalues
    for dim in (2, 3, 5, 8, 16):
        h = qla.random_hermitian(dim, rng)
        dec = qla.eig_hermitian(h)
        np.testing.assert_allclose(dec.eigenvalues, np.linalg.eigvalsh(h.matrix), atol=1e-10)


def test_eig_invariants_random(rng):
    for _ in range(200):
        dim = int(rng.choice([2, 4, 8, 16]))
        h = qla.random_hermitian(dim, rng)
        dec = qla.eig_hermitian(h)
        v = dec.vectors
        assert np.abs(h.matrix - dec.reconstruct()).max() <= 1e-9
        assert np.abs(v.conj().T @ v - np.eye(dim)).max() <= 1e-10
        for k in range(dim):
            assert np.linalg.norm(h.matrix @ v[:, k] - dec.eigenvalues[k] * v[:, k]) <= 1e-10
            first = next(c for c in v[:, k] if abs(c) > qla.PHASE_TOL)
            assert first.imag == 0 and first.real > 0
        assert np.all(np.diff(dec.eigenvalues) >= -qla.CLUSTER_TOL)


def test_eig_is_deterministic_and_handles_degeneracy():
    h = qla.HermitianOperator(np.diag([1.0, 1.0, -2.0]))
    a, b = qla._jacobi(np.array(h.matrix)), qla._jacobi(np.array(h.matrix))
    np.testing.assert_array_equal(a[1], b[1])
    clusters = qla.eig_hermitian(h).clusters()
    assert [c.multiplicity for c in clusters] == [1, 2]
    assert np.allclose(clusters[1].projector(), np.diag([1, 1, 0]))


def test_cluster_for_missing_value():
    with pytest.raises(NumericError):
        qla.eig_hermitian(qla.pauli_dot(qla.Z_AXIS)).cluster_for(0.5)


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        qla.eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


# -- tensor, apply, Schmidt rank ---------------------------------------------


def test_tensor_examples():
    np.testing.assert_array_equal(qla.tensor(UP, DOWN).amplitudes, [0, 1, 0, 0])
    assert qla.tensor(qla.identity(2), qla.identity(2)) == qla.identity(4)
    assert isinstance(qla.tensor(qla.identity(2), qla.identity(2)), UnitaryOperator)
    with pytest.raises(ValidationError):
        qla.tensor(UP, qla.identity(2))


@given(seeds)
def test_tensor_associative_on_states(seed):
    rng = np.random.default_rng(seed)
    u, v, w = (qla.random_state(d, rng) for d in (2, 3, 2))
    lhs = qla.tensor(qla.tensor(u, v), w).amplitudes
    rhs = qla.tensor(u, qla.tensor(v, w)).amplitudes
    assert np.abs(lhs - rhs).max() <= 1e-15


def test_apply_examples():
    assert qla.apply(qla.pauli_dot(qla.X_AXIS), UP) == DOWN
    assert qla.apply(qla.identity(2), DOWN) == DOWN
    with pytest.raises(ValidationError):
        qla.apply(qla.identity(4), UP)


def test_schmidt_rank_examples():
    singlet = StateVector([0, R2, -R2, 0])
    assert qla.schmidt_rank(qla.tensor(UP, DOWN), 2, 2) == 1
    assert qla.schmidt_rank(singlet, 2, 2) == 2
    assert qla.schmidt_rank(StateVector([R2, R2, 0, 0]), 2, 2) == 1
    with pytest.raises(ValidationError):
        qla.schmidt_rank(singlet, 2, 3)


@given(seeds)
def test_schmidt_rank_local_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    u = qla.tensor(qla.random_unitary(2, rng), qla.random_unitary(3, rng))
    product = qla.tensor(qla.random_state(2, rng), qla.random_state(3, rng))
    generic = qla.random_state(6, rng)
    for psi in (product, generic):
        assert qla.schmidt_rank(qla.apply(u, psi), 2, 3) == qla.schmidt_rank(psi, 2, 3)


def test_factorize_round_trip(rng):
    for _ in range(20):
        a, b, c = qla.random_state(2, rng), qla.random_state(3, rng), qla.random_state(2, rng)
        psi = qla.tensor_all(a, b, c)
        parts = qla.factorize(psi, [2, 3, 2])
        rebuilt = qla.tensor_all(*parts)
        assert abs(abs(rebuilt.inner(psi)) - 1) <= 1e-12
        assert parts[0].fidelity(a) == pytest.approx(1, abs=1e-12)
    with pytest.raises(ValidationError):
        qla.factorize(StateVector([0, R2, -R2, 0]), [2, 2])


def test_random_unitary_is_unitary(rng):
    for d in (2, 4, 16):
        u = qla.random_unitary(d, rng).matrix
        assert np.abs(u @ u.conj().T - np.eye(d)).max() <= 1e-12
