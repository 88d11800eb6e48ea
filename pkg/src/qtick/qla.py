"""Dense complex linear algebra for small Hilbert spaces.

States and operators wrap read-only ``complex128`` numpy arrays. The
Kronecker convention is fixed throughout qtick: in ``tensor(a, b)`` the left
factor is the slow index, so composite index ``i = i_a * dim_b + i_b``. In
two-particle spin spaces the electron is always the left factor.
"""

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ValidationError

MAX_DIM = 64
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-12
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
CLUSTER_TOL = 1e-9
PHASE_TOL = 1e-8
SCHMIDT_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def _frozen(array):
    array = np.array(array, dtype=complex)
    if not np.all(np.isfinite(array)):
        raise ValidationError("non-finite entry")
    array.setflags(write=False)
    return array


# --------------------------------------------------------------------------
# States
# --------------------------------------------------------------------------


class StateVector:
    """A vector of complex amplitudes, normalized unless built via ``unnormalized``."""

    __slots__ = ("_amps",)

    def __init__(self, amplitudes):
        amps = _frozen(amplitudes)
        _check_vector_shape(amps)
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValidationError(f"state is not normalized (|psi|^2 = {norm2!r})")
        self._amps = amps

    @classmethod
    def unnormalized(cls, amplitudes):
        """Intermediate vector (e.g. a projection) exempt from the norm check."""
        obj = cls.__new__(cls)
        amps = _frozen(amplitudes)
        _check_vector_shape(amps)
        obj._amps = amps
        return obj

    @classmethod
    def basis(cls, dim, index):
        amps = np.zeros(dim, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @property
    def amplitudes(self):
        return self._amps

    @property
    def dim(self):
        return self._amps.shape[0]

    def norm(self):
        return float(np.linalg.norm(self._amps))

    def normalized(self):
        n = self.norm()
        if n == 0.0:
            raise NumericError("cannot normalize the zero vector")
        return StateVector(self._amps / n)

    def inner(self, other):
        """<self|other>."""
        return complex(np.vdot(self._amps, other.amplitudes))

    def fidelity(self, other):
        """|<self|other>|^2, insensitive to global phase."""
        return abs(self.inner(other)) ** 2

    def phase_fixed(self):
        return StateVector.unnormalized(_fix_phase(self._amps.copy()))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._amps, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return np.array_equal(self._amps, other._amps)

    __hash__ = None

    def __repr__(self):
        return f"StateVector({np.array2string(self._amps, precision=6)})"


def _check_vector_shape(amps):
    if amps.ndim != 1 or amps.shape[0] < 1:
        raise ValidationError(f"state must be a nonempty 1-D array, got shape {amps.shape}")
    if amps.shape[0] > MAX_DIM:
        raise ValidationError(f"dimension {amps.shape[0]} exceeds cap {MAX_DIM}")


def _fix_phase(vec):
    """Rotate global phase so the first component with |c| > PHASE_TOL is real positive."""
    for i, c in enumerate(vec):
        mag = abs(c)
        if mag > PHASE_TOL:
            vec *= c.conjugate() / mag
            vec[i] = mag
            break
    return vec


# --------------------------------------------------------------------------
# Operators
# --------------------------------------------------------------------------


class Operator:
    """A dense square complex matrix."""

    __slots__ = ("_m",)

    def __init__(self, matrix):
        m = _frozen(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValidationError(f"operator must be a nonempty square matrix, got shape {m.shape}")
        if m.shape[0] > MAX_DIM:
            raise ValidationError(f"dimension {m.shape[0]} exceeds cap {MAX_DIM}")
        self._m = m
        self._validate()

    def _validate(self):
        pass

    @property
    def matrix(self):
        return self._m

    @property
    def dim(self):
        return self._m.shape[0]

    def dagger(self):
        return type(self)(self._m.conj().T)

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return apply(self, other)
        if isinstance(other, Operator):
            if other.dim != self.dim:
                raise ValidationError("operator dimensions differ")
            return Operator(self._m @ other.matrix)
        return NotImplemented

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._m, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return np.array_equal(self._m, other._m)

    __hash__ = None

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class HermitianOperator(Operator):
    """Operator with entries[i][j] == conj(entries[j][i]) to within 1e-12."""

    __slots__ = ()

    def _validate(self):
        dev = np.max(np.abs(self._m - self._m.conj().T))
        if dev > HERMITIAN_TOL:
            raise ValidationError(f"matrix is not Hermitian (max deviation {dev:.3g})")

    @classmethod
    def symmetrized(cls, matrix):
        """Hermitian part of ``matrix``; removes round-off from conjugations."""
        m = np.asarray(matrix, dtype=complex)
        return cls(0.5 * (m + m.conj().T))


class UnitaryOperator(Operator):
    """Operator with U U^dagger == I to within 1e-12."""

    __slots__ = ()

    def _validate(self):
        dev = np.max(np.abs(self._m @ self._m.conj().T - np.eye(self.dim)))
        if dev > UNITARY_TOL:
            raise ValidationError(f"matrix is not unitary (max deviation {dev:.3g})")

    def __matmul__(self, other):
        if isinstance(other, UnitaryOperator):
            if other.dim != self.dim:
                raise ValidationError("operator dimensions differ")
            return UnitaryOperator(self._m @ other.matrix)
        return super().__matmul__(other)

    def conjugate(self, op):
        """U op U^dagger, Hermitian-projected when ``op`` is Hermitian."""
        m = self._m @ op.matrix @ self._m.conj().T
        if isinstance(op, HermitianOperator):
            return HermitianOperator.symmetrized(m)
        return Operator(m)


def identity(dim):
    return UnitaryOperator(np.eye(dim, dtype=complex))


# --------------------------------------------------------------------------
# Spin-1/2 building blocks
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AxisVector:
    """A unit 3-vector (|a|^2 == 1 to within 1e-12)."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValidationError(f"axis component {name} is not finite")
            object.__setattr__(self, name, value)
        n2 = self.x ** 2 + self.y ** 2 + self.z ** 2
        if abs(n2 - 1.0) > NORM_TOL:
            raise ValidationError(f"axis not unit-norm (|a|^2 = {n2!r})")

    @classmethod
    def normalized(cls, x, y, z):
        n = math.sqrt(x * x + y * y + z * z)
        if n == 0.0:
            raise ValidationError("cannot normalize the zero axis")
        return cls(x / n, y / n, z / n)

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        x, y, z = value
        return cls(x, y, z)

    def as_array(self):
        return np.array([self.x, self.y, self.z])

    def dot(self, other):
        return self.x * other.x + self.y * other.y + self.z * other.z

    def __iter__(self):
        return iter((self.x, self.y, self.z))


X_AXIS = AxisVector(1.0, 0.0, 0.0)
Y_AXIS = AxisVector(0.0, 1.0, 0.0)
Z_AXIS = AxisVector(0.0, 0.0, 1.0)


def pauli_dot(axis):
    """sigma . a for a unit axis; eigenvalues are exactly -1 and +1."""
    a = AxisVector.coerce(axis)
    return HermitianOperator(a.x * SIGMA_X + a.y * SIGMA_Y + a.z * SIGMA_Z)


def su2_from(axis, angle):
    """exp(-i angle (sigma . a) / 2) = cos(angle/2) I - i sin(angle/2) (sigma . a)."""
    a = AxisVector.coerce(axis)
    half = 0.5 * float(angle)
    m = math.cos(half) * np.eye(2) - 1j * math.sin(half) * pauli_dot(a).matrix
    return UnitaryOperator(m)


# --------------------------------------------------------------------------
# Eigendecomposition
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenCluster:
    """Eigenvalues equal to within CLUSTER_TOL, with the basis of their eigenspace."""

    value: float
    basis: np.ndarray  # dim x multiplicity, orthonormal columns

    @property
    def multiplicity(self):
        return self.basis.shape[1]

    def projector(self):
        return self.basis @ self.basis.conj().T


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Ascending real spectrum paired with phase-fixed orthonormal eigenvectors.

    ``vectors`` holds the eigenvectors as columns; ``eigenvectors[k]`` pairs
    with ``eigenvalues[k]``. Within a cluster of eigenvalues closer than
    CLUSTER_TOL the order is set by the tie-break rule, so values there are
    ascending only up to that tolerance.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    sweeps: int

    @property
    def eigenvectors(self):
        return tuple(StateVector.unnormalized(self.vectors[:, k]) for k in range(self.vectors.shape[1]))

    def clusters(self, tol=CLUSTER_TOL):
        groups = []
        start = 0
        vals = self.eigenvalues
        for k in range(1, len(vals) + 1):
            if k == len(vals) or vals[k] - vals[k - 1] > tol:
                groups.append(EigenCluster(float(np.mean(vals[start:k])), self.vectors[:, start:k]))
                start = k
        return groups

    def cluster_for(self, value, tol=CLUSTER_TOL):
        """The eigenspace whose eigenvalue lies within ``tol`` of ``value``."""
        for cluster in self.clusters():
            if abs(cluster.value - value) <= tol:
                return cluster
        raise NumericError(f"eigenvalue {value!r} not found in spectrum {list(self.eigenvalues)}")

    def reconstruct(self):
        v = self.vectors
        return v @ np.diag(self.eigenvalues) @ v.conj().T


def eig_hermitian(h):
    """Full eigendecomposition of a Hermitian operator by cyclic complex Jacobi sweeps.

    Deterministic: fixed pivot order, convergence when every off-diagonal
    magnitude is below 1e-14, at most 100 sweeps. Results are cached by the
    exact bytes of the matrix.
    """
    if not isinstance(h, HermitianOperator):
        h = HermitianOperator(h)
    m = h.matrix
    return _eig_cached(m.tobytes(), m.shape[0])


@functools.lru_cache(maxsize=16384)
def _eig_cached(raw, n):
    a = np.frombuffer(raw, dtype=complex).reshape(n, n)
    a = 0.5 * (a + a.conj().T)
    values, vectors, sweeps = _jacobi(a)
    for k in range(n):
        _fix_phase(vectors[:, k])
    order = _sorted_order(values, vectors)
    values = values[order]
    vectors = np.ascontiguousarray(vectors[:, order])
    values.setflags(write=False)
    vectors.setflags(write=False)
    return EigenDecomposition(values, vectors, sweeps)


def _jacobi(a):
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=complex)
    sweeps = 0
    while True:
        off = 0.0
        if n > 1:
            off = float(np.max(np.abs(a - np.diag(np.diag(a)))))
        if off < JACOBI_TOL:
            break
        if sweeps == JACOBI_MAX_SWEEPS:
            raise NumericError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-diagonal {off:.3g})")
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = complex(a[p, q])
                r = abs(apq)
                if r < JACOBI_TOL:
                    continue
                phase_conj = apq.conjugate() / r
                tau = (float(a[q, q].real) - float(a[p, p].real)) / (2.0 * r)
                t = (1.0 if tau >= 0.0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # G = diag(1, e^{-i phi}) . [[c, s], [-s, c]]; A <- G^H A G, V <- V G
                sp = -s * phase_conj
                cp = c * phase_conj
                ap = a[:, p].copy()
                aq = a[:, q]
                a[:, p] = c * ap + sp * aq
                a[:, q] = s * ap + cp * aq
                rp = a[p, :].copy()
                rq = a[q, :]
                a[p, :] = c * rp + sp.conjugate() * rq
                a[q, :] = s * rp + cp.conjugate() * rq
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp + sp * vq
                v[:, q] = s * vp + cp * vq
    return np.diag(a).real.copy(), v, sweeps


def _sorted_order(values, vectors):
    order = sorted(range(len(values)), key=lambda k: values[k])
    result = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and values[order[j]] - values[order[j - 1]] <= CLUSTER_TOL:
            j += 1
        group = order[i:j]
        if len(group) > 1:
            group.sort(key=lambda k: _lex_key(vectors[:, k]))
        result.extend(group)
        i = j
    return result


def _lex_key(vec):
    return tuple(x for c in vec for x in (c.real, c.imag))


# --------------------------------------------------------------------------
# Products, application, entanglement
# --------------------------------------------------------------------------


def tensor(a, b):
    """Kronecker product of two states or two operators (left factor = slow index)."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        if a.dim * b.dim > MAX_DIM:
            raise ValidationError(f"product dimension {a.dim * b.dim} exceeds cap {MAX_DIM}")
        return StateVector.unnormalized(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, Operator) and isinstance(b, Operator):
        if a.dim * b.dim > MAX_DIM:
            raise ValidationError(f"product dimension {a.dim * b.dim} exceeds cap {MAX_DIM}")
        m = np.kron(a.matrix, b.matrix)
        for kind in (UnitaryOperator, HermitianOperator):
            if isinstance(a, kind) and isinstance(b, kind):
                return kind(m)
        return Operator(m)
    raise ValidationError("tensor needs two states or two operators")


def tensor_all(*factors):
    return functools.reduce(tensor, factors)


def apply(op, v):
    """Matrix-vector product, returned without renormalization."""
    if op.dim != v.dim:
        raise ValidationError(f"dimension mismatch: operator {op.dim}, state {v.dim}")
    return StateVector.unnormalized(op.matrix @ v.amplitudes)


def schmidt_coefficients(state, dim_a, dim_b):
    if dim_a * dim_b != state.dim:
        raise ValidationError(f"{dim_a} x {dim_b} does not match state dimension {state.dim}")
    return np.linalg.svd(state.amplitudes.reshape(dim_a, dim_b), compute_uv=False)


def schmidt_rank(state, dim_a, dim_b):
    """Number of Schmidt coefficients above 1e-10; 1 means a product state."""
    return int(np.sum(schmidt_coefficients(state, dim_a, dim_b) > SCHMIDT_TOL))


def is_product(state, dims):
    """True when ``state`` factorizes across every cut of the factor list ``dims``."""
    total = int(np.prod(dims))
    if total != state.dim:
        raise ValidationError(f"factor dims {list(dims)} do not match state dimension {state.dim}")
    left = 1
    for d in dims[:-1]:
        left *= d
        if schmidt_rank(state, left, total // left) > 1:
            return False
    return True


def factorize(state, dims):
    """Split a product state into normalized, phase-fixed factors of dimensions ``dims``.

    The tensor product of the factors equals ``state`` up to a global phase.
    """
    if int(np.prod(dims)) != state.dim:
        raise ValidationError(f"factor dims {list(dims)} do not match state dimension {state.dim}")
    rest = state.amplitudes / state.norm()
    factors = []
    for d in dims[:-1]:
        u, s, vh = np.linalg.svd(rest.reshape(d, -1), full_matrices=False)
        if len(s) > 1 and s[1] > SCHMIDT_TOL:
            raise ValidationError("state is entangled across the requested factor split")
        factors.append(StateVector(_fix_phase(u[:, 0].copy())))
        rest = s[0] * vh[0]
    factors.append(StateVector(_fix_phase(rest / np.linalg.norm(rest))))
    return factors


def is_eigenvector(op, v, value, tol=1e-10):
    return float(np.linalg.norm(op.matrix @ v.amplitudes - value * v.amplitudes)) <= tol


# --------------------------------------------------------------------------
# Random instances (numpy Generator required)
# --------------------------------------------------------------------------


def random_axis(rng):
    while True:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n > 1e-6:
            v = v / n
            return AxisVector(*v)


def random_state(dim, rng):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(v / np.linalg.norm(v))


def random_hermitian(dim, rng):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HermitianOperator.symmetrized(m)


def random_unitary(dim, rng):
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return UnitaryOperator(q * (d / np.abs(d)))
