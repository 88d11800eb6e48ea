"""Transition probabilities in the Schroedinger, Heisenberg and q-tick pictures.

All three compute the probability that a final test Lambda finds eigenvalue
lambda on a state prepared as psi and left alone in between:

* Schroedinger: evolve the state, ``||P_lambda U psi||^2``;
* Heisenberg:   evolve the test, ``Lambda(t_f) = U^dagger Lambda U``, then ``||P'_lambda psi||^2``;
* q-tick:       evolve the test by N successive elementary steps,
  ``Lambda_N = U_step^dagger^N Lambda U_step^N``, one conjugation at a time.

Degenerate eigenvalues use the full eigenspace projector.
"""

from dataclasses import dataclass

import numpy as np

from . import qla
from .errors import NumericError, ValidationError
from .qla import HermitianOperator, StateVector, UnitaryOperator

PICTURE_TOL = 1e-9
BOUND_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DecayProblem:
    """Initial state, final test and its target eigenvalue, and the evolution.

    Give either ``u_total`` or ``u_step`` with ``n_steps``; in the latter case
    ``u_total`` is formed as ``u_step ** n_steps`` by repeated multiplication.
    """

    psi: StateVector
    lam_op: HermitianOperator
    target_eigenvalue: float
    u_total: UnitaryOperator | None = None
    u_step: UnitaryOperator | None = None
    n_steps: int | None = None

    def __post_init__(self):
        dim = self.psi.dim
        if self.lam_op.dim != dim:
            raise ValidationError("final test and state differ in dimension")
        if self.u_step is not None:
            if self.n_steps is None or int(self.n_steps) < 1:
                raise ValidationError("u_step needs a positive integer n_steps")
            if self.u_step.dim != dim:
                raise ValidationError("u_step dimension mismatch")
            if self.u_total is None:
                m = np.eye(dim, dtype=complex)
                for _ in range(int(self.n_steps)):
                    m = self.u_step.matrix @ m
                object.__setattr__(self, "u_total", UnitaryOperator(m))
        if self.u_total is None:
            raise ValidationError("a decay problem needs u_total or (u_step, n_steps)")
        if self.u_total.dim != dim:
            raise ValidationError("u_total dimension mismatch")
        values = qla.eig_hermitian(self.lam_op).eigenvalues
        if np.min(np.abs(values - self.target_eigenvalue)) > qla.CLUSTER_TOL:
            raise ValidationError(f"target eigenvalue {self.target_eigenvalue!r} is not in the spectrum of the final test")

    @property
    def dim(self):
        return self.psi.dim


def _clamp(p):
    if p < -BOUND_TOL or p > 1.0 + BOUND_TOL:
        raise NumericError(f"probability {p!r} out of bounds")
    return min(1.0, max(0.0, p))


def _projected_weight(op, target, vec):
    try:
        cluster = qla.eig_hermitian(op).cluster_for(target)
    except NumericError as exc:
        raise NumericError(f"eigenvalue {target!r} missing from the evolved test spectrum") from exc
    coeffs = cluster.basis.conj().T @ vec
    return float(np.vdot(coeffs, coeffs).real)


def schrodinger_prob(p):
    evolved = p.u_total.matrix @ p.psi.amplitudes
    return _clamp(_projected_weight(p.lam_op, p.target_eigenvalue, evolved))


def heisenberg_prob(p):
    u = p.u_total.matrix
    evolved = HermitianOperator.symmetrized(u.conj().T @ p.lam_op.matrix @ u)
    return _clamp(_projected_weight(evolved, p.target_eigenvalue, p.psi.amplitudes))


def evolve_test_stepwise(lam_op, u_step, n_steps):
    """Lambda_N built by ``n_steps`` successive conjugations U^dagger (.) U."""
    u = u_step.matrix
    ud = u.conj().T
    m = lam_op.matrix
    for _ in range(int(n_steps)):
        m = ud @ m @ u
    return HermitianOperator.symmetrized(m)


def qtick_prob(p):
    """Requires ``u_step`` and ``n_steps``; a problem given only ``u_total`` counts as one step."""
    u_step, n = (p.u_step, p.n_steps) if p.u_step is not None else (p.u_total, 1)
    evolved = evolve_test_stepwise(p.lam_op, u_step, n)
    return _clamp(_projected_weight(evolved, p.target_eigenvalue, p.psi.amplitudes))


@dataclass(frozen=True)
class PictureReport:
    schrodinger: float
    heisenberg: float
    qtick: float
    max_delta: float
    breach: bool

    def to_dict(self):
        return {
            "schrodinger": self.schrodinger,
            "heisenberg": self.heisenberg,
            "qtick": self.qtick,
            "max_delta": self.max_delta,
            "breach": self.breach,
        }


def compare_pictures(p, tol=PICTURE_TOL):
    s, h, q = schrodinger_prob(p), heisenberg_prob(p), qtick_prob(p)
    delta = max(abs(s - h), abs(s - q), abs(h - q))
    return PictureReport(s, h, q, delta, delta > tol)


def cluster_probabilities(p):
    """Schroedinger-picture probability for every eigenvalue cluster of the final test."""
    evolved = p.u_total.matrix @ p.psi.amplitudes
    out = []
    for cluster in qla.eig_hermitian(p.lam_op).clusters():
        coeffs = cluster.basis.conj().T @ evolved
        out.append((cluster.value, float(np.vdot(coeffs, coeffs).real)))
    return out


def random_problem(dim, n_steps, rng, degenerate=False):
    """A random instance; ``degenerate`` gives the final test a repeated eigenvalue."""
    lam_op = qla.random_hermitian(dim, rng)
    if degenerate and dim >= 3:
        w = qla.random_unitary(dim, rng).matrix
        values = np.sort(rng.normal(size=dim))
        values[1] = values[0]
        lam_op = HermitianOperator.symmetrized(w @ np.diag(values) @ w.conj().T)
    spectrum = qla.eig_hermitian(lam_op).eigenvalues
    target = float(spectrum[int(rng.integers(dim))])
    return DecayProblem(
        psi=qla.random_state(dim, rng),
        lam_op=lam_op,
        target_eigenvalue=target,
        u_step=qla.random_unitary(dim, rng),
        n_steps=n_steps,
    )
