"""Spin-singlet EPR process with the two q-tick orderings.

Tick 1 applies a constrained test to the singlet: its outcomes are
simultaneous eigenstates of the single-particle spin test and of the total
spin along the same axis, the latter with eigenvalue zero (a null sub-test).
Those outcomes are product states, so the untested particle's factor is
passed on to an ordinary single-particle spin test in tick 2.

``ELECTRON_FIRST`` tests the electron along b first; ``POSITRON_FIRST``
tests the positron along c first. Joint statistics agree for both.
"""

import concurrent.futures
import enum
import math
from dataclasses import dataclass

import numpy as np

from . import automaton, qla
from .automaton import Test
from .errors import NumericError, ValidationError
from .qla import AxisVector, HermitianOperator, StateVector
from .rng import derive_seed, make_rng

SIGNS = (1, -1)
ZERO_EIGENVALUE_TOL = 1e-9
CONSTRAINT_TOL = 1e-10
TSIRELSON = 2.0 * math.sqrt(2.0)

_I2 = qla.identity(2)


class Topology(str, enum.Enum):
    ELECTRON_FIRST = "electron_first"
    POSITRON_FIRST = "positron_first"


class Particle(str, enum.Enum):
    ELECTRON = "electron"
    POSITRON = "positron"


@dataclass(frozen=True)
class EprConfig:
    axis_b: AxisVector
    axis_c: AxisVector
    topology: Topology = Topology.ELECTRON_FIRST
    runs: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "axis_b", AxisVector.coerce(self.axis_b))
        object.__setattr__(self, "axis_c", AxisVector.coerce(self.axis_c))
        object.__setattr__(self, "topology", Topology(self.topology))
        if int(self.runs) < 1:
            raise ValidationError("runs must be positive")

    def to_dict(self):
        return {
            "b": list(self.axis_b),
            "c": list(self.axis_c),
            "topology": self.topology.value,
            "runs": self.runs,
            "seed": self.seed,
        }


# --------------------------------------------------------------------------
# Operators and states
# --------------------------------------------------------------------------


def make_singlet():
    """(|up,down> - |down,up>)/sqrt(2), electron as the left factor."""
    r = 1.0 / math.sqrt(2.0)
    return StateVector([0.0, r, -r, 0.0])


def sigma_total(axis):
    """(sigma_e . a) x I + I x (sigma_p . a)."""
    s = qla.pauli_dot(axis)
    return HermitianOperator(qla.tensor(s, _I2).matrix + qla.tensor(_I2, s).matrix)


def s_squared():
    """Sum over i of (sigma_e^i x I + I x sigma_p^i)^2; 0 on the singlet, 8 on the triplet."""
    total = np.zeros((4, 4), dtype=complex)
    eye = np.eye(2)
    for p in qla.PAULI:
        s = np.kron(p, eye) + np.kron(eye, p)
        total += s @ s
    return HermitianOperator(total)


def spin_state(axis, sign):
    """|+a> or |-a>: the phase-fixed eigenvector of sigma . a with eigenvalue ``sign``."""
    cluster = qla.eig_hermitian(qla.pauli_dot(axis)).cluster_for(float(sign))
    return StateVector(cluster.basis[:, 0])


# --------------------------------------------------------------------------
# The constrained test
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConstrainedTest:
    """Single-particle spin test with a total-spin null sub-test.

    ``outcomes`` holds ``(eigenvalue, state)`` pairs, eigenvalue -1 first.
    """

    primary_op: HermitianOperator
    null_op: HermitianOperator
    outcomes: tuple
    particle: Particle
    axis: AxisVector

    def __post_init__(self):
        for value, state in self.outcomes:
            if not qla.is_eigenvector(self.primary_op, state, value, CONSTRAINT_TOL):
                raise NumericError(f"outcome {value:+d} is not an eigenstate of the primary operator")
            if not qla.is_eigenvector(self.null_op, state, 0.0, CONSTRAINT_TOL):
                raise NumericError(f"outcome {value:+d} is not annihilated by the null operator")
            if qla.schmidt_rank(state, 2, 2) != 1:
                raise NumericError(f"outcome {value:+d} is entangled")

    def outcome_operator(self):
        """sum_k lambda_k |o_k><o_k|: a single operator whose +-1 eigenstates are the outcomes.

        Its eigenvalue-0 eigenspace is orthogonal to both outcomes and never
        occurs for input states in their span, such as the singlet.
        """
        m = np.zeros((4, 4), dtype=complex)
        for value, state in self.outcomes:
            v = state.amplitudes
            m += value * np.outer(v, v.conj())
        return HermitianOperator.symmetrized(m)

    def as_test(self, test_id, stage=automaton.Stage.ACTIVE):
        return Test(test_id, (self.outcome_operator(),), stage)


def constrained_test(axis, particle=Particle.ELECTRON):
    """Solve for the outcomes numerically.

    Diagonalize the single-particle operator, restrict the total-spin operator
    to each of its eigenspaces, and keep the eigenvalue-0 vector found there.
    """
    axis = AxisVector.coerce(axis)
    particle = Particle(particle)
    s = qla.pauli_dot(axis)
    primary = qla.tensor(s, _I2) if particle is Particle.ELECTRON else qla.tensor(_I2, s)
    null = sigma_total(axis)
    outcomes = []
    for cluster in qla.eig_hermitian(primary).clusters():
        basis = cluster.basis
        restricted = HermitianOperator.symmetrized(basis.conj().T @ null.matrix @ basis)
        try:
            zero = qla.eig_hermitian(restricted).cluster_for(0.0, ZERO_EIGENVALUE_TOL)
        except NumericError as exc:
            raise NumericError(f"no eigenvalue-0 vector in the {cluster.value:+.0f} eigenspace") from exc
        if zero.multiplicity != 1:
            raise NumericError("eigenvalue-0 solution is not unique")
        vec = qla._fix_phase(basis @ zero.basis[:, 0])
        outcomes.append((1 if cluster.value > 0 else -1, StateVector(vec / np.linalg.norm(vec))))
    return ConstrainedTest(primary, null, tuple(outcomes), particle, axis)


# --------------------------------------------------------------------------
# Runs
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EprRunRecord:
    electron_sign: int
    positron_sign: int
    tick_order: tuple
    ticks: tuple

    def __post_init__(self):
        if len(self.ticks) != 2:
            raise ValidationError("an EPR run takes exactly two q-ticks")

    def to_dict(self):
        return {
            "electron": self.electron_sign,
            "positron": self.positron_sign,
            "tick_order": list(self.tick_order),
            "ticks": [automaton.record_to_dict(r) for r in self.ticks],
        }


class _Plan:
    """Tests for both ticks of one topology, built once per configuration."""

    def __init__(self, b, c, topology):
        self.topology = Topology(topology)
        self.singlet = make_singlet()
        if self.topology is Topology.ELECTRON_FIRST:
            first_axis, second_axis, first_particle = b, c, Particle.ELECTRON
            self.order = ("Sigma1", "Sigma2")
        else:
            first_axis, second_axis, first_particle = c, b, Particle.POSITRON
            self.order = ("Sigma2", "Sigma1")
        self.first = constrained_test(first_axis, first_particle).as_test(self.order[0])
        self.second = Test(self.order[1], (qla.pauli_dot(second_axis),))
        self._relayed = {}

    def relayed_factor(self, outcome_state):
        """The factor of the tick-1 outcome that the second test acts on."""
        key = outcome_state.amplitudes.tobytes()
        if key not in self._relayed:
            electron, positron = qla.factorize(outcome_state, [2, 2])
            self._relayed[key] = positron if self.topology is Topology.ELECTRON_FIRST else electron
        return self._relayed[key]

    def signs(self, first_value, second_value):
        s1 = 1 if first_value > 0 else -1
        s2 = 1 if second_value > 0 else -1
        return (s1, s2) if self.topology is Topology.ELECTRON_FIRST else (s2, s1)

    def run(self, rng):
        rec1 = automaton.perform_test(self.first, self.singlet, rng, inputs=("pi",))
        factor = self.relayed_factor(rec1.outcome_state)
        rec2 = automaton.perform_test(self.second, factor, rng, inputs=("r",))
        e, p = self.signs(rec1.outcome_eigenvalue, rec2.outcome_eigenvalue)
        return EprRunRecord(e, p, self.order, (rec1, rec2))


def _run_range(cfg, start, stop):
    plan = _Plan(cfg.axis_b, cfg.axis_c, cfg.topology)
    return [plan.run(make_rng(derive_seed(cfg.seed, i))) for i in range(start, stop)]


def run_epr(cfg, workers=0):
    """Sample ``cfg.runs`` independent runs.

    Run i draws from a generator seeded with ``derive_seed(cfg.seed, i)``, so
    ``workers > 0`` (a thread pool) reproduces the serial records exactly.
    """
    runs = int(cfg.runs)
    if not workers or workers <= 1:
        return _run_range(cfg, 0, runs)
    chunk = max(1, math.ceil(runs / workers))
    bounds = [(lo, min(runs, lo + chunk)) for lo in range(0, runs, chunk)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda b: _run_range(cfg, *b), bounds)
        return [rec for part in parts for rec in part]


# --------------------------------------------------------------------------
# Exact statistics
# --------------------------------------------------------------------------


def _sign_index(sign):
    return 0 if sign > 0 else 1


def exact_joint(b, c, topology=Topology.ELECTRON_FIRST):
    """P(s_e, s_p) as a 2x2 array indexed [electron][positron], sign order (+1, -1).

    Computed by enumerating both ticks' outcomes through the q-tick engine.
    """
    plan = _Plan(AxisVector.coerce(b), AxisVector.coerce(c), topology)
    table = np.zeros((2, 2))
    for first in automaton.enumerate_outcomes(plan.first.operator, plan.singlet):
        factor = plan.relayed_factor(first.state)
        for second in automaton.enumerate_outcomes(plan.second.operator, factor):
            e, p = plan.signs(first.eigenvalue, second.eigenvalue)
            table[_sign_index(e), _sign_index(p)] += first.probability * second.probability
    return table


def expectation(table):
    return sum(se * sp * table[_sign_index(se), _sign_index(sp)] for se in SIGNS for sp in SIGNS)


def correlation(b, c):
    """E(b, c) = sum s_e s_p P(s_e, s_p); equals -b.c."""
    return float(expectation(exact_joint(b, c)))


def chsh(b, b2, c, c2):
    return correlation(b, c) - correlation(b, c2) + correlation(b2, c) + correlation(b2, c2)


def tally(records):
    counts = np.zeros((2, 2), dtype=int)
    for r in records:
        counts[_sign_index(r.electron_sign), _sign_index(r.positron_sign)] += 1
    return counts


def sampled_summary(records):
    counts = tally(records)
    n = int(counts.sum())
    e_hat = float(sum(se * sp * counts[_sign_index(se), _sign_index(sp)] for se in SIGNS for sp in SIGNS)) / n
    stderr = math.sqrt(max(0.0, 1.0 - e_hat * e_hat) / n)
    return {"counts": table_to_dict(counts), "E_hat": e_hat, "stderr": stderr}


def table_to_dict(table):
    label = {1: "+", -1: "-"}
    return {label[se] + label[sp]: table[_sign_index(se), _sign_index(sp)].item() for se in SIGNS for sp in SIGNS}
