"""A self-referential toy universe on two-dimensional spin space.

The active present is a single event E_n with state psi_n, produced by test
Sigma_n with eigenvalue lambda_n = +-1. The next test is built from the
current one and the classical outcome:

    Sigma_{n+1} = U Sigma_n U^dagger   if lambda_n = +1
                  V Sigma_n V^dagger   if lambda_n = -1

with U, V fixed SU(2) laws. Every Sigma_n has the form sigma . a_n, so its
eigenvalues stay +-1 and the history branches two ways per tick.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import automaton, qla
from .automaton import PROBABILITY_FLOOR, Test
from .errors import ValidationError
from .qla import AxisVector, HermitianOperator, StateVector
from .rng import make_rng

_I2 = np.eye(2)

MAX_TREE_DEPTH = 20
INVARIANT_TOL = 1e-10


@dataclass(frozen=True)
class Su2Params:
    axis: AxisVector
    angle: float

    def unitary(self):
        return qla.su2_from(self.axis, self.angle)

    def to_dict(self):
        return {"axis": list(self.axis), "angle": self.angle}


DEFAULT_U = Su2Params(qla.X_AXIS, 1.0)
DEFAULT_V = Su2Params(qla.Y_AXIS, math.sqrt(2.0))


@dataclass(frozen=True, eq=False)
class ToyConfig:
    """Initial test sigma . axis_a, initial eigenvalue and SU(2) laws.

    ``initial_state`` None selects the phase-fixed eigenvector of sigma . axis_a
    with eigenvalue ``lambda0``; an explicit state must satisfy that eigenvalue
    equation.
    """

    axis_a: AxisVector = qla.Z_AXIS
    lambda0: int = 1
    U: Su2Params = DEFAULT_U
    V: Su2Params = DEFAULT_V
    steps: int = 10
    seed: int = 0
    initial_state: StateVector | None = None

    def __post_init__(self):
        if self.lambda0 not in (1, -1):
            raise ValidationError(f"lambda0 must be +1 or -1, got {self.lambda0!r}")
        if int(self.steps) < 0:
            raise ValidationError("steps must be nonnegative")
        if self.initial_state is not None:
            sigma = qla.pauli_dot(self.axis_a)
            if self.initial_state.dim != 2 or not qla.is_eigenvector(sigma, self.initial_state, self.lambda0, INVARIANT_TOL):
                raise ValidationError("explicit initial state is not an eigenstate of sigma . a with eigenvalue lambda0")

    @functools.cached_property
    def _laws(self):
        return self.U.unitary(), self.V.unitary()

    def laws(self):
        return self._laws

    def to_dict(self):
        d = {
            "axis_a": list(self.axis_a),
            "lambda0": self.lambda0,
            "U": self.U.to_dict(),
            "V": self.V.to_dict(),
            "steps": self.steps,
            "seed": self.seed,
        }
        if self.initial_state is not None:
            d["initial_state"] = automaton._pairs(self.initial_state.amplitudes)
        return d


@dataclass(frozen=True, eq=False)
class ToyState:
    n: int
    sigma: HermitianOperator
    psi: StateVector
    lam: int

    def __post_init__(self):
        m = self.sigma.matrix
        if m.shape != (2, 2):
            raise ValidationError("toy test must be 2x2")
        if abs(m[0, 0] + m[1, 1]) > INVARIANT_TOL:
            raise ValidationError("toy test is not traceless")
        if np.abs(m @ m - _I2).max() > INVARIANT_TOL:
            raise ValidationError("toy test does not square to the identity")
        psi = self.psi.amplitudes
        if np.abs(m @ psi - self.lam * psi).max() > INVARIANT_TOL:
            raise ValidationError(f"psi_{self.n} is not an eigenstate of Sigma_{self.n} with eigenvalue {self.lam}")


def _sign(value):
    return 1 if value > 0 else -1


def init_toy(cfg):
    sigma = qla.pauli_dot(cfg.axis_a)
    if cfg.initial_state is not None:
        psi = cfg.initial_state
    else:
        cluster = qla.eig_hermitian(sigma).cluster_for(float(cfg.lambda0))
        psi = StateVector(cluster.basis[:, 0])
    return ToyState(0, sigma, psi, cfg.lambda0)


def next_test(state, laws):
    """The operator Sigma_{n+1}: conjugation by U when lambda_n = +1, by V otherwise."""
    u, v = laws
    w = u if state.lam == 1 else v
    return w.conjugate(state.sigma)


def step_toy(state, laws, rng):
    """One q-tick. Returns ``(next_state, record)``."""
    sigma = next_test(state, laws)
    test = Test(f"Sigma{state.n + 1}", (sigma,))
    record = automaton.perform_test(test, state.psi, rng, inputs=(f"E{state.n}",))
    return ToyState(state.n + 1, sigma, record.outcome_state, _sign(record.outcome_eigenvalue)), record


@dataclass(eq=False)
class ToyRun:
    records: list
    final: ToyState

    @property
    def lambdas(self):
        return tuple(_sign(r.outcome_eigenvalue) for r in self.records)


def run_toy(cfg, rng=None):
    """A single classical history of ``cfg.steps`` q-ticks, deterministic given the rng."""
    if rng is None:
        rng = make_rng(cfg.seed)
    laws = cfg.laws()
    state = init_toy(cfg)
    records = []
    for _ in range(cfg.steps):
        state, record = step_toy(state, laws, rng)
        records.append(record)
    return ToyRun(records, state)


# --------------------------------------------------------------------------
# Exhaustive history tree
# --------------------------------------------------------------------------


@dataclass(eq=False)
class TreeNode:
    lambdas: tuple
    probability: float
    state: ToyState
    children: list = field(default_factory=list)


@dataclass(eq=False)
class HistoryTree:
    root: TreeNode
    depth: int
    pruned: list  # (lambdas, path probability) of dropped branches

    def nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def level(self, n):
        return [node for node in self.nodes() if len(node.lambdas) == n]

    def leaves(self):
        return self.level(self.depth)

    def probability_of(self, lambdas):
        node = self.root
        for lam in lambdas:
            node = next((c for c in node.children if c.lambdas[-1] == lam), None)
            if node is None:
                return 0.0
        return node.probability


def enumerate_tree(cfg, depth):
    """Expand every outcome branch to ``depth`` q-ticks with exact path probabilities.

    Children are ordered -1 before +1. Branches with path probability below
    1e-14 are dropped and listed in ``pruned``.
    """
    if not 0 <= depth <= MAX_TREE_DEPTH:
        raise ValidationError(f"depth must lie in [0, {MAX_TREE_DEPTH}], got {depth}")
    laws = cfg.laws()
    root = TreeNode((), 1.0, init_toy(cfg))
    pruned = []
    frontier = [root]
    for _ in range(depth):
        nxt = []
        for node in frontier:
            sigma = next_test(node.state, laws)
            kept = {_sign(o.eigenvalue): o for o in automaton.enumerate_outcomes(sigma, node.state.psi)}
            missing = max(0.0, 1.0 - sum(o.probability for o in kept.values()))
            for lam in (-1, 1):
                outcome = kept.get(lam)
                prob = node.probability * (outcome.probability if outcome else missing)
                if outcome is None or prob < PROBABILITY_FLOOR:
                    pruned.append((node.lambdas + (lam,), prob))
                    continue
                child_state = ToyState(node.state.n + 1, sigma, outcome.state, lam)
                child = TreeNode(node.lambdas + (lam,), prob, child_state)
                node.children.append(child)
                nxt.append(child)
        frontier = nxt
    return HistoryTree(root, depth, pruned)


# --------------------------------------------------------------------------
# Rotation shadow
# --------------------------------------------------------------------------


def bloch_axis(sigma):
    """The vector a with sigma . a == Sigma, read off as a_i = tr(sigma_i Sigma) / 2."""
    m = sigma.matrix
    return np.array([0.5 * np.trace(p @ m).real for p in qla.PAULI])


def so3_rotation(w):
    """The rotation R with W (sigma . a) W^dagger = sigma . (R a)."""
    m = w.matrix
    r = np.empty((3, 3))
    for i, pi in enumerate(qla.PAULI):
        for j, pj in enumerate(qla.PAULI):
            r[i, j] = 0.5 * np.trace(pi @ m @ pj @ m.conj().T).real
    return r


# --------------------------------------------------------------------------
# JSON shape
# --------------------------------------------------------------------------


def run_to_dict(cfg, run):
    return {
        "config": cfg.to_dict(),
        "ticks": [automaton.record_to_dict(r) for r in run.records],
        "lambdas": list(run.lambdas),
        "final": {"n": run.final.n, "lambda": run.final.lam, "psi": automaton._pairs(run.final.psi.amplitudes)},
    }


def tree_to_dict(cfg, tree):
    return {
        "config": cfg.to_dict(),
        "depth": tree.depth,
        "leaves": [{"lambdas": list(leaf.lambdas), "prob": leaf.probability} for leaf in tree.leaves()],
        "pruned": [{"lambdas": list(lams), "prob": p} for lams, p in tree.pruned],
    }
