"""The q-tick engine.

A q-tick takes a prepared state through one test to one resolved outcome.
Outcomes are enumerated per eigenspace (Lueders projection for degenerate
eigenvalues) and sampled by inverse CDF over the enumeration order with a
single uniform draw, so a stored draw replays the tick exactly.

Process graphs carry events, tests and complexes joined by state-flow,
information-flow and complex-flow edges, each node staged Past, Active or
Future.
"""

import dataclasses
import enum
import functools
from dataclasses import dataclass, field

import numpy as np

from . import qla
from .errors import GraphStructureError, StateError, ValidationError
from .qla import HermitianOperator, StateVector

PROBABILITY_FLOOR = 1e-14


class Stage(str, enum.Enum):
    PAST = "Past"
    ACTIVE = "Active"
    FUTURE = "Future"


class EdgeKind(str, enum.Enum):
    STATE_FLOW = "StateFlow"
    INFO_FLOW = "InfoFlow"
    COMPLEX_FLOW = "ComplexFlow"


@dataclass(frozen=True, eq=False)
class Outcome:
    eigenvalue: float
    state: StateVector
    probability: float


@dataclass(frozen=True, eq=False)
class QTickRecord:
    test_id: str
    input_event_ids: tuple
    outcome_eigenvalue: float
    outcome_state: StateVector
    outcome_probability: float
    rng_draw: float

    def same_as(self, other):
        return (
            self.test_id == other.test_id
            and self.input_event_ids == other.input_event_ids
            and self.outcome_eigenvalue == other.outcome_eigenvalue
            and self.outcome_state == other.outcome_state
            and self.outcome_probability == other.outcome_probability
            and self.rng_draw == other.rng_draw
        )


# --------------------------------------------------------------------------
# Graph nodes
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Event:
    """A factor state of the universe. Future events are unresolved (state None)."""

    id: str
    state: StateVector | None
    factor_dims: tuple = ()
    stage: Stage = Stage.ACTIVE
    label: str | None = None

    def __post_init__(self):
        stage = Stage(self.stage)
        object.__setattr__(self, "stage", stage)
        dims = tuple(int(d) for d in self.factor_dims)
        if stage is Stage.FUTURE:
            if self.state is not None:
                raise ValidationError(f"future event {self.id!r} must be unresolved")
        elif self.state is None:
            raise ValidationError(f"{stage.value.lower()} event {self.id!r} needs a concrete state")
        if not dims and self.state is not None:
            dims = (self.state.dim,)
        if any(d < 1 for d in dims):
            raise ValidationError(f"event {self.id!r} has a non-positive factor dimension")
        if self.state is not None and int(np.prod(dims)) != self.state.dim:
            raise ValidationError(f"event {self.id!r}: factor dims {dims} do not match state dim {self.state.dim}")
        object.__setattr__(self, "factor_dims", dims)

    @property
    def dim(self):
        return int(np.prod(self.factor_dims)) if self.factor_dims else None


@dataclass(frozen=True, eq=False)
class Test:
    """A test built from one or more Hermitian operators of a common dimension.

    Tests transcribed from diagrams may carry no operators at all.
    """

    __test__ = False

    id: str
    operators: tuple = ()
    stage: Stage = Stage.ACTIVE
    label: str | None = None

    def __post_init__(self):
        stage = Stage(self.stage)
        if stage is Stage.FUTURE:
            raise ValidationError(f"test {self.id!r} cannot be staged Future")
        object.__setattr__(self, "stage", stage)
        ops = tuple(self.operators)
        if len({op.dim for op in ops}) > 1:
            raise ValidationError(f"test {self.id!r}: operators differ in dimension")
        object.__setattr__(self, "operators", ops)

    @property
    def operator(self):
        if len(self.operators) != 1:
            raise ValidationError(f"test {self.id!r} has {len(self.operators)} operators, expected one")
        return self.operators[0]


@dataclass(frozen=True, eq=False)
class Complex:
    """An opaque aggregate of events and tests, e.g. an emergent observer."""

    id: str
    stage: Stage = Stage.PAST
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "stage", Stage(self.stage))


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    kind: EdgeKind
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EdgeKind(self.kind))


@dataclass(frozen=True)
class Violation:
    code: str
    node: str
    message: str


@dataclass
class ProcessGraph:
    events: list = field(default_factory=list)
    tests: list = field(default_factory=list)
    complexes: list = field(default_factory=list)
    edges: list = field(default_factory=list)

    def nodes(self):
        return [*self.events, *self.tests, *self.complexes]

    def index(self):
        table = {}
        for node in self.nodes():
            if node.id in table:
                raise GraphStructureError(f"duplicate node id {node.id!r}")
            table[node.id] = node
        return table

    def node(self, node_id):
        for node in self.nodes():
            if node.id == node_id:
                return node
        raise GraphStructureError(f"unknown node id {node_id!r}")

    def outgoing(self, node_id, kind=None):
        return [e for e in self.edges if e.source == node_id and (kind is None or e.kind is kind)]

    def incoming(self, node_id, kind=None):
        return [e for e in self.edges if e.target == node_id and (kind is None or e.kind is kind)]

    def inputs(self, test_id):
        return [e.source for e in self.incoming(test_id, EdgeKind.STATE_FLOW)]

    def outcomes(self, test_id):
        return [e.target for e in self.outgoing(test_id, EdgeKind.STATE_FLOW)]

    def info_sources(self, test_id):
        return [e.source for e in self.incoming(test_id, EdgeKind.INFO_FLOW)]

    def unresolved_tests(self):
        index = self.index()
        pending = set()
        for test in self.tests:
            for oid in self.outcomes(test.id):
                node = index.get(oid)
                if isinstance(node, Event) and node.stage is Stage.FUTURE:
                    pending.add(test.id)
        return pending

    def replaced(self, *nodes):
        """Copy of the graph with the given nodes substituted by id."""
        by_id = {n.id: n for n in nodes}
        return ProcessGraph(
            events=[by_id.get(n.id, n) for n in self.events],
            tests=[by_id.get(n.id, n) for n in self.tests],
            complexes=[by_id.get(n.id, n) for n in self.complexes],
            edges=list(self.edges),
        )


# --------------------------------------------------------------------------
# Outcomes and sampling
# --------------------------------------------------------------------------


def enumerate_outcomes(h, psi):
    """All outcomes of testing ``psi`` with ``h``, one per eigenvalue cluster.

    Probability is ||P psi||^2 for the eigenspace projector P and the outcome
    state is P psi / ||P psi||. Entries below 1e-14 are dropped.
    """
    if h.dim != psi.dim:
        raise ValidationError(f"dimension mismatch: test {h.dim}, state {psi.dim}")
    return list(_enumerate_cached(h.matrix.tobytes(), psi.amplitudes.tobytes(), h.dim))


@functools.lru_cache(maxsize=16384)
def _enumerate_cached(h_raw, psi_raw, n):
    h = HermitianOperator(np.frombuffer(h_raw, dtype=complex).reshape(n, n))
    psi = np.frombuffer(psi_raw, dtype=complex)
    result = []
    for cluster in qla.eig_hermitian(h).clusters():
        coeffs = cluster.basis.conj().T @ psi
        prob = float(np.vdot(coeffs, coeffs).real)
        if prob < PROBABILITY_FLOOR:
            continue
        projected = cluster.basis @ coeffs
        result.append(Outcome(cluster.value, StateVector(projected / np.sqrt(prob)), prob))
    return tuple(result)


def _single_operator(test):
    if isinstance(test, HermitianOperator):
        return "", test
    return test.id, test.operator


def sample_index(outcomes, draw):
    """Inverse-CDF pick over ``outcomes`` in enumeration order."""
    total = 0.0
    for k, outcome in enumerate(outcomes):
        total += outcome.probability
        if draw < total:
            return k
    return len(outcomes) - 1


def resolve_test(test, psi, draw, inputs=()):
    """Deterministic half of a q-tick: the outcome selected by a given uniform draw."""
    test_id, op = _single_operator(test)
    outcomes = enumerate_outcomes(op, psi)
    chosen = outcomes[sample_index(outcomes, draw)]
    return QTickRecord(
        test_id=test_id,
        input_event_ids=tuple(inputs),
        outcome_eigenvalue=chosen.eigenvalue,
        outcome_state=chosen.state,
        outcome_probability=chosen.probability,
        rng_draw=float(draw),
    )


def perform_test(test, psi, rng, inputs=()):
    """Run one q-tick: a single uniform draw from ``rng`` selects the outcome.

    ``test`` is a single-operator Test or a bare HermitianOperator.
    """
    return resolve_test(test, psi, float(rng.random()), inputs)


def replay(record, test, psi):
    return resolve_test(test, psi, record.rng_draw, record.input_event_ids)


def null_operator(psi):
    """The projector |psi><psi|: psi is its eigenstate with eigenvalue 1."""
    amps = psi.amplitudes
    return HermitianOperator(np.outer(amps, amps.conj()))


def null_test(psi, test_id="null"):
    """A test yielding no information: the outcome is ``psi`` itself with probability 1.

    The arbitrary phase of the outcome is fixed to zero.
    """
    return QTickRecord(
        test_id=test_id,
        input_event_ids=(),
        outcome_eigenvalue=1.0,
        outcome_state=psi,
        outcome_probability=1.0,
        rng_draw=0.0,
    )


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------


def _kind_of(node):
    if isinstance(node, Event):
        return "event"
    if isinstance(node, Test):
        return "test"
    return "complex"


def _expected_active(g, node, unresolved):
    """Whether ``node`` belongs to the active present under the shading rules."""
    if isinstance(node, Test):
        if node.id in unresolved:
            return True
        return any(e.target in unresolved for e in g.outgoing(node.id, EdgeKind.INFO_FLOW))
    out = g.outgoing(node.id)
    if not out:
        return True
    return any(
        e.target in unresolved for e in out if e.kind in (EdgeKind.STATE_FLOW, EdgeKind.INFO_FLOW)
    )


def validate_graph(g):
    """Every rule violation in ``g``; an empty list means the graph is valid.

    Raises GraphStructureError for duplicate ids or edges naming unknown nodes.
    """
    index = g.index()
    for edge in g.edges:
        for end in (edge.source, edge.target):
            if end not in index:
                raise GraphStructureError(f"edge {edge.source!r} -> {edge.target!r} references unknown node {end!r}")

    found = []
    for edge in g.edges:
        src, dst = _kind_of(index[edge.source]), _kind_of(index[edge.target])
        ok = True
        if edge.kind is EdgeKind.STATE_FLOW:
            ok = (src, dst) in (("event", "test"), ("test", "event"))
        elif edge.kind is EdgeKind.INFO_FLOW:
            ok = dst == "test"
        elif edge.kind is EdgeKind.COMPLEX_FLOW:
            ok = "complex" in (src, dst)
        if not ok:
            found.append(Violation("edge-kind", edge.source, f"{edge.kind.value} edge {edge.source} -> {edge.target} joins {src} to {dst}"))

    for event in g.events:
        out = g.outgoing(event.id)
        if event.stage is Stage.FUTURE:
            if out:
                found.append(Violation("future-outgoing", event.id, f"future event {event.id} has outgoing edges"))
            continue
        tested_by = [e for e in out if e.kind is EdgeKind.STATE_FLOW]
        if len(tested_by) >= 2:
            if not qla.is_product(event.state, event.factor_dims):
                found.append(Violation(
                    "entangled-multi-test", event.id,
                    f"entangled event {event.id} is tested by {len(tested_by)} tests"))
            elif len(tested_by) > len(event.factor_dims):
                found.append(Violation(
                    "product-overtested", event.id,
                    f"product event {event.id} has {len(event.factor_dims)} factors but {len(tested_by)} tests"))

    cycle_node = _find_cycle(g)
    if cycle_node is not None:
        found.append(Violation("cycle", cycle_node, f"state/complex flow cycle through {cycle_node}"))

    found.extend(_staging_violations(g, index))
    return found


def _staging_violations(g, index):
    found = []
    unresolved = g.unresolved_tests()
    for test in g.tests:
        outs = [index[o] for o in g.outcomes(test.id)]
        stages = {o.stage is Stage.FUTURE for o in outs if isinstance(o, Event)}
        if len(stages) > 1:
            found.append(Violation("staging", test.id, f"test {test.id} has both resolved and unresolved outcomes"))
    for event in g.events:
        if event.stage is Stage.FUTURE:
            producers = [e for e in g.incoming(event.id, EdgeKind.STATE_FLOW) if isinstance(index[e.source], Test)]
            if not producers:
                found.append(Violation("staging", event.id, f"future event {event.id} is not the outcome of any test"))
    for node in g.nodes():
        if isinstance(node, Event) and node.stage is Stage.FUTURE:
            continue
        want = _expected_active(g, node, unresolved)
        if want and node.stage is not Stage.ACTIVE:
            found.append(Violation("staging", node.id, f"{node.id} belongs to the active present but is {node.stage.value}"))
        elif not want and node.stage is Stage.ACTIVE:
            found.append(Violation("staging", node.id, f"{node.id} is shaded Active but is not in the active present"))
    return found


def _find_cycle(g):
    succ = {}
    for e in g.edges:
        if e.kind in (EdgeKind.STATE_FLOW, EdgeKind.COMPLEX_FLOW):
            succ.setdefault(e.source, []).append(e.target)
    color = {}
    for start in [n.id for n in g.nodes()]:
        if color.get(start):
            continue
        stack = [(start, iter(succ.get(start, ())))]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
            elif color.get(nxt) == 1:
                return nxt
            elif not color.get(nxt):
                color[nxt] = 1
                stack.append((nxt, iter(succ.get(nxt, ()))))
    return None


# --------------------------------------------------------------------------
# Staging dynamics
# --------------------------------------------------------------------------


def advance_stage(g, record):
    """Apply a resolved q-tick to the graph and return the restaged copy.

    The test's outcome events receive the record's state (split into factors
    when there are several) and become Active. The test, its input events and
    its information sources become Past unless they still feed or inform an
    unresolved test.
    """
    index = g.index()
    test = index.get(record.test_id)
    if not isinstance(test, Test):
        raise StateError(f"record references unknown test {record.test_id!r}")
    outcome_ids = g.outcomes(test.id)
    pending = [index[o] for o in outcome_ids if isinstance(index[o], Event) and index[o].stage is Stage.FUTURE]
    if test.stage is not Stage.ACTIVE or not pending:
        raise StateError(f"test {test.id!r} has no unresolved outcome")

    dims = [int(np.prod(ev.factor_dims)) for ev in pending]
    if int(np.prod(dims)) != record.outcome_state.dim:
        raise StateError(f"outcome state dim {record.outcome_state.dim} does not fit outcome events {dims}")
    if len(pending) == 1:
        states = [record.outcome_state]
    else:
        try:
            states = qla.factorize(record.outcome_state, dims)
        except ValidationError as exc:
            raise StateError(f"outcome of {test.id!r} is entangled across its outcome events") from exc

    resolved = [dataclasses.replace(ev, state=st, stage=Stage.ACTIVE) for ev, st in zip(pending, states)]
    g = g.replaced(*resolved)
    unresolved = g.unresolved_tests()

    touched = [test.id, *g.inputs(test.id), *g.info_sources(test.id)]
    updates = []
    for node_id in dict.fromkeys(touched):
        node = g.node(node_id)
        if isinstance(node, Event) and node.stage is Stage.FUTURE:
            continue
        stage = Stage.ACTIVE if _expected_active(g, node, unresolved) else Stage.PAST
        if stage is not node.stage:
            updates.append(dataclasses.replace(node, stage=stage))
    return g.replaced(*updates)


# --------------------------------------------------------------------------
# JSON shape
# --------------------------------------------------------------------------


def _pairs(amps):
    return [[float(c.real), float(c.imag)] for c in amps]


def _complex_from_pairs(pairs):
    return np.array([complex(re, im) for re, im in pairs], dtype=complex)


def record_to_dict(record):
    return {
        "test": record.test_id,
        "inputs": list(record.input_event_ids),
        "eigenvalue": float(record.outcome_eigenvalue),
        "probability": float(record.outcome_probability),
        "draw": float(record.rng_draw),
        "outcome": _pairs(record.outcome_state.amplitudes),
    }


def record_from_dict(d):
    return QTickRecord(
        test_id=d["test"],
        input_event_ids=tuple(d["inputs"]),
        outcome_eigenvalue=float(d["eigenvalue"]),
        outcome_state=StateVector(_complex_from_pairs(d["outcome"])),
        outcome_probability=float(d["probability"]),
        rng_draw=float(d["draw"]),
    )


def graph_to_dict(g, ticks=()):
    def labelled(node, body):
        if node.label is not None:
            body["label"] = node.label
        return body

    return {
        "events": [
            labelled(ev, {
                "id": ev.id,
                "stage": ev.stage.value,
                "dims": list(ev.factor_dims),
                "amplitudes": None if ev.state is None else _pairs(ev.state.amplitudes),
            })
            for ev in g.events
        ],
        "tests": [
            labelled(t, {
                "id": t.id,
                "stage": t.stage.value,
                "operators": [[_pairs(row) for row in op.matrix] for op in t.operators],
                "info_sources": g.info_sources(t.id),
            })
            for t in g.tests
        ],
        "complexes": [labelled(c, {"id": c.id, "stage": c.stage.value}) for c in g.complexes],
        "edges": [
            {"from": e.source, "to": e.target, "kind": e.kind.value, **({"label": e.label} if e.label else {})}
            for e in g.edges
        ],
        "ticks": [record_to_dict(r) for r in ticks],
    }


def graph_from_dict(d):
    """Inverse of ``graph_to_dict``; returns ``(graph, ticks)``."""
    events = []
    for ev in d.get("events", []):
        state = None if ev.get("amplitudes") is None else StateVector(_complex_from_pairs(ev["amplitudes"]))
        events.append(Event(ev["id"], state, tuple(ev.get("dims", ())), ev["stage"], ev.get("label")))
    tests = []
    for t in d.get("tests", []):
        ops = tuple(HermitianOperator(np.array([_complex_from_pairs(row) for row in op])) for op in t.get("operators", []))
        tests.append(Test(t["id"], ops, t["stage"], t.get("label")))
    complexes = [Complex(c["id"], c["stage"], c.get("label")) for c in d.get("complexes", [])]
    edges = [Edge(e["from"], e["to"], e["kind"], e.get("label")) for e in d.get("edges", [])]
    ticks = [record_from_dict(r) for r in d.get("ticks", [])]
    return ProcessGraph(events, tests, complexes, edges), ticks
