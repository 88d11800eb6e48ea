"""DOT output for process graphs, and the built-in diagram transcriptions.

Attribute mapping:

    event           shape=circle,width=0.9
    test            shape=circle,width=0.45
    complex         shape=doublecircle
    Active node     style=filled,fillcolor=gray80
    StateFlow edge  dir=forward
    InfoFlow edge   dir=none
    ComplexFlow     dir=forward,color="black:black"

Nodes are written in id order and edges in declaration order, so output is
byte-stable for a given graph.
"""

import re

from . import epr, qla
from .automaton import Complex, Edge, EdgeKind, Event, ProcessGraph, Stage, Test, validate_graph
from .errors import ValidationError
from .qla import StateVector

HEADER = "// qtick process graph\n"

_NODE_STYLE = {
    Event: "shape=circle,width=0.9",
    Test: "shape=circle,width=0.45",
    Complex: "shape=doublecircle",
}
_EDGE_STYLE = {
    EdgeKind.STATE_FLOW: "dir=forward",
    EdgeKind.INFO_FLOW: "dir=none",
    EdgeKind.COMPLEX_FLOW: 'dir=forward,color="black:black"',
}


class InvalidGraphError(ValidationError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(v.message for v in self.violations))


def _quote(text):
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g):
    """DOT text for a valid graph; raises InvalidGraphError carrying the violations otherwise."""
    violations = validate_graph(g)
    if violations:
        raise InvalidGraphError(violations)
    nodes = sorted(g.nodes(), key=lambda n: n.id)
    if not nodes and not g.edges:
        return HEADER + "digraph g {}\n"
    lines = [HEADER.rstrip("\n"), "digraph g {"]
    for node in nodes:
        attrs = [f"label={_quote(node.label or node.id)}", _NODE_STYLE[type(node)]]
        if node.stage is Stage.ACTIVE:
            attrs.append("style=filled,fillcolor=gray80")
        lines.append(f"  {_quote(node.id)} [{','.join(attrs)}];")
    for edge in g.edges:
        attrs = _EDGE_STYLE[edge.kind]
        if edge.label:
            attrs += f",label={_quote(edge.label)}"
        lines.append(f"  {_quote(edge.source)} -> {_quote(edge.target)} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# DOT well-formedness
# --------------------------------------------------------------------------

_DOT_TOKEN = re.compile(
    r"""\s+|//[^\n]*|/\*.*?\*/|\#[^\n]*
    |(?P<str>"(?:\\.|[^"\\])*")
    |(?P<id>[A-Za-z_\u0080-￿][\w\u0080-￿]*|-?(?:\.\d+|\d+(?:\.\d*)?))
    |(?P<edgeop>->|--)
    |(?P<punct>[{}\[\];,=:])
    """,
    re.VERBOSE | re.DOTALL,
)


def _dot_tokens(text):
    pos = 0
    out = []
    while pos < len(text):
        m = _DOT_TOKEN.match(text, pos)
        if m is None:
            raise ValidationError(f"unexpected character {text[pos]!r} at offset {pos}")
        pos = m.end()
        for kind in ("str", "id", "edgeop", "punct"):
            if m.group(kind) is not None:
                out.append((kind, m.group(kind)))
                break
    return out


def check_dot(text):
    """Problems found in ``text`` under the standard DOT grammar; empty when well formed.

    Covers the subset qtick emits: one graph, node/edge/attribute statements,
    ``ID = ID`` assignments and bracketed attribute lists.
    """
    try:
        toks = _dot_tokens(text)
    except ValidationError as exc:
        return [str(exc)]
    depth = 0
    for kind, val in toks:
        if kind == "punct" and val == "{":
            depth += 1
        elif kind == "punct" and val == "}":
            depth -= 1
            if depth < 0:
                return ["unbalanced braces"]
    if depth != 0:
        return ["unbalanced braces"]
    try:
        _DotChecker(toks).graph()
    except ValidationError as exc:
        return [str(exc)]
    return []


class _DotChecker:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self, offset=0):
        j = self.i + offset
        return self.toks[j] if j < len(self.toks) else ("eof", "")

    def take(self, kind=None, value=None):
        tok = self.peek()
        if (kind and tok[0] != kind) or (value is not None and tok[1] != value):
            raise ValidationError(f"expected {value or kind}, found {tok[1] or 'end of input'!r}")
        self.i += 1
        return tok

    def is_id(self, tok):
        return tok[0] in ("id", "str")

    def graph(self):
        if self.peek()[1].lower() == "strict":
            self.take()
        if self.peek()[1].lower() not in ("graph", "digraph"):
            raise ValidationError("expected graph or digraph")
        self.take()
        if self.is_id(self.peek()):
            self.take()
        self.take("punct", "{")
        while self.peek()[1] != "}":
            self.stmt()
            if self.peek()[1] == ";":
                self.take()
        self.take("punct", "}")
        if self.peek()[0] != "eof":
            raise ValidationError("trailing tokens after graph")

    def stmt(self):
        tok = self.peek()
        if tok[0] == "id" and tok[1].lower() in ("graph", "node", "edge"):
            self.take()
            self.attr_list()
            return
        if not self.is_id(tok):
            raise ValidationError(f"unexpected token {tok[1]!r}")
        self.take()
        if self.peek()[1] == "=":
            self.take()
            if not self.is_id(self.peek()):
                raise ValidationError("expected value after '='")
            self.take()
            return
        while self.peek()[0] == "edgeop":
            self.take()
            if not self.is_id(self.peek()):
                raise ValidationError("expected node id after edge operator")
            self.take()
        if self.peek()[1] == "[":
            self.attr_list()

    def attr_list(self):
        self.take("punct", "[")
        while self.peek()[1] != "]":
            if not self.is_id(self.peek()):
                raise ValidationError(f"bad attribute name {self.peek()[1]!r}")
            self.take()
            self.take("punct", "=")
            if not self.is_id(self.peek()):
                raise ValidationError("bad attribute value")
            self.take()
            if self.peek()[1] in (",", ";"):
                self.take()
        self.take("punct", "]")
        if self.peek()[1] == "[":
            self.attr_list()


# --------------------------------------------------------------------------
# Built-in figures
# --------------------------------------------------------------------------

FIGURES = ("fig1", "fig2a", "fig2b", "fig3", "fig4", "fig5", "fig6a", "fig6b", "fig7")

_UP = StateVector([1.0, 0.0])
_DOWN = StateVector([0.0, 1.0])

P, A, F = Stage.PAST, Stage.ACTIVE, Stage.FUTURE
SF, IF, CF = EdgeKind.STATE_FLOW, EdgeKind.INFO_FLOW, EdgeKind.COMPLEX_FLOW


def _edges(*triples):
    return [Edge(s, t, k) for s, t, k in triples]


def _fig1():
    return ProcessGraph(
        events=[
            Event("X", qla.tensor(_UP, _DOWN), (2, 2), P),
            Event("A", epr.make_singlet(), (2, 2), A),
            Event("B", None, (2,), F),
            Event("C", None, (2,), F),
        ],
        tests=[
            Test("Sigma1", (epr.s_squared(),), A, "Σ₁"),
            Test("Sigma2", (qla.tensor(qla.pauli_dot(qla.Z_AXIS), qla.identity(2)),), A, "Σ₂"),
        ],
        complexes=[Complex("O1", P, "O₁"), Complex("O2", A, "O₂")],
        edges=_edges(
            ("X", "Sigma1", SF), ("O1", "Sigma1", IF), ("Sigma1", "A", SF),
            ("A", "Sigma2", SF), ("O2", "Sigma2", IF), ("Sigma1", "Sigma2", IF),
            ("Sigma2", "B", SF), ("Sigma2", "C", SF),
        ),
    )


def _fig2(with_null):
    sz, sx = qla.pauli_dot(qla.Z_AXIS), qla.pauli_dot(qla.X_AXIS)
    events = [Event("psi", _UP, (2,), P if with_null else A, "ψ"), Event("phi", None, (2,), F, "φ")]
    tests = [Test("sigma", (sz,), P, "σ"), Test("Lambda", (sx,), A, "Λ")]
    edges = [
        ("Sigma0", "O0", CF), ("O0", "sigma", IF), ("sigma", "psi", SF),
        ("O0", "O1", CF), ("O1", "O2", CF), ("O2", "Lambda", IF),
    ]
    if with_null:
        events.append(Event("psi_prime", _UP, (2,), A, "ψ′"))
        tests.append(Test("sigma_null", (sz,), P, "σ"))
        edges += [("psi", "sigma_null", SF), ("O1", "sigma_null", IF),
                  ("sigma_null", "psi_prime", SF), ("psi_prime", "Lambda", SF)]
    else:
        edges.append(("psi", "Lambda", SF))
    edges.append(("Lambda", "phi", SF))
    return ProcessGraph(
        events=events,
        tests=tests,
        complexes=[Complex("Sigma0", P, "Σ₀"), Complex("O0", P, "O₀"), Complex("O1", P, "O₁"), Complex("O2", A, "O₂")],
        edges=_edges(*edges),
    )


def _fig3():
    u = qla.su2_from(qla.X_AXIS, 1.0)
    s0 = qla.pauli_dot(qla.Z_AXIS)
    s1 = u.conjugate(s0)
    s2 = u.conjugate(s1)
    psi1 = StateVector(qla.eig_hermitian(s1).cluster_for(1.0).basis[:, 0])
    return ProcessGraph(
        events=[
            Event("E0", _UP, (2,), P, "E₀"),
            Event("E1", psi1, (2,), A, "E₁"),
            Event("E2", None, (2,), F, "E₂"),
        ],
        tests=[Test("Sigma0", (s0,), P, "Σ₀"), Test("Sigma1", (s1,), A, "Σ₁"), Test("Sigma2", (s2,), A, "Σ₂")],
        edges=_edges(
            ("Sigma0", "E0", SF), ("E0", "Sigma1", SF), ("Sigma0", "Sigma1", IF),
            ("Sigma1", "E1", SF), ("E1", "Sigma2", SF), ("Sigma1", "Sigma2", IF),
            ("Sigma2", "E2", SF),
        ),
    )


def _fig4():
    return ProcessGraph(
        events=[Event("pi", epr.make_singlet(), (2, 2), A, "π"), Event("phi", None, (4,), F, "φ")],
        tests=[Test("Sigma_a", (epr.sigma_total(qla.Z_AXIS),), A, "Σ(a)")],
        complexes=[Complex("O_prior", P, "O′"), Complex("O", A)],
        edges=_edges(("O_prior", "O", CF), ("O", "Sigma_a", IF), ("pi", "Sigma_a", SF), ("Sigma_a", "phi", SF)),
    )


def _fig5():
    eye = qla.identity(2)
    return ProcessGraph(
        events=[
            Event("pi", epr.make_singlet(), (2, 2), A, "π"),
            Event("e", None, (2,), F),
            Event("p", None, (2,), F),
        ],
        tests=[
            Test("Sigma1", (qla.tensor(qla.pauli_dot(qla.Z_AXIS), eye),), A, "Σ₁"),
            Test("Sigma2", (qla.tensor(eye, qla.pauli_dot(qla.X_AXIS)),), A, "Σ₂"),
        ],
        complexes=[Complex("O1", A, "O₁"), Complex("O2", A, "O₂")],
        edges=_edges(
            ("pi", "Sigma1", SF), ("pi", "Sigma2", SF), ("O1", "Sigma1", IF), ("O2", "Sigma2", IF),
            ("Sigma1", "e", SF), ("Sigma2", "p", SF),
        ),
    )


def _fig6(electron_first):
    b, c = qla.Z_AXIS, qla.X_AXIS
    plus_c = epr.spin_state(c, 1)
    if electron_first:
        s1 = epr.constrained_test(b, epr.Particle.ELECTRON).outcome_operator()
        s2 = qla.pauli_dot(c)
        relay = _DOWN  # positron factor of |+b>|-b>
        wiring = [("pi", "Sigma1", SF), ("Sigma1", "e", SF), ("Sigma1", "r", SF),
                  ("r", "Sigma2", SF), ("Sigma2", "p", SF)]
    else:
        s1 = qla.pauli_dot(b)
        s2 = epr.constrained_test(c, epr.Particle.POSITRON).outcome_operator()
        relay = epr.spin_state(c, -1)  # electron factor of |-c>|+c>
        wiring = [("pi", "Sigma2", SF), ("Sigma2", "p", SF), ("Sigma2", "r", SF),
                  ("r", "Sigma1", SF), ("Sigma1", "e", SF)]
    return ProcessGraph(
        events=[
            Event("pi", epr.make_singlet(), (2, 2), P, "π"),
            Event("r", relay, (2,), P, "relayed factor"),
            Event("e", _UP, (2,), A),
            Event("p", plus_c, (2,), A),
        ],
        tests=[Test("Sigma1", (s1,), P, "Σ₁"), Test("Sigma2", (s2,), P, "Σ₂")],
        complexes=[Complex("O1", P, "O₁"), Complex("O2", P, "O₂")],
        edges=_edges(*wiring, ("O1", "Sigma1", IF), ("O2", "Sigma2", IF)),
    )


def _fig7():
    return ProcessGraph(
        events=[Event("psi", _UP, (2,), A, "ψ"), Event("phi", None, (2,), F, "φ")],
        tests=[Test("Lambda", (qla.pauli_dot(qla.X_AXIS),), A, "Λ")],
        complexes=[Complex("O0", P, "O₀"), Complex("ON", A, "O_N")],
        edges=[
            Edge("O0", "ON", CF, "N"),
            Edge("ON", "Lambda", IF),
            Edge("psi", "Lambda", SF),
            Edge("Lambda", "phi", SF),
        ],
    )


_BUILDERS = {
    "fig1": _fig1,
    "fig2a": lambda: _fig2(False),
    "fig2b": lambda: _fig2(True),
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6a": lambda: _fig6(True),
    "fig6b": lambda: _fig6(False),
    "fig7": _fig7,
}


def builtin_figure(name):
    """A fresh ProcessGraph transcribing one of the standard diagrams.

    ``fig5`` is the forbidden diagram and fails validation by design.
    """
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise ValidationError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}") from None
