"""Universe Description Language: a small block-structured text format.

Grammar (whitespace-insensitive, ``#`` starts a line comment)::

    document   := block*
    block      := kind IDENT "{" entry* "}"
    kind       := "toy" | "epr" | "decay" | "diagram"
    entry      := IDENT "=" value | nodedecl | edgedecl
    value      := NUMBER | SIGNEDINT | IDENT | triple | su2expr
    triple     := "(" NUMBER "," NUMBER "," NUMBER ")"
    su2expr    := "su2" "(" "axis" "=" triple "," "angle" "=" NUMBER ")"
    nodedecl   := ("event"|"test"|"complex") IDENT ("[" IDENT* "]")?
    edgedecl   := IDENT ("->"|"--"|"=>") IDENT

Errors are raised as :class:`UdlError` subclasses carrying ``kind``
(lexical, syntactic or semantic), ``line``, ``col``, the offending
``lexeme`` and, for syntax errors, the ``expected`` token set.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import epr, qla
from .automaton import Complex, Edge, EdgeKind, Event, ProcessGraph, Stage, Test
from .errors import ValidationError
from .pictures import DecayProblem
from .qla import AxisVector, StateVector
from .toy import Su2Params, ToyConfig

MAX_INPUT_BYTES = 1 << 20
AXIS_TOL = 1e-12

BLOCK_KINDS = ("toy", "epr", "decay", "diagram")
NODE_KINDS = ("event", "test", "complex")
EDGE_OPS = {"->": EdgeKind.STATE_FLOW, "--": EdgeKind.INFO_FLOW, "=>": EdgeKind.COMPLEX_FLOW}
OP_FOR_KIND = {kind: op for op, kind in EDGE_OPS.items()}


# --------------------------------------------------------------------------
# Errors
# --------------------------------------------------------------------------


class UdlError(ValidationError):
    kind = "udl"

    def __init__(self, message, line=1, col=1, lexeme="", expected=(), code=None):
        self.message = message
        self.line = line
        self.col = col
        self.lexeme = lexeme
        self.expected = tuple(sorted(set(expected)))
        self.code = code or self.kind
        super().__init__(f"{line}:{col}: {self.kind} error: {message}")

    def to_dict(self):
        return {
            "kind": self.kind,
            "code": self.code,
            "line": self.line,
            "col": self.col,
            "lexeme": self.lexeme,
            "expected": list(self.expected),
            "message": self.message,
        }


class UdlLexError(UdlError):
    kind = "lexical"


class UdlSyntaxError(UdlError):
    kind = "syntactic"


class UdlSemanticError(UdlError):
    kind = "semantic"


# --------------------------------------------------------------------------
# Document model
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Span:
    line: int
    col: int


@dataclass(frozen=True)
class Su2Expr:
    axis: tuple
    angle: float


@dataclass
class NodeDecl:
    kind: str
    id: str
    attrs: tuple = ()
    span: Span = field(default=None, compare=False, repr=False)


@dataclass
class EdgeDecl:
    source: str
    op: str
    target: str
    span: Span = field(default=None, compare=False, repr=False)


@dataclass
class Block:
    kind: str
    name: str
    settings: dict = field(default_factory=dict)
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    span: Span = field(default=None, compare=False, repr=False)
    key_spans: dict = field(default_factory=dict, compare=False, repr=False)

    def get(self, key, default=None):
        return self.settings.get(key, default)

    def span_of(self, key):
        return self.key_spans.get(key, self.span or Span(1, 1))


@dataclass
class UdlDocument:
    blocks: list = field(default_factory=list)

    def block(self, kind=None, name=None):
        """First block matching ``kind`` and/or ``name``; raises ValidationError if none."""
        for b in self.blocks:
            if (kind is None or b.kind == kind) and (name is None or b.name == name):
                return b
        what = " ".join(x for x in (kind, repr(name) if name else None) if x)
        raise ValidationError(f"no {what} block in document")


# --------------------------------------------------------------------------
# Lexer
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    type: str  # IDENT, NUMBER, OP, PUNCT, EOF
    text: str
    line: int
    col: int
    value: object = None


_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_TAIL = re.compile(r"[A-Za-z0-9_.]+")
_PUNCT = "{}()[],="


def _decode(text):
    if isinstance(text, (bytes, bytearray, memoryview)):
        raw = bytes(text)
        if len(raw) > MAX_INPUT_BYTES:
            raise UdlLexError("input exceeds 1 MiB", code="too-large")
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            line = raw.count(b"\n", 0, exc.start) + 1
            col = exc.start - (raw.rfind(b"\n", 0, exc.start) + 1) + 1
            raise UdlLexError("invalid UTF-8", line, col, repr(raw[exc.start:exc.start + 1]), code="encoding") from None
    if len(text) > MAX_INPUT_BYTES:
        raise UdlLexError("input exceeds 1 MiB", code="too-large")
    return text


def tokenize(text):
    text = _decode(text)
    toks = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        col = pos - line_start + 1
        if ch == "\n":
            pos += 1
            line, line_start = line + 1, pos
            continue
        if ch in " \t\r\f\v":
            pos += 1
            continue
        if ch == "#":
            end = text.find("\n", pos)
            pos = n if end < 0 else end
            continue
        two = text[pos:pos + 2]
        if two in EDGE_OPS:
            toks.append(Token("OP", two, line, col))
            pos += 2
            continue
        if ch.isdigit() or ch == "." or (ch in "+-" and pos + 1 < n and (text[pos + 1].isdigit() or text[pos + 1] == ".")):
            m = _NUMBER.match(text, pos)
            tail = _NUMBER_TAIL.match(text, m.end()) if m else None
            if m is None or tail is not None:
                stop = tail.end() if tail else pos + 1
                raise UdlLexError("bad number", line, col, text[pos:stop], code="bad-number")
            lexeme = m.group(0)
            toks.append(Token("NUMBER", lexeme, line, col, _number_value(lexeme, line, col)))
            pos = m.end()
            continue
        m = _IDENT.match(text, pos)
        if m:
            toks.append(Token("IDENT", m.group(0), line, col))
            pos = m.end()
            continue
        if ch in _PUNCT:
            toks.append(Token("PUNCT", ch, line, col))
            pos += 1
            continue
        raise UdlLexError(f"unexpected character {ch!r}", line, col, ch, code="bad-char")
    toks.append(Token("EOF", "", line, pos - line_start + 1))
    return toks


def _number_value(lexeme, line, col):
    if re.fullmatch(r"[+-]?\d+", lexeme):
        return int(lexeme)
    value = float(lexeme)
    if not math.isfinite(value):
        raise UdlLexError("number out of range", line, col, lexeme, code="bad-number")
    return value


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, expected):
        t = self.tok
        shown = t.text if t.type != "EOF" else "end of input"
        raise UdlSyntaxError(
            f"unexpected {shown!r}, expected {' or '.join(sorted(set(expected)))}",
            t.line, t.col, t.text, expected, code="unexpected-token",
        )

    def expect(self, type_, text=None):
        t = self.tok
        if t.type != type_ or (text is not None and t.text != text):
            self.fail([text if text is not None else type_])
        self.i += 1
        return t

    def document(self):
        doc = UdlDocument()
        while self.tok.type != "EOF":
            doc.blocks.append(self.block())
        return doc

    def block(self):
        t = self.tok
        if t.type != "IDENT" or t.text not in BLOCK_KINDS:
            self.fail(BLOCK_KINDS)
        self.i += 1
        name = self.expect("IDENT")
        self.expect("PUNCT", "{")
        block = Block(t.text, name.text, span=Span(t.line, t.col))
        while not (self.tok.type == "PUNCT" and self.tok.text == "}"):
            if self.tok.type == "EOF":
                self.fail(["}", "IDENT"])
            self.entry(block)
        self.i += 1
        return block

    def entry(self, block):
        t = self.tok
        if t.type != "IDENT":
            self.fail(["IDENT", "}"])
        nxt = self.peek()
        if nxt.type == "PUNCT" and nxt.text == "=":
            self.i += 2
            if t.text in block.settings:
                raise UdlSemanticError(f"duplicate key {t.text!r}", t.line, t.col, t.text, code="duplicate-key")
            block.settings[t.text] = self.value()
            block.key_spans[t.text] = Span(t.line, t.col)
        elif nxt.type == "OP":
            self.i += 2
            target = self.expect("IDENT")
            block.edges.append(EdgeDecl(t.text, nxt.text, target.text, Span(t.line, t.col)))
        elif t.text in NODE_KINDS and nxt.type == "IDENT":
            self.i += 2
            attrs = []
            if self.tok.type == "PUNCT" and self.tok.text == "[":
                self.i += 1
                while self.tok.type == "IDENT":
                    attrs.append(self.tok.text)
                    self.i += 1
                self.expect("PUNCT", "]")
            block.nodes.append(NodeDecl(t.text, nxt.text, tuple(attrs), Span(t.line, t.col)))
        else:
            self.i += 1
            self.fail(["=", "->", "--", "=>"] + (["IDENT"] if t.text in NODE_KINDS else []))

    def value(self):
        t = self.tok
        if t.type == "NUMBER":
            self.i += 1
            return t.value
        if t.type == "PUNCT" and t.text == "(":
            return self.triple()
        if t.type == "IDENT":
            nxt = self.peek()
            if t.text == "su2" and nxt.type == "PUNCT" and nxt.text == "(":
                return self.su2()
            self.i += 1
            return t.text
        self.fail(["NUMBER", "IDENT", "("])

    def number(self):
        return self.expect("NUMBER").value

    def triple(self):
        self.expect("PUNCT", "(")
        a = self.number()
        self.expect("PUNCT", ",")
        b = self.number()
        self.expect("PUNCT", ",")
        c = self.number()
        self.expect("PUNCT", ")")
        return (a, b, c)

    def su2(self):
        self.expect("IDENT", "su2")
        self.expect("PUNCT", "(")
        self.expect("IDENT", "axis")
        self.expect("PUNCT", "=")
        axis = self.triple()
        self.expect("PUNCT", ",")
        self.expect("IDENT", "angle")
        self.expect("PUNCT", "=")
        angle = self.number()
        self.expect("PUNCT", ")")
        return Su2Expr(axis, angle)


def parse(text, normalize=False, check=True):
    """Parse UDL text (str or UTF-8 bytes) into a document.

    With ``check`` (the default) the semantic rules run too. ``normalize``
    accepts non-unit axes in every block, as if each set ``normalize = true``.
    """
    doc = _Parser(tokenize(text)).document()
    if check:
        check_document(doc, normalize)
    return doc


# --------------------------------------------------------------------------
# Semantic checks
# --------------------------------------------------------------------------

TOY_KEYS = {"axis_a", "lambda0", "U", "V", "steps", "seed", "normalize"}
EPR_KEYS = {"b", "c", "topology", "runs", "seed", "normalize"}
DECAY_KEYS = {"psi_axis", "lambda_axis", "lambda", "U", "U_step", "N", "normalize"}

STAGE_ATTRS = {"past": Stage.PAST, "active": Stage.ACTIVE, "future": Stage.FUTURE}

_R = 1.0 / math.sqrt(2.0)
EVENT_STATES = {
    "up": ([1.0, 0.0], (2,)),
    "down": ([0.0, 1.0], (2,)),
    "plus": ([_R, _R], (2,)),
    "minus": ([_R, -_R], (2,)),
    "singlet": ([0.0, _R, -_R, 0.0], (2, 2)),
    "updown": ([0.0, 1.0, 0.0, 0.0], (2, 2)),
    "downup": ([0.0, 0.0, 1.0, 0.0], (2, 2)),
    "upup": ([1.0, 0.0, 0.0, 0.0], (2, 2)),
}


def _pair(a, b):
    return qla.tensor(a, b)


def _test_operator(tag):
    eye = qla.identity(2)
    single = {"sigma_x": qla.X_AXIS, "sigma_y": qla.Y_AXIS, "sigma_z": qla.Z_AXIS}
    if tag in single:
        return qla.pauli_dot(single[tag])
    if tag.endswith(("_e", "_p")) and tag[:-2] in single:
        s = qla.pauli_dot(single[tag[:-2]])
        return _pair(s, eye) if tag.endswith("_e") else _pair(eye, s)
    if tag == "s_squared":
        return epr.s_squared()
    if tag.startswith("sigma_total_") and tag[-1] in "xyz":
        return epr.sigma_total(single["sigma_" + tag[-1]])
    return None


TEST_TAGS = ("sigma_x", "sigma_y", "sigma_z", "sigma_x_e", "sigma_y_e", "sigma_z_e", "sigma_x_p",
             "sigma_y_p", "sigma_z_p", "s_squared", "sigma_total_x", "sigma_total_y", "sigma_total_z")


def _sem(msg, span, lexeme="", code="semantic"):
    span = span or Span(1, 1)
    raise UdlSemanticError(msg, span.line, span.col, lexeme, code=code)


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _flag(block, normalize):
    value = block.get("normalize", "false")
    if value not in ("true", "false"):
        _sem("normalize must be true or false", block.span_of("normalize"), str(value), "bad-value")
    return normalize or value == "true"


def _axis(block, key, normalize, value=None):
    value = block.get(key) if value is None else value
    span = block.span_of(key)
    if not (isinstance(value, tuple) and all(_is_number(x) for x in value)):
        _sem(f"{key} must be a triple", span, key, "bad-value")
    v = np.array(value, dtype=float)
    n2 = float(v @ v)
    if abs(n2 - 1.0) > AXIS_TOL:
        if not normalize:
            _sem(f"{key}: axis not unit-norm", span, key, "axis-not-unit")
        if n2 == 0.0:
            _sem(f"{key}: zero axis cannot be normalized", span, key, "axis-not-unit")
        v = v / math.sqrt(n2)
    return AxisVector(*(float(x) for x in v))


def _int(block, key, default=None, allowed=None, minimum=None):
    if key not in block.settings:
        if default is None:
            _sem(f"missing key {key!r}", block.span, key, "missing-key")
        return default
    value = block.settings[key]
    span = block.span_of(key)
    if not isinstance(value, int) or isinstance(value, bool):
        _sem(f"{key} must be an integer", span, key, "bad-value")
    if allowed is not None and value not in allowed:
        _sem(f"{key} must be one of {', '.join(f'{a:+d}' for a in allowed)}", span, key, "bad-value")
    if minimum is not None and value < minimum:
        _sem(f"{key} must be at least {minimum}", span, key, "bad-value")
    return value


def _su2(block, key, normalize, default=None):
    if key not in block.settings:
        if default is None:
            _sem(f"missing key {key!r}", block.span, key, "missing-key")
        return default
    value = block.settings[key]
    if not isinstance(value, Su2Expr):
        _sem(f"{key} must be su2(axis=..., angle=...)", block.span_of(key), key, "bad-value")
    return Su2Params(_axis(block, key, normalize, value.axis), float(value.angle))


def _unknown_keys(block, allowed):
    for key in block.settings:
        if key not in allowed:
            _sem(f"unknown key {key!r} in {block.kind} block", block.span_of(key), key, "unknown-key")


def _check_toy(block, normalize):
    _unknown_keys(block, TOY_KEYS)
    return toy_config(block, normalize=normalize)


def _check_epr(block, normalize):
    _unknown_keys(block, EPR_KEYS)
    return epr_config(block, normalize=normalize)


def _check_decay(block, normalize):
    _unknown_keys(block, DECAY_KEYS)
    return decay_problem(block, normalize=normalize)


def _check_diagram(block, normalize):
    if block.settings:
        key = next(iter(block.settings))
        _sem(f"unknown key {key!r} in diagram block", block.span_of(key), key, "unknown-key")
    return diagram_graph(block)


_CHECKS = {"toy": _check_toy, "epr": _check_epr, "decay": _check_decay, "diagram": _check_diagram}


def check_document(doc, normalize=False):
    seen = set()
    for block in doc.blocks:
        if block.name in seen:
            _sem(f"duplicate block name {block.name!r}", block.span, block.name, "duplicate-block")
        seen.add(block.name)
        if block.kind != "diagram" and (block.nodes or block.edges):
            decl = (block.nodes or block.edges)[0]
            _sem(f"node and edge declarations are only allowed in diagram blocks", decl.span, "", "unknown-key")
        _CHECKS[block.kind](block, normalize)


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------


def toy_config(block, seed=None, normalize=False):
    normalize = _flag(block, normalize)
    axis = _axis(block, "axis_a", normalize) if "axis_a" in block.settings else qla.Z_AXIS
    return ToyConfig(
        axis_a=axis,
        lambda0=_int(block, "lambda0", 1, allowed=(1, -1)),
        U=_su2(block, "U", normalize, Su2Params(qla.X_AXIS, 1.0)),
        V=_su2(block, "V", normalize, Su2Params(qla.Y_AXIS, math.sqrt(2.0))),
        steps=_int(block, "steps", 10, minimum=0),
        seed=seed if seed is not None else _int(block, "seed", 0),
    )


def epr_config(block, seed=None, runs=None, normalize=False):
    normalize = _flag(block, normalize)
    topology = block.get("topology", epr.Topology.ELECTRON_FIRST.value)
    if topology not in {t.value for t in epr.Topology}:
        _sem("topology must be electron_first or positron_first", block.span_of("topology"), str(topology), "bad-value")
    for key in ("b", "c"):
        if key not in block.settings:
            _sem(f"missing key {key!r}", block.span, key, "missing-key")
    return epr.EprConfig(
        axis_b=_axis(block, "b", normalize),
        axis_c=_axis(block, "c", normalize),
        topology=topology,
        runs=runs if runs is not None else _int(block, "runs", 1000, minimum=1),
        seed=seed if seed is not None else _int(block, "seed", 0),
    )


def decay_problem(block, normalize=False):
    """A spin-1/2 decay problem: start in |+psi_axis>, final test sigma . lambda_axis."""
    normalize = _flag(block, normalize)
    for key in ("psi_axis", "lambda_axis"):
        if key not in block.settings:
            _sem(f"missing key {key!r}", block.span, key, "missing-key")
    psi = epr.spin_state(_axis(block, "psi_axis", normalize), 1)
    lam_op = qla.pauli_dot(_axis(block, "lambda_axis", normalize))
    target = _int(block, "lambda", 1, allowed=(1, -1))
    has_total, has_step = "U" in block.settings, "U_step" in block.settings
    if has_total == has_step:
        _sem("decay block needs exactly one of U or U_step", block.span, "", "missing-key")
    if has_step:
        u_step = _su2(block, "U_step", normalize).unitary()
        n_steps = _int(block, "N", None, minimum=1)
        return DecayProblem(psi, lam_op, float(target), u_step=u_step, n_steps=n_steps)
    if "N" in block.settings:
        _sem("N requires U_step", block.span_of("N"), "N", "bad-value")
    return DecayProblem(psi, lam_op, float(target), u_total=_su2(block, "U", normalize).unitary())


def diagram_graph(block):
    """ProcessGraph for a diagram block.

    Node attributes: one stage (past, active, future; default active); for
    events a state tag (default up); for tests an optional operator tag.
    """
    events, tests, complexes, ids = [], [], [], set()
    for node in block.nodes:
        if node.id in ids:
            _sem(f"duplicate node id {node.id!r}", node.span, node.id, "duplicate-id")
        ids.add(node.id)
        stage, state_tag, op_tag = Stage.ACTIVE, None, None
        for attr in node.attrs:
            if attr in STAGE_ATTRS:
                stage = STAGE_ATTRS[attr]
            elif node.kind == "event" and attr in EVENT_STATES:
                state_tag = attr
            elif node.kind == "test" and attr in TEST_TAGS:
                op_tag = attr
            else:
                _sem(f"unknown attribute {attr!r} for {node.kind} {node.id!r}", node.span, attr, "unknown-attr")
        try:
            if node.kind == "event":
                amps, dims = EVENT_STATES[state_tag or "up"]
                state = None if stage is Stage.FUTURE else StateVector(amps)
                events.append(Event(node.id, state, dims, stage))
            elif node.kind == "test":
                ops = (_test_operator(op_tag),) if op_tag else ()
                tests.append(Test(node.id, ops, stage))
            else:
                complexes.append(Complex(node.id, stage))
        except ValidationError as exc:
            _sem(str(exc), node.span, node.id, "bad-value")
    edges = []
    for e in block.edges:
        for end in (e.source, e.target):
            if end not in ids:
                _sem(f"edge references undefined node {end!r}", e.span, end, "dangling-edge")
        edges.append(Edge(e.source, e.target, EDGE_OPS[e.op]))
    return ProcessGraph(events=events, tests=tests, complexes=complexes, edges=edges)


# --------------------------------------------------------------------------
# Serializer
# --------------------------------------------------------------------------


def format_number(x):
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    text = format(float(x), ".17g")
    if not any(ch in text for ch in ".e"):
        text += ".0"
    return text


def _format_value(v):
    if isinstance(v, Su2Expr):
        return f"su2(axis={_format_value(v.axis)}, angle={format_number(v.angle)})"
    if isinstance(v, tuple):
        return "(" + ", ".join(format_number(x) for x in v) + ")"
    if isinstance(v, str):
        return v
    return format_number(v)


def serialize(doc):
    """Canonical text: keys sorted, numbers at 17 significant digits, two-space indent."""
    parts = []
    for block in doc.blocks:
        lines = [f"{block.kind} {block.name} {{"]
        for key in sorted(block.settings):
            lines.append(f"  {key} = {_format_value(block.settings[key])}")
        for node in block.nodes:
            attrs = f" [{' '.join(node.attrs)}]" if node.attrs else ""
            lines.append(f"  {node.kind} {node.id}{attrs}")
        for e in block.edges:
            lines.append(f"  {e.source} {e.op} {e.target}")
        lines.append("}")
        parts.append("\n".join(lines) + "\n")
    return "\n".join(parts)


def graph_to_block(g, name="scene"):
    """Diagram block for a graph whose nodes carry no custom states or operators."""
    stage_attr = {v: k for k, v in STAGE_ATTRS.items()}
    block = Block("diagram", name)
    for node in sorted(g.nodes(), key=lambda n: n.id):
        kind = {Event: "event", Test: "test", Complex: "complex"}[type(node)]
        block.nodes.append(NodeDecl(kind, node.id, (stage_attr[node.stage],)))
    for e in g.edges:
        block.edges.append(EdgeDecl(e.source, OP_FOR_KIND[e.kind], e.target))
    return block
