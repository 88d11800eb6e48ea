import re
import subprocess
import sys

import pytest

from qtick import automaton, render
from qtick.automaton import Stage
from qtick.errors import ValidationError

from .conftest import FIXTURES

VALID = [f for f in render.FIGURES if f != "fig5"]
GOLDEN = sorted((FIXTURES / "dot").glob("*.dot"))


def node_line(text, node_id):
    return next(line for line in text.splitlines() if line.strip().startswith(f'"{node_id}" ['))


def edge_lines(text):
    return [line for line in text.splitlines() if "->" in line]


@pytest.mark.parametrize("name", VALID)
def test_golden_files(name):
    assert render.to_dot(render.builtin_figure(name)) == (FIXTURES / "dot" / f"{name}.dot").read_text(encoding="utf-8")


def test_empty_graph():
    text = render.to_dot(automaton.ProcessGraph())
    assert text == render.HEADER + "digraph g {}\n"
    assert text == (FIXTURES / "dot" / "empty.dot").read_text(encoding="utf-8")


def test_fig1_shading_and_shapes():
    text = render.to_dot(render.builtin_figure("fig1"))
    for node in ("Sigma1", "Sigma2", "A", "O2"):
        assert "fillcolor=gray80" in node_line(text, node)
    for node in ("X", "O1", "B", "C"):
        assert "filled" not in node_line(text, node)
    assert "shape=circle,width=0.9" in node_line(text, "X")
    assert "shape=circle,width=0.45" in node_line(text, "Sigma1")
    assert "shape=doublecircle" in node_line(text, "O1")
    assert '"O1" -> "Sigma1" [dir=none]' in text
    assert '"X" -> "Sigma1" [dir=forward]' in text


def test_fig1_node_set():
    ids = {n.id for n in render.builtin_figure("fig1").nodes()}
    assert ids == {"X", "O1", "O2", "A", "B", "C", "Sigma1", "Sigma2"}


def test_nodes_sorted_edges_in_declaration_order():
    g = render.builtin_figure("fig3")
    text = render.to_dot(g)
    ids = [re.match(r'\s*"([^"]+)" \[', line).group(1) for line in text.splitlines() if re.match(r'\s*"[^"]+" \[', line)]
    assert ids == sorted(ids)
    assert [re.findall(r'"([^"]+)"', line)[:2] for line in edge_lines(text)] == [[e.source, e.target] for e in g.edges]


def test_complex_flow_is_double_line():
    text = render.to_dot(render.builtin_figure("fig7"))
    assert 'dir=forward,color="black:black",label="N"' in text


def test_fig6_variants_differ_only_in_wiring():
    a = render.to_dot(render.builtin_figure("fig6a"))
    b = render.to_dot(render.builtin_figure("fig6b"))
    assert a != b
    strip = lambda t: [line for line in t.splitlines() if "->" not in line]
    assert strip(a) == strip(b)
    assert sorted(edge_lines(a)) != sorted(edge_lines(b))


def test_fig2_null_test_insertion():
    a, b = render.builtin_figure("fig2a"), render.builtin_figure("fig2b")
    assert {n.id for n in b.nodes()} - {n.id for n in a.nodes()} == {"sigma_null", "psi_prime"}
    assert b.node("psi_prime").state.fidelity(b.node("psi").state) == pytest.approx(1, abs=1e-12)


def test_fig5_refuses_to_render():
    with pytest.raises(render.InvalidGraphError) as info:
        render.to_dot(render.builtin_figure("fig5"))
    assert [v.code for v in info.value.violations] == ["entangled-multi-test"]


def test_unknown_figure():
    with pytest.raises(ValidationError):
        render.builtin_figure("fig9")


def test_builtin_figures_are_fresh_objects():
    a = render.builtin_figure("fig1")
    a.edges.clear()
    assert render.builtin_figure("fig1").edges


@pytest.mark.parametrize("path", GOLDEN, ids=lambda p: p.name)
def test_golden_files_are_well_formed(path):
    assert render.check_dot(path.read_text(encoding="utf-8")) == []


@pytest.mark.parametrize("bad", [
    "digraph g {",
    "digraph g { a -> }",
    'digraph g { "a" [shape=] }',
    "digraph g { a [shape circle] }",
    "graph { } extra",
    'digraph g { "unterminated }',
])
def test_checker_rejects_malformed(bad):
    assert render.check_dot(bad) != []


def test_checker_accepts_standard_forms():
    assert render.check_dot('strict digraph "x" { node [shape=box]; a -> b -> c [color=red; style=bold]; rankdir=LR }') == []


def test_output_is_stable_across_processes():
    code = "from qtick import render; print(render.to_dot(render.builtin_figure('fig2b')), end='')"
    outs = {subprocess.run([sys.executable, "-c", code], capture_output=True, check=True).stdout for _ in range(2)}
    assert len(outs) == 1
