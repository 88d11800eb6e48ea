import io
import json
import subprocess
import sys

import pytest

from qtick import cli

from .conftest import FIXTURES

DEMO = str(FIXTURES / "udl" / "demo.udl")


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_correlate_equal_axes():
    code, out, _ = call("epr", "correlate", "--b", "0,0,1", "--c", "0,0,1")
    assert code == 0 and json.loads(out) == {"E": -1.0}


def test_correlate_requires_unit_axes_unless_normalized():
    code, _, err = call("epr", "correlate", "--b", "1,1,0", "--c", "0,0,1")
    assert code == 1 and "not unit-norm" in err
    code, out, _ = call("epr", "correlate", "--b", "1,1,0", "--c", "1,0,0", "--normalize")
    assert code == 0 and json.loads(out)["E"] == pytest.approx(-2 ** -0.5)


def test_chsh():
    code, out, _ = call("epr", "chsh", "--b", "0,0,1", "--b2", "1,0,0",
                        "--c", "0.7071067811865476,0,0.7071067811865476",
                        "--c2=0.7071067811865476,0,-0.7071067811865476")
    assert code == 0 and abs(json.loads(out)["S"]) == pytest.approx(2 * 2 ** 0.5, abs=1e-9)


def test_toy_enumerate_depth_two():
    code, out, _ = call("toy", "enumerate", DEMO, "--depth", "2")
    data = json.loads(out)
    assert code == 0 and len(data["leaves"]) == 4
    assert sum(leaf["prob"] for leaf in data["leaves"]) == pytest.approx(1, abs=1e-12)


def test_toy_run_seed_precedence_and_determinism():
    a = call("toy", "run", DEMO)
    b = call("toy", "run", DEMO)
    assert a == b
    assert json.loads(a[1])["config"]["seed"] == 42
    c = call("toy", "run", DEMO, "--seed", "5")
    assert json.loads(c[1])["config"]["seed"] == 5


def test_verbose_goes_to_stderr():
    code, out, err = call("toy", "run", DEMO, "--verbose")
    assert code == 0 and err.startswith("lambdas:")
    json.loads(out)


def test_epr_run(monkeypatch):
    path = str(FIXTURES / "udl" / "epr_bell.udl")
    code, out, _ = call("epr", "run", path, "--runs", "500")
    data = json.loads(out)
    assert code == 0 and set(data) == {"config", "exact", "sampled"}
    assert set(data["exact"]) == {"table", "E"} and set(data["sampled"]) == {"counts", "E_hat", "stderr"}
    monkeypatch.setenv("QTICK_THREADS", "3")
    assert call("epr", "run", path, "--runs", "500")[1] == out
    code, out, _ = call("epr", "run", path, "--runs", "4", "--include-runs", "--block", "tilted")
    assert len(json.loads(out)["runs"]) == 4


def test_decay_check():
    code, out, _ = call("decay", "check", str(FIXTURES / "udl" / "decay.udl"), "--block", "ticks")
    data = json.loads(out)
    assert code == 0 and data["max_delta"] <= 1e-9 and not data["breach"]


def test_render_builtin_and_file(tmp_path):
    code, out, _ = call("render", "fig1")
    assert code == 0 and out == (FIXTURES / "dot" / "fig1.dot").read_text(encoding="utf-8")
    target = tmp_path / "chain.dot"
    code, out, _ = call("render", str(FIXTURES / "udl" / "diagram_chain.udl"), "-o", str(target))
    assert code == 0 and json.loads(out)["valid"] and target.read_text().startswith("// qtick")


def test_render_invalid_graph_exit_one():
    code, out, err = call("render", "fig5")
    assert code == 1 and "entangled-multi-test" in err
    assert json.loads(out)["violations"][0]["code"] == "entangled-multi-test"


def test_parse_ok_and_broken(tmp_path):
    code, out, _ = call("parse", DEMO)
    assert code == 0 and json.loads(out)["blocks"] == [{"kind": "toy", "name": "demo"}]
    broken = tmp_path / "broken.udl"
    broken.write_text("toy t {\n  steps = = 3\n}\n")
    code, out, err = call("parse", str(broken))
    assert code == 1 and ":2:11:" in err
    assert json.loads(out)["error"]["kind"] == "syntactic"


def test_missing_file_is_validation_error():
    code, _, err = call("parse", "/nonexistent.udl")
    assert code == 1 and "cannot read" in err


@pytest.mark.parametrize("argv", [["bogus"], ["toy"], ["toy", "enumerate", "x.udl"], ["epr", "correlate", "--b", "1,2"], []])
def test_usage_errors_exit_two(argv, capsys):
    assert cli.run(argv) == 2
    assert "usage" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qtick", "epr", "correlate", "--b", "0,0,1", "--c", "1,0,0"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout) == {"E": 0.0}
