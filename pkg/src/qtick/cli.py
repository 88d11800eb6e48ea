"""Command-line entry point.

Machine output is JSON (or DOT for ``render``) on stdout; diagnostics go to
stderr. Exit codes: 0 success, 1 validation or semantic error, 2 usage error.

``--seed`` always overrides a seed given in the input file.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import epr, pictures, render, toy, udl
from .errors import GraphStructureError, QtickError, ValidationError
from .qla import AxisVector

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2

# Exact results carry float noise at the last bit or two (e.g. -0.9999999999999998
# for b = c); 15 significant digits reports them cleanly.
REPORT_DIGITS = 15


def _round(x):
    return float(format(float(x), f".{REPORT_DIGITS}g"))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _axis_arg(text):
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z but got {text!r}") from None
    if len(parts) != 3 or not all(math.isfinite(p) for p in parts):
        raise argparse.ArgumentTypeError(f"expected three finite components, got {text!r}")
    return tuple(parts)


def _axis(triple, normalize):
    v = np.array(triple)
    n2 = float(v @ v)
    if abs(n2 - 1.0) > udl.AXIS_TOL:
        if not normalize:
            raise ValidationError(f"axis {triple} not unit-norm (pass --normalize to rescale)")
        if n2 == 0.0:
            raise ValidationError("zero axis cannot be normalized")
        v = v / math.sqrt(n2)
    return AxisVector(*(float(x) for x in v))


def _threads():
    raw = os.environ.get("QTICK_THREADS", "").strip()
    if not raw:
        return 0
    try:
        return max(0, int(raw))
    except ValueError:
        raise ValidationError(f"QTICK_THREADS must be an integer, got {raw!r}") from None


def _load(path, normalize):
    try:
        with open(path, "rb") as fh:
            data = fh.read(udl.MAX_INPUT_BYTES + 1)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    return udl.parse(data, normalize=normalize)


def _emit(obj, out):
    out.write(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def _note(args, text, err):
    if getattr(args, "verbose", False):
        err.write(text + "\n")


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_toy_run(args, out, err):
    doc = _load(args.file, args.normalize)
    cfg = udl.toy_config(doc.block("toy", args.block), seed=args.seed, normalize=args.normalize)
    run = toy.run_toy(cfg)
    _note(args, f"lambdas: {' '.join(f'{x:+d}' for x in run.lambdas)}", err)
    _emit(toy.run_to_dict(cfg, run), out)
    return EXIT_OK


def cmd_toy_enumerate(args, out, err):
    doc = _load(args.file, args.normalize)
    cfg = udl.toy_config(doc.block("toy", args.block), seed=args.seed, normalize=args.normalize)
    tree = toy.enumerate_tree(cfg, args.depth)
    _note(args, f"{len(tree.leaves())} leaves, {len(tree.pruned)} pruned", err)
    if args.plot:
        from . import plotting

        plotting.plot_tree_leaves(tree, args.plot)
    _emit(toy.tree_to_dict(cfg, tree), out)
    return EXIT_OK


def _exact_report(b, c, topology):
    table = epr.exact_joint(b, c, topology)
    rounded = {k: _round(v) for k, v in epr.table_to_dict(table).items()}
    return {"table": rounded, "E": _round(epr.expectation(table))}


def cmd_epr_run(args, out, err):
    doc = _load(args.file, args.normalize)
    cfg = udl.epr_config(doc.block("epr", args.block), seed=args.seed, runs=args.runs, normalize=args.normalize)
    records = epr.run_epr(cfg, workers=_threads())
    report = {
        "config": cfg.to_dict(),
        "exact": _exact_report(cfg.axis_b, cfg.axis_c, cfg.topology),
        "sampled": epr.sampled_summary(records),
    }
    if args.include_runs:
        report["runs"] = [r.to_dict() for r in records]
    _note(args, f"E exact {report['exact']['E']}, sampled {report['sampled']['E_hat']:.6f}", err)
    if args.plot:
        from . import plotting

        plotting.plot_epr_table(report["exact"]["table"], report["sampled"]["counts"], args.plot)
    _emit(report, out)
    return EXIT_OK


def cmd_epr_correlate(args, out, err):
    b, c = _axis(args.b, args.normalize), _axis(args.c, args.normalize)
    _emit({"E": _round(epr.correlation(b, c))}, out)
    return EXIT_OK


def cmd_epr_chsh(args, out, err):
    axes = [_axis(a, args.normalize) for a in (args.b, args.b2, args.c, args.c2)]
    _emit({"S": _round(epr.chsh(*axes))}, out)
    return EXIT_OK


def cmd_decay_check(args, out, err):
    doc = _load(args.file, args.normalize)
    problem = udl.decay_problem(doc.block("decay", args.block), normalize=args.normalize)
    report = pictures.compare_pictures(problem)
    _emit(report.to_dict(), out)
    if report.breach:
        err.write(f"pictures disagree: max delta {report.max_delta:.3e}\n")
        return EXIT_INVALID
    return EXIT_OK


def cmd_render(args, out, err):
    if args.source in render.FIGURES:
        graph = render.builtin_figure(args.source)
    else:
        doc = _load(args.source, args.normalize)
        graph = udl.diagram_graph(doc.block("diagram", args.block))
    try:
        text = render.to_dot(graph)
    except render.InvalidGraphError as exc:
        for v in exc.violations:
            err.write(f"{v.code}: {v.node}: {v.message}\n")
        _emit({"valid": False, "violations": [{"code": v.code, "node": v.node, "message": v.message} for v in exc.violations]}, out)
        return EXIT_INVALID
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        _emit({"valid": True, "output": args.output, "nodes": len(graph.nodes()), "edges": len(graph.edges)}, out)
    else:
        out.write(text)
    return EXIT_OK


def cmd_parse(args, out, err):
    doc = _load(args.file, args.normalize)
    _emit({"valid": True, "blocks": [{"kind": b.kind, "name": b.name} for b in doc.blocks]}, out)
    return EXIT_OK


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--normalize", action="store_true", help="rescale non-unit axes instead of rejecting them")
    common.add_argument("--verbose", action="store_true", help="human-readable summary on stderr")

    p = _Parser(prog="qtick", description="Quantum automaton simulations driven by UDL files.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    toy_p = sub.add_parser("toy", help="self-referential toy universe")
    toy_sub = toy_p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    r = toy_sub.add_parser("run", parents=[common], help="sample one history")
    r.add_argument("file")
    r.add_argument("--seed", type=int)
    r.add_argument("--block")
    r.set_defaults(func=cmd_toy_run)
    e = toy_sub.add_parser("enumerate", parents=[common], help="exhaustive history tree")
    e.add_argument("file")
    e.add_argument("--depth", type=int, required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--block")
    e.add_argument("--plot", metavar="OUT.png")
    e.set_defaults(func=cmd_toy_enumerate)

    epr_p = sub.add_parser("epr", help="singlet correlation experiments")
    epr_sub = epr_p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    r = epr_sub.add_parser("run", parents=[common], help="Monte-Carlo runs with the exact table")
    r.add_argument("file")
    r.add_argument("--seed", type=int)
    r.add_argument("--runs", type=int)
    r.add_argument("--block")
    r.add_argument("--include-runs", action="store_true", help="list every run record")
    r.add_argument("--plot", metavar="OUT.png")
    r.set_defaults(func=cmd_epr_run)
    c = epr_sub.add_parser("correlate", parents=[common], help="exact E(b, c)")
    c.add_argument("--b", type=_axis_arg, required=True)
    c.add_argument("--c", type=_axis_arg, required=True)
    c.set_defaults(func=cmd_epr_correlate)
    s = epr_sub.add_parser("chsh", parents=[common], help="exact CHSH combination")
    for name in ("--b", "--b2", "--c", "--c2"):
        s.add_argument(name, type=_axis_arg, required=True)
    s.set_defaults(func=cmd_epr_chsh)

    decay_p = sub.add_parser("decay", help="picture equivalence")
    decay_sub = decay_p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    d = decay_sub.add_parser("check", parents=[common], help="compare the three pictures")
    d.add_argument("file")
    d.add_argument("--block")
    d.set_defaults(func=cmd_decay_check)

    rd = sub.add_parser("render", parents=[common], help="DOT for a built-in figure or a diagram block")
    rd.add_argument("source", metavar="FIGNAME|FILE")
    rd.add_argument("-o", "--output", metavar="OUT.dot")
    rd.add_argument("--block")
    rd.set_defaults(func=cmd_render)

    ps = sub.add_parser("parse", parents=[common], help="syntax and semantic check only")
    ps.add_argument("file")
    ps.set_defaults(func=cmd_parse)
    return p


def run(argv=None, out=None, err=None):
    """Run the CLI; returns the exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args, out, err)
    except udl.UdlError as exc:
        path = getattr(args, "file", None) or getattr(args, "source", "")
        err.write(f"{path}:{exc}\n")
        _emit({"valid": False, "error": exc.to_dict()}, out)
        return EXIT_INVALID
    except (QtickError, GraphStructureError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INVALID


def main():
    sys.exit(run())
