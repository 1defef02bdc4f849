"""Command-line entry point.

Exit status: 0 when every check passes, 1 when a check fails, 2 on malformed
input.  ``--json`` writes the machine-readable report; ``--report-dir``
writes a tab-separated table and figures next to it.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import clocks, frames, order, suite, theories, trees, wtypes
from .jsonio import (
    InputError,
    fixpoint_from_json,
    frame_from_json,
    frame_to_names,
    poset_from_json,
    poset_to_json,
    polynomial_from_json,
    read_json,
    theory_from_json,
)
from .report import Result, RunReport, plot_hasse, plot_results, plot_sequence, to_jsonable


def _load(path, report: RunReport):
    if path == "-":
        raw = sys.stdin.read()
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as e:
            raise InputError("/", f"invalid JSON on stdin: {e.msg}") from None
        report.inputs["<stdin>"] = "stdin"
        return doc, Path(".")
    p = Path(path)
    if not p.exists():
        raise InputError("/", f"no such file {path!r}")
    doc, digest = read_json(p)
    report.inputs[str(p)] = digest
    return doc, p.parent


def _check(report: RunReport, chk) -> None:
    report.add(Result(chk.name, bool(chk.ok), None if chk.ok else chk.witness))


# -- subcommands ---------------------------------------------------------------


def cmd_check_wf(args, report):
    doc, _ = _load(args.file, report)
    w = poset_from_json(doc)
    for chk in order.is_compatible_wf(w).checks:
        _check(report, chk)
    report.output = {"connected": order.is_connected(w.base)}
    if args.report_dir:
        plot_hasse(w, Path(args.report_dir) / "poset.png")


def cmd_check_loeb(args, report):
    doc, base = _load(args.file, report)
    if isinstance(doc, dict) and "elements" in doc:
        doc = {"downsets_of": doc}
    bf = frame_from_json(doc, base)
    chk = frames.check_loeb(bf)
    report.add(Result("loeb", chk.ok, None if chk.ok else frame_to_names(bf, chk.witness)))
    for c in frames.check_wellpointed_lex(bf):
        _check(report, c)
    report.output = "PASS" if chk.ok else {"counterexample": frame_to_names(bf, chk.witness)}


def cmd_plump(args, report):
    doc, _ = _load(args.file, report)
    poly = polynomial_from_json(doc)
    try:
        refl = wtypes.plump_poset(poly, args.depth)
    except OverflowError as e:
        raise InputError("/shapes", str(e)) from None
    w = refl.as_wf()
    for chk in order.is_compatible_wf(w).checks:
        _check(report, chk)
    report.output = poset_to_json(w, str)
    if args.report_dir:
        plot_hasse(w, Path(args.report_dir) / "plump.png", f"plump order, depth {args.depth}")


def fixpoint_program(program: dict, stages: int) -> trees.StagedMap:
    kind = program["kind"]
    if kind == "map-successor":
        m = program["modulus"]
        s = trees.GuardedStream(range(m))
        return trees.cons_step(s, program["head"], lambda v: (v + 1) % m, check_upto=min(stages, 4))
    s = trees.GuardedStream(program["values"])
    if kind == "cons-literal":
        return trees.cons_step(s, program["head"], check_upto=min(stages, 4))
    return trees.constant_step(s, trees.cycle_element(s, program["cycle"]), check_upto=min(stages, 4))


def cmd_fixpoint(args, report):
    doc, _ = _load(args.file, report)
    f = fixpoint_program(fixpoint_from_json(doc), args.stages)
    g = trees.gfix(f)
    bad = trees.fixpoint_failure(f, g, args.stages)
    report.add(Result("fixpoint_equation", bad is None, bad))
    try:
        unique = trees.check_fix_unique(f, args.stages)
        report.add(Result("unique", unique))
    except OverflowError as e:
        report.add(Result("unique", True, detail=f"skipped: {e}"))
    report.output = [list(x) for x in g.prefix(args.stages)]


def cmd_eval_stream(args, report):
    try:
        s = clocks.builtin_costream(args.program, args.modulus)
    except KeyError as e:
        raise InputError("/program", str(e.args[0])) from None
    values = clocks.co_take(args.take, s)
    report.output = values
    report.add(Result("take_matches_fixpoint", values == [s.at(max(args.take - 1, 0))[i] for i in range(args.take)]))
    if args.report_dir and values:
        plot_sequence(values, Path(args.report_dir) / "stream.png", f"{args.program}, first {args.take}")


def cmd_check_multiclock(args, report):
    b = args.bound
    iso = clocks.check_fp_op_iso(b, b, seed=args.seed)
    report.add(Result("fp_op_iso", iso.ok, iso.hom_mismatches[:3] or iso.functor_failures[:3] or None,
                      f"{iso.homs_checked} hom-sets"))
    clk = clocks.check_fp_op_iso(b, b, nonempty=True, seed=args.seed)
    report.add(Result("clk_nonempty_iso", clk.ok, clk.hom_mismatches[:3] or None))
    sd = clocks.check_semidirect(b, b, seed=args.seed, cartesian_clocks=min(b, 2), cartesian_depth=min(b, 2))
    report.add(Result("semidirect", sd.ok, None if sd.ok else {
        "homs": sd.hom_failures[:3], "cartesian": sd.cartesian_failures[:3]}))
    forced = clocks.check_force_iso(clocks.stream_in("k", (0, 1)), "k", clocks.ClockContext(), args.stages)
    for i in range(10):
        x, ctx = clocks.random_multipresheaf(f"{args.seed}:{i}")
        forced += clocks.check_force_iso(x, "k", ctx, args.stages)
    report.add(Result("force_iso", not forced, forced[:3] or None))
    irr = clocks.check_clock_irrelevance(clocks.stream_in("j", (0, 1)), "k", clocks.ClockContext.of(j=b), args.stages)
    report.add(Result("clock_irrelevance", irr))
    ctxs = clocks.demanded_contexts(["k", "j"], min(b, 2), ["k"])
    wp = clocks.wellpointed_failures(clocks.stream_in("k", (0, 1)), "k", ctxs)
    report.add(Result("wellpointed_per_clock", not wp, wp[:3] or None))


def cmd_models(args, report):
    doc, _ = _load(args.file, report)
    t = theory_from_json(doc)
    models = theories.enumerate_models(t)
    report.output = {"count": len(models), "models": [sorted(m, key=repr) for m in models]}


def cmd_filters(args, report):
    doc, _ = _load(args.file, report)
    w = poset_from_json(doc)
    if not w.base.is_antisymmetric():
        raise InputError("/leq", "filters are computed on a poset; leq is not antisymmetric")
    oracle = theories.filters_oracle(w.base)
    models = theories.enumerate_models(theories.filt_theory(w.base))
    report.add(Result("models_match_filters", set(oracle) == set(models)))
    report.output = {"count": len(oracle), "filters": [sorted(f, key=repr) for f in oracle]}


def cmd_bag(args, report):
    doc, _ = _load(args.file, report)
    t = theory_from_json(doc)
    b = theories.ibag_theory(t) if args.inhabited else theories.bag_theory(t)
    n_models = len(theories.enumerate_models(t))
    bag = theories.enumerate_bag_models(b, args.max_k)
    iso = theories.bag_models_up_to_iso(bag)
    expected = theories.bag_count(n_models, args.max_k, args.inhabited)
    report.add(Result("counts_match", (len(bag), len(iso)) == expected, {"expected": expected}))
    report.output = {"theory": str(b), "models_of_base": n_models, "raw": len(bag), "up_to_iso": len(iso)}


def cmd_suite(args, report):
    ran = suite.run_suite(seed=args.seed, stages=args.stages, workers=args.workers)
    report.results.extend(ran.results)


COMMANDS = {
    "check-wf": cmd_check_wf,
    "check-loeb": cmd_check_loeb,
    "plump": cmd_plump,
    "fixpoint": cmd_fixpoint,
    "eval-stream": cmd_eval_stream,
    "check-multiclock": cmd_check_multiclock,
    "models": cmd_models,
    "filters": cmd_filters,
    "bag": cmd_bag,
    "suite": cmd_suite,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--stages", type=int, default=8, help="stage bound for stage-indexed checks")
    common.add_argument("--bound", type=int, default=3, help="clock and depth bound for category checks")
    common.add_argument("--max-k", type=int, default=3, help="largest index set for bag models")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json", metavar="OUT", help="write the JSON report here")
    common.add_argument("--report-dir", metavar="DIR", help="write report.tsv and figures here")
    ap = argparse.ArgumentParser(prog="guardedlab", description="Finite checks for guarded recursion models.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("check-wf", "check-loeb", "models", "filters"):
        sub.add_parser(name, parents=[common]).add_argument("file", help="JSON input, or - for stdin")
    p = sub.add_parser("plump", parents=[common])
    p.add_argument("file")
    p.add_argument("--depth", type=int, default=3)
    sub.add_parser("fixpoint", parents=[common]).add_argument("file")
    p = sub.add_parser("eval-stream", parents=[common])
    p.add_argument("program", help="zeros, naturals-mod-m or alternating")
    p.add_argument("--take", type=int, default=10)
    p.add_argument("--modulus", type=int, default=10)
    sub.add_parser("check-multiclock", parents=[common])
    p = sub.add_parser("bag", parents=[common])
    p.add_argument("file")
    p.add_argument("--inhabited", action="store_true")
    sub.add_parser("suite", parents=[common]).add_argument("--workers", type=int, default=4)
    return ap


def _print_human(report: RunReport) -> None:
    for r in report.results:
        line = f"{'PASS' if r.ok else 'FAIL'}  {r.name}"
        if r.detail:
            line += f"  ({r.detail})"
        if not r.ok and r.witness is not None:
            line += f"  witness={json.dumps(to_jsonable(r.witness))}"
        print(line)
    if report.output is not None:
        out = report.output
        print(out if isinstance(out, str) else json.dumps(to_jsonable(out)))


def _warn(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    warnings.showwarning = _warn
    for name in ("stages", "bound", "max_k"):
        if getattr(args, name) < 0:
            print(f"error: --{name.replace('_', '-')} must be non-negative", file=sys.stderr)
            return 2
    report = RunReport(args.command)
    if args.report_dir:
        Path(args.report_dir).mkdir(parents=True, exist_ok=True)
    try:
        COMMANDS[args.command](args, report)
    except InputError as e:
        print(f"error: malformed input at {e}", file=sys.stderr)
        return 2
    report.finish()
    if args.command == "suite" or args.command == "plump":
        # machine-readable on stdout: the suite report, or a poset for piping
        doc = report.as_dict() if args.command == "suite" else report.output
        print(json.dumps(to_jsonable(doc), indent=None if args.command == "plump" else 2))
        if args.command == "plump":
            for r in report.results:
                if not r.ok:
                    print(f"FAIL  {r.name}", file=sys.stderr)
    else:
        _print_human(report)
    if args.json:
        report.write_json(args.json)
    if args.report_dir:
        report.write_tsv(Path(args.report_dir) / "report.tsv")
        if report.results:
            plot_results(report, Path(args.report_dir) / "checks.png")
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
