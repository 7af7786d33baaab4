"""Command-line entry point.

Exit codes: 0 success, 1 diagnostics / violations / counterexample, 2 usage error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .axioms import check_trajectory_axioms
from .export import to_csv, to_json, write_trace
from .refinement import NotComparable, implements_bounded
from .schedule import load_battery
from .sim import ConfigError, UnscheduledInput, simulate
from .wadl.elaborate import Elaboration, check_document
from .wadl.printer import pretty

OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load(path: str) -> Optional[Elaboration]:
    """Elaborate a file, printing diagnostics; None when it has errors."""
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: no such file")
    result, diags = check_document(p.read_text(encoding="utf-8"), str(p))
    for d in diags:
        _err(str(d))
    if result is None or any(d.severity == "error" for d in diags):
        return None
    return result


def _need_scenario(elab: Elaboration, path: str) -> bool:
    if elab.system is None or elab.config is None:
        _err(f"{path}: no scenario with a system to run")
        return False
    return True


def _config(elab: Elaboration, args):
    cfg = elab.config
    changes = {}
    if getattr(args, "dt", None) is not None:
        changes["dt"] = args.dt
    if getattr(args, "horizon", None) is not None:
        changes["horizon"] = args.horizon
    cfg = cfg.with_(**changes)
    try:
        cfg.steps
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    return cfg


def cmd_validate(args) -> int:
    elab = _load(args.file)
    if elab is None:
        return FAILED
    names = ", ".join(elab.automata) or "none"
    line = f"{args.file}: ok (automata: {names}"
    if elab.system is not None:
        line += f"; system: {elab.system.name}"
    print(line + ")")
    return OK


def cmd_compose(args) -> int:
    elab = _load(args.file)
    if elab is None:
        return FAILED
    if elab.system is None:
        _err(f"{args.file}: no scenario system to compose")
        return FAILED
    if args.print:
        sys.stdout.write(pretty(elab.system))
    else:
        print(elab.system.name)
    return OK


def cmd_simulate(args) -> int:
    elab = _load(args.file)
    if elab is None or not _need_scenario(elab, args.file):
        return FAILED
    cfg = _config(elab, args)
    try:
        res = simulate(elab.system, cfg)
    except UnscheduledInput as exc:
        _err(f"{args.file}: {exc}")
        return FAILED
    if args.out in (None, "-"):
        sys.stdout.write(to_json(res) if args.format == "json" else to_csv(res))
    else:
        write_trace(res, args.out, args.format)
        for e in res.events:
            print(f"{e.time:g}\t{e.action}")
    return OK


def cmd_check_implements(args) -> int:
    e1, e2 = _load(args.file1), _load(args.file2)
    if e1 is None or e2 is None:
        return FAILED
    if not (_need_scenario(e1, args.file1) and _need_scenario(e2, args.file2)):
        return FAILED
    if not Path(args.battery).is_file():
        raise UsageError(f"{args.battery}: no such file")
    battery = load_battery(args.battery)
    cfg = _config(e1, args)
    try:
        verdict = implements_bounded(e1.system, e2.system, battery, cfg.horizon, cfg=cfg, budget=args.budget)
    except NotComparable as exc:
        _err(f"interfaces differ: {exc}")
        return FAILED
    except UnscheduledInput as exc:
        _err(str(exc))
        return FAILED
    if verdict:
        print(verdict.summary())
        return OK
    cex = verdict.counterexample
    stim = next(s for s in battery if s.name == cex.stimulus)
    res = simulate(e1.system, cfg.with_(stimulus=stim))
    write_trace(res, args.cex_out, "json")
    print(verdict.summary())
    print(f"trace written to {args.cex_out}")
    return FAILED


def cmd_casestudy(args) -> int:
    from .casestudy.experiments import run_engage_scenario, run_equivalence_experiment

    if args.experiment == "equivalence":
        report = run_equivalence_experiment(chi=args.chi)
    else:
        report = run_engage_scenario(mode=args.mode)
    print(report)
    return OK if report.passed else FAILED


def cmd_axioms(args) -> int:
    elab = _load(args.file)
    if elab is None or not _need_scenario(elab, args.file):
        return FAILED
    cfg = _config(elab, args)
    stimuli = [cfg.stimulus]
    if args.battery:
        if not Path(args.battery).is_file():
            raise UsageError(f"{args.battery}: no such file")
        stimuli += load_battery(args.battery)
    try:
        results = [simulate(elab.system, cfg.with_(stimulus=s)) for s in stimuli]
    except UnscheduledInput as exc:
        _err(f"{args.file}: {exc}")
        return FAILED
    report = check_trajectory_axioms(results)
    print(report)
    return OK if report.ok else FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="worldautomata", description="World automata: validate, compose, simulate, check.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and elaborate a .wadl file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compose", help="build the scenario system")
    p.add_argument("file")
    p.add_argument("--print", action="store_true", help="print the composite's interface listing")
    p.set_defaults(func=cmd_compose)

    def run_flags(p):
        p.add_argument("--dt", type=float)
        p.add_argument("--horizon", type=float)

    p = sub.add_parser("simulate", help="run the scenario and write a trace file")
    p.add_argument("file")
    p.add_argument("--out", help="output path; '-' or absent writes to standard output")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    run_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check-implements", help="bounded trace inclusion of file1's system in file2's")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--battery", required=True, help="JSON file of input schedules")
    p.add_argument("--budget", type=int, default=1, help="choice vectors explored per stimulus")
    p.add_argument("--cex-out", default="counterexample.json", help="where to write a counterexample trace")
    run_flags(p)
    p.set_defaults(func=cmd_check_implements)

    p = sub.add_parser("casestudy", help="run a case-study experiment")
    p.add_argument("experiment", choices=("equivalence", "engage"))
    p.add_argument("--mode", choices=("single", "wrong_color", "two"), default="single", help="engage variant")
    p.add_argument("--chi", help="FalseField color for the equivalence run")
    p.set_defaults(func=cmd_casestudy)

    p = sub.add_parser("axioms", help="check prefix, suffix and concatenation closure on simulated runs")
    p.add_argument("file")
    p.add_argument("--battery", help="extra input schedules to widen the family")
    run_flags(p)
    p.set_defaults(func=cmd_axioms)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)  # exits with 2 on usage errors
    try:
        return args.func(args)
    except UsageError as exc:
        _err(f"error: {exc}")
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
