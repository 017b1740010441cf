"""Command-line front end.

Exit status: 0 on success (or a verdict matching ``--expect``), 1 on an
unexpected verdict, a failed check or an invalid plan, 2 on usage, file
and syntax errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import Config, load_config
from .encode import build_templates, encode, export_cnf
from .errors import BCError, StateSpaceTooLarge
from .normalize import errors_only, ground, ground_query, validate_program
from .oracle import NoPlanWithin, Oracle, PlanViolation, split_query, validate_plan
from .parser import SourceProgram, parse_program
from .query import ERROR, SAT, UNSAT, PlanResult, check_source, format_output, full_valuation, parse_output, solve_ground

OK, FAIL, USAGE = 0, 1, 2


class _Usage(Exception):
    """A bad input file: reported and mapped to exit status 2."""


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise _Usage(f"cannot read {path}: {e.strerror or e}") from e


def _load(path: str):
    """Parse a program file, printing diagnostics; raise _Usage on syntax errors."""
    prog, diags = parse_program(SourceProgram(_read(path), path))
    for d in diags:
        print(d, file=sys.stderr)
    if prog is None:
        raise _Usage(f"{path}: syntax errors")
    return prog


def _validated(path: str):
    """Parse and validate; None (after printing errors) when invalid."""
    prog = _load(path)
    errs = errors_only(validate_program(prog, path))
    for d in errs:
        print(d)
    return None if errs else prog


def _expect_status(verdict: str, expect: Optional[str]) -> int:
    if expect is None:
        return OK if verdict == SAT else FAIL
    want = SAT if expect == "sat" else UNSAT
    return OK if verdict == want else FAIL


# ---------------------------------------------------------------- commands


def cmd_parse(args, cfg: Config) -> int:
    prog = _load(args.file)
    if prog.is_empty():
        print(f"{args.file}: empty program (no declarations, laws or queries)")
        return OK
    diags = validate_program(prog, args.file)
    for d in diags:
        print(d)
    print(
        f"{args.file}: {len(prog.sorts)} sorts, {len(prog.objects)} object groups, "
        f"{len(prog.constants)} constants, {len(prog.laws)} laws, {len(prog.queries)} queries"
    )
    return FAIL if errors_only(diags) else OK


def cmd_check_sat(args, cfg: Config) -> int:
    text = _read(args.file)
    r = check_source(text, args.file, cfg.query)
    if r.verdict == ERROR and not parse_program(SourceProgram(text, args.file))[0]:
        for d in r.diagnostics:
            print(d, file=sys.stderr)
        return USAGE
    print(format_output(r, stats=args.stats), end="")
    return OK if r.verdict == SAT else FAIL


def cmd_solve(args, cfg: Config) -> int:
    prog = _validated(args.file)
    if prog is None:
        return FAIL
    q = prog.query(args.query)
    if q is None:
        what = f"no query labelled {args.query!r}" if args.query else "the program has no query"
        raise _Usage(f"{args.file}: {what}")
    if args.max_horizon is not None:
        cfg.query.max_horizon = args.max_horizon
    g = ground(prog, check=False)
    tp = build_templates(g)
    r = solve_ground(g, q, cfg.query, tp)
    if args.export_cnf:
        enc = encode(g, r.horizon, ground_query(g, q), tp)
        Path(args.export_cnf).write_text(export_cnf(enc), encoding="utf-8")
    if args.json:
        print(r.to_json())
    else:
        print(format_output(r, stats=args.stats), end="")
        if r.note:
            print(r.note)
    return _expect_status(r.verdict, args.expect)


def cmd_oracle(args, cfg: Config) -> int:
    prog = _validated(args.file)
    if prog is None:
        return FAIL
    q = prog.query(args.goal)
    if q is None:
        what = f"no query labelled {args.goal!r}" if args.goal else "the program has no query"
        raise _Usage(f"{args.file}: {what}")
    g = ground(prog, check=False)
    oracle = Oracle(g, max_concurrent=args.max_concurrent, state_cap=cfg.oracle.state_cap)
    init, goal = split_query(ground_query(g, q))
    bound = args.bound if args.bound is not None else cfg.oracle.bound
    try:
        length = oracle.bfs_plan(init, goal, bound)
    except StateSpaceTooLarge as e:
        print(f"state space over the cap: {e}")
        return FAIL
    if isinstance(length, NoPlanWithin):
        print(f"no plan within {length.bound} steps")
        return _expect_status(UNSAT, args.expect)
    print(f"shortest plan: {length} steps")
    return _expect_status(SAT, args.expect)


def _read_plan(path: str) -> PlanResult:
    text = _read(path)
    if text.lstrip().startswith("{"):
        try:
            return PlanResult.from_record(json.loads(text))
        except (ValueError, KeyError) as e:
            raise _Usage(f"{path}: not a plan record: {e}") from e
    return parse_output(text)


def cmd_validate(args, cfg: Config) -> int:
    prog = _validated(args.file)
    if prog is None:
        return FAIL
    plan = _read_plan(args.planfile)
    if plan.verdict != SAT or not plan.steps:
        print(f"{args.planfile}: holds no plan")
        return FAIL
    g = ground(prog, check=False)
    try:
        states, actions = full_valuation(g, plan)
        verdict = validate_plan(g, states, actions, Oracle(g, max_concurrent=None))
    except (KeyError, IndexError, ValueError) as e:
        print(f"plan does not match the program: {e}")
        return FAIL
    if isinstance(verdict, PlanViolation):
        print(f"invalid plan: step {verdict.step}: {verdict.reason}")
        return FAIL
    print(f"valid plan of {len(actions)} steps")
    return OK


def cmd_pipeline(args, cfg: Config) -> int:
    from .pipeline import LiveClient, MockScriptMissing, Pipeline, ScriptedClient

    problem = _read(args.problem)
    if args.transcript:
        cfg.pipeline.transcript_dir = args.transcript
    if args.live:
        client = LiveClient(cfg.client)
    else:
        try:
            client = ScriptedClient.from_dir(args.mock)
        except MockScriptMissing as e:
            raise _Usage(str(e)) from e
    pipe = Pipeline(client, cfg)
    try:
        state = pipe.run(problem)
    except KeyboardInterrupt:
        client.cancel()
        print("cancelled; the partial transcript is kept", file=sys.stderr)
        return FAIL
    for w in state.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(json.dumps(state.summary(), sort_keys=True))
    if state.result is not None:
        print(format_output(state.result), end="")
    return OK if state.status == "ok" and state.result is not None and state.result.verdict == SAT else FAIL


def cmd_bench(args, cfg: Config) -> int:
    from .bench import run_bench, suite

    if args.workers is not None:
        cfg.bench.workers = args.workers
    if args.no_oracle:
        cfg.bench.run_oracle = False
    try:
        fixtures = suite(args.suite)
    except ValueError as e:
        raise _Usage(str(e)) from e
    if args.only:
        fixtures = [f for f in fixtures if f.name in set(args.only)]
        if not fixtures:
            raise _Usage("no fixture of the suite matches --only")
    report = run_bench(fixtures, cfg)
    print(report.table())
    if args.report:
        Path(args.report).write_text(report.records(), encoding="utf-8")
    return OK if report.passed == len(report.results) else FAIL


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bcplus", description="BC+ action language toolkit")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--config", metavar="INI", help="settings file with one section per module")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("parse", help="parse and validate a program, printing diagnostics")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("check-sat", help="look for one legal state, with all queries ignored")
    p.add_argument("file")
    p.add_argument("--stats", action="store_true", help="print solver call counts and time")
    p.set_defaults(func=cmd_check_sat)

    p = sub.add_parser("solve", help="answer a query by horizon search")
    p.add_argument("file")
    p.add_argument("--query", metavar="LABEL", help="query label (default: the last query)")
    p.add_argument("--max-horizon", type=int, metavar="N")
    p.add_argument("--export-cnf", metavar="PATH", help="write the final horizon's clauses as DIMACS")
    p.add_argument("--expect", choices=("sat", "unsat"), help="verdict that counts as success")
    p.add_argument("--json", action="store_true", help="print the result record instead of the plan text")
    p.add_argument("--stats", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="shortest plan length by explicit breadth-first search")
    p.add_argument("file")
    p.add_argument("--goal", metavar="LABEL", help="query giving the initial state and goal (default: the last query)")
    p.add_argument("--bound", type=int, metavar="N")
    p.add_argument("--max-concurrent", type=int, default=1, metavar="K", help="boolean actions tried together")
    p.add_argument("--expect", choices=("sat", "unsat"))
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("validate", help="replay a plan against the program's laws")
    p.add_argument("file")
    p.add_argument("planfile", help="plan text as printed by solve, or its --json record")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("pipeline", help="synthesize a program from a problem statement")
    p.add_argument("problem")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--mock", metavar="DIR", help="replay <stage>-<attempt>.txt responses from DIR")
    src.add_argument("--live", action="store_true", help="call the configured completion endpoint")
    p.add_argument("--transcript", metavar="DIR")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("bench", help="run benchmark fixtures against their expected results")
    p.add_argument("--suite", default="quick", help="all, mcp, puzzles, quick or slow (default: quick)")
    p.add_argument("--only", nargs="+", metavar="NAME", help="restrict to these fixtures")
    p.add_argument("--report", metavar="PATH", help="write line-delimited JSON records here")
    p.add_argument("--workers", type=int)
    p.add_argument("--no-oracle", action="store_true")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as e:
        print(f"bcplus: bad config: {e}", file=sys.stderr)
        return USAGE
    try:
        return args.func(args, cfg)
    except _Usage as e:
        print(f"bcplus: {e}", file=sys.stderr)
        return USAGE
    except BCError as e:
        print(f"bcplus: {type(e).__name__}: {e}", file=sys.stderr)
        return FAIL


if __name__ == "__main__":
    sys.exit(main())
