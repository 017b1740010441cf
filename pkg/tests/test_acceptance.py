"""Acceptance criteria, one test per criterion.

The full benchmark (including the 7-disk Hanoi fixture) runs once per module
and its results are shared.  Each test prints a one-line verdict; the
terminal summary lists them all.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time
from collections import Counter

import pytest
from hypothesis import given, settings

from bcplus.bench import fixture, run_bench, sudoku_givens, sudoku_grid, suite
from bcplus.config import Config
from bcplus.encode import encode, enumerate_models
from bcplus.normalize import GAnd, GAtom, GConst, GNot, GOr, expand_shorthand, ground, validate_program
from bcplus.oracle import Oracle, validate_plan
from bcplus.parser import load_program
from bcplus.pipeline import Pipeline, ScriptedClient
from bcplus.query import SAT, UNSAT, full_valuation, run_query

from conftest import FIXTURES, MOCK_MCP, fixture_text, load
from test_normalize import ALWAYS, CAUSES, IMPOSSIBLE, NONEXECUTABLE, PAIRS, TEACH, rendered
from test_properties import SIG, basic_laws


def report(n: int, ok: bool, detail: str, verdict: str = "") -> None:
    print(f"criterion {n}: {verdict or ('PASS' if ok else 'FAIL')}  {detail}")


@pytest.fixture(scope="module")
def bench():
    rep = run_bench(suite("all"))
    print(rep.table())
    return {r.name: r for r in rep.results}


# ---------------------------------------------------------------- 1


def test_criterion_01_mcp_end_to_end():
    p = load("mcp/mcp.bc")
    t = time.perf_counter()
    r = run_query(p)
    elapsed = time.perf_counter() - t
    g = ground(p)
    states, actions = full_valuation(g, r)
    ok = r.verdict == SAT and r.horizon == 11 and validate_plan(g, states, actions) is True and elapsed < 30
    report(1, ok, f"horizon {r.horizon}, plan valid, {elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------- 2

LENGTHS = {
    "river-basic": 7, "river-var1": 6,
    "hanoi-3-basic": 7, "hanoi-5-basic": 31, "hanoi-7-basic": 127,
    "hanoi-3-var1": 6, "hanoi-5-var1": 27, "hanoi-7-var1": 11,
    "mcp-01-rowboat": 11, "mcp-02-hats": 11, "mcp-05-oars": 13, "mcp-06-two-rowers": 13,
    "mcp-08-big-cannibal": 15, "mcp-09-big-and-small": 11, "mcp-10-walks-on-water": 7,
    "mcp-11-conversion": 9, "mcp-13-bridge": 4, "mcp-14-leaky-boat": 11, "mcp-16-island": 19,
    "mcp-17-hungry": 13, "mcp-19-two-sites": 22,
}  # fmt: skip


def test_criterion_02_plan_length_table(bench):
    wrong = {n: bench[n].horizon for n, k in LENGTHS.items() if bench[n].verdict != SAT or bench[n].horizon != k}
    slow = bench["hanoi-7-basic"].solver_time
    ok = not wrong and slow < 600
    report(2, ok, f"{len(LENGTHS) - len(wrong)}/{len(LENGTHS)} exact, 7-disk Hanoi {slow:.0f}s")
    assert not wrong, wrong
    assert slow < 600


# ---------------------------------------------------------------- 3

UNSOLVABLE = ["mcp-03-four-each", "mcp-04-boat-of-three", "mcp-07-missionaries-cannot-row", "sudoku-var1", "sudoku-var2"]


def test_criterion_03_unsolvability(bench):
    bad = [n for n in UNSOLVABLE if not (bench[n].verdict == UNSAT and bench[n].horizon == 30)]
    oracle = {n: bench[n].oracle for n in UNSOLVABLE}
    # the oracle cross-check applies where the state space is enumerable
    crossed = [n for n, o in oracle.items() if o not in ("skipped", "over cap")]
    bad += [n for n in crossed if oracle[n] != "none<=30"]
    ok = not bad and len(crossed) >= 3
    report(3, ok, f"unsat to 30: {len(UNSOLVABLE)}, oracle none<=30: {len(crossed)} (Sudoku has no oracle)")
    assert ok, (bad, oracle)


# ---------------------------------------------------------------- 4


def independent_grid_ok(grid, givens) -> bool:
    units = [[(r, c) for c in range(9)] for r in range(9)]
    units += [[(r, c) for r in range(9)] for c in range(9)]
    units += [[(br + i, bc + j) for i in range(3) for j in range(3)] for br in (0, 3, 6) for bc in (0, 3, 6)]
    if any(sorted(grid[r][c] for r, c in u) != list(range(1, 10)) for u in units):
        return False
    return all(grid[r - 1][c - 1] == v for (r, c), v in givens.items())


def test_criterion_04_sudoku_state_search(bench):
    ok = True
    for n in (1, 2, 3):
        res = bench[f"sudoku-{n}"]
        givens = sudoku_givens(fixture_text(f"sudoku/sudoku{n}.bc"))
        full = res.plan is not None and all(v for row in sudoku_grid(res.plan.steps[0]) for v in row)
        ok &= res.verdict == SAT and res.horizon == 0 and full and independent_grid_ok(sudoku_grid(res.plan.steps[0]), givens)
    report(4, ok, "sudoku 1-3 solved at horizon 0 with valid full grids")
    assert ok


# ---------------------------------------------------------------- 5

EQUIV = [("mcp/mcp.bc", None), ("river/river.bc", None), ("hanoi/hanoi3.bc", 3)]


def test_criterion_05_oracle_equivalence(bench):
    discrepancies = 0
    for rel, mc in EQUIV:
        g = ground(load(rel).without_queries())
        o = Oracle(g, max_concurrent=mc)
        models, complete, _ = enumerate_models(encode(g, 1), 100_000)
        solver = Counter(
            (
                tuple(m.values[(0, c.index)] for c in o.fluents),
                tuple(m.values[(0, c.index)] for c in o.actions),
                tuple(m.values[(1, c.index)] for c in o.fluents),
            )
            for m in models
        )
        oracle = {(s, a, n) for s in o.enumerate_states() for a, n in o.enumerate_transitions(s)}
        discrepancies += (not complete) + sum(k > 1 for k in solver.values()) + len(set(solver) ^ oracle)
    for name in ("mcp-basic", "river-basic", "hanoi-3-basic"):
        discrepancies += bench[name].oracle != str(bench[name].horizon)
    report(5, discrepancies == 0, f"{discrepancies} discrepancies")
    assert discrepancies == 0


# ---------------------------------------------------------------- 6


@settings(max_examples=100, deadline=None)
@given(basic_laws)
def _idempotent(law):
    once = expand_shorthand(law, SIG)
    assert [m for n in once for m in expand_shorthand(n, SIG)] == once


def test_criterion_06_shorthand_golden():
    groups = {"causes": CAUSES, "impossible": IMPOSSIBLE, "nonexecutable": NONEXECUTABLE, "always": ALWAYS}
    wrong = [law for cases in groups.values() for law, want in cases if rendered(law) != [want]]
    counts = {k: len(v) for k, v in groups.items()}
    _idempotent()
    ok = not wrong and min(counts.values()) >= 3
    report(6, ok, f"golden {counts}, idempotence on 100 random laws")
    assert ok, wrong


# ---------------------------------------------------------------- 7


def test_criterion_07_validator_fidelity():
    results = {}
    for name, (bad, good) in PAIRS.items():
        results[name] = (len(validate_program(load_program(TEACH + bad))), len(validate_program(load_program(TEACH + good))))
    ok = len(results) == 5 and all(b >= 1 and g == 0 for b, g in results.values())
    report(7, ok, ", ".join(f"{k}: {b}/{g}" for k, (b, g) in sorted(results.items())))
    assert ok, results


# ---------------------------------------------------------------- 8


def _replay(out):
    cfg = Config()
    cfg.pipeline.transcript_dir = str(out)
    client = ScriptedClient.from_dir(MOCK_MCP)
    problem = (MOCK_MCP / "problem.txt").read_text(encoding="utf-8")
    pipe = Pipeline(client, cfg)
    return pipe, pipe.run(problem)


def test_criterion_08_pipeline_replay(tmp_path):
    pipe, state = _replay(tmp_path / "a")
    _, _ = _replay(tmp_path / "b")
    first = next(e for e in state.transcript if e.stage == "satisfiability-check")
    results = pipe.sample_results(state)
    expected = Counter(e.expected for e in state.sample_queries)
    files = sorted(p.name for p in (tmp_path / "a").iterdir() if p.name != "timings.jsonl")
    identical = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files)
    identical &= files == sorted(p.name for p in (tmp_path / "b").iterdir() if p.name != "timings.jsonl")
    ok = (
        state.status == "ok"
        and state.sat_revisions == 1
        and "must be an additive constant" in first.feedback
        and len(results) == 5
        and all(m is True for _, m in results)
        and state.feedback_iterations == 1
        and state.transcript[-1].status == "unchanged"
        and state.result.verdict == SAT
        and state.result.horizon == 11
        and identical
    )
    # the five sample queries split 2 satisfiable / 3 unsatisfiable when solved
    split = f"{expected['satisfiable']} sat / {expected['unsatisfiable']} unsat"
    report(8, ok, f"1 revision, 5 samples matched ({split}), 1 feedback pass, 11 steps, transcript identical")
    assert ok
    assert expected == Counter({"satisfiable": 2, "unsatisfiable": 3})


# ---------------------------------------------------------------- 9


def _g_eval(f, val) -> bool:
    if isinstance(f, GConst):
        return f.value
    if isinstance(f, GAtom):
        assert f.slot == 0
        return val[f.inst] == f.value
    if isinstance(f, GNot):
        return not _g_eval(f.operand, val)
    if isinstance(f, GAnd):
        return all(_g_eval(i, val) for i in f.items)
    if isinstance(f, GOr):
        return any(_g_eval(i, val) for i in f.items)
    raise TypeError(f)


def model_problems(fx, res) -> list[str]:
    g = ground(load_program(fx.file.read_text(encoding="utf-8")))
    o = Oracle(g, max_concurrent=None)
    states, actions = full_valuation(g, res.plan)
    out = []
    for t, st in enumerate(states):
        bad = o.static_violation(o.state_of(st))
        if bad:
            out.append(f"step {t} violates {bad}")
    for t, acts in enumerate(actions):
        bad = o.check_transition(o.state_of(states[t]), o.actions_of(acts), o.state_of(states[t + 1]))
        if bad:
            out.append(f"transition {t}: {bad}")
        # additive update recomputed from the ground contributions
        val = {**states[t], **acts}
        sums: dict = {}
        for c in g.contributions:
            if _g_eval(c.fire, val):
                sums[c.target] = sums.get(c.target, 0) + c.amount
        for c in g.constants:
            if c.kind == "additiveFluent" and states[t + 1][c.index] - states[t][c.index] != sums.get(c.index, 0):
                out.append(f"transition {t}: {c} not conserved")
            if c.kind == "additiveAction" and acts[c.index] != sums.get(c.index, 0):
                out.append(f"transition {t}: {c} is not its contributions' sum")
    if fx.name.startswith("mcp"):
        people = [c.index for c in g.constants if c.kind == "additiveFluent" and c.name == "numOnBank"]
        totals = {sum(st[i] for i in people) for st in states}
        if len(totals) != 1:
            out.append(f"population not conserved: {sorted(totals)}")
    return out


def _first_model(rel):
    r = run_query(load(rel))
    return r.verdict, r.steps, r.transitions


def test_criterion_09_model_properties(bench):
    checked, problems = 0, {}
    for name, res in bench.items():
        if res.verdict != SAT:
            continue
        checked += 1
        found = model_problems(fixture(name), res)
        if found:
            problems[name] = found[:3]
    determinism = []
    for rel in ("mcp/mcp.bc", "river/river.bc", "hanoi/hanoi3.bc", "sudoku/sudoku1.bc", "elaborations/e19_two_sites.bc"):
        runs = [_first_model(rel) for _ in range(3)]
        determinism.append(runs[0] == runs[1] == runs[2])
    seeds = []
    for seed in ("0", "1", "12345"):
        env = {**os.environ, "PYTHONHASHSEED": seed}
        cmd = [sys.executable, "-m", "bcplus.cli", "solve", str(FIXTURES / "mcp" / "mcp.bc"), "--json"]
        seeds.append(subprocess.run(cmd, env=env, capture_output=True, text=True, check=True).stdout)
    determinism.append(len(set(_strip_times(seeds))) == 1)
    ok = not problems and checked >= 20 and all(determinism)
    report(9, ok, f"{checked} models checked, {len(problems)} with problems, determinism {sum(determinism)}/{len(determinism)}")
    assert not problems, problems
    assert all(determinism)


def _strip_times(outputs):
    out = []
    for s in outputs:
        rec = json.loads(s)
        rec.pop("stats", None)
        out.append(json.dumps(rec, sort_keys=True))
    return out


# ---------------------------------------------------------------- 10


def test_criterion_10_live_model_comparison():
    report(10, True, "declared not reproducible: live-model comparison rows and revision statistics", "DECLARED")
    pytest.skip("declared not reproducible at desk scale; mechanisms covered by criteria 6 to 9")
