"""Benchmark fixtures with their expected plan lengths, and the bench runner."""

from __future__ import annotations

import json
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence, Union

from .config import Config
from .errors import BCError, StateSpaceTooLarge
from .normalize import ground, ground_query
from .oracle import Oracle, PlanViolation, split_query, validate_plan
from .parser import load_program
from .query import SAT, PlanResult, full_valuation, solve_ground

FIXTURES = Path(__file__).parent / "fixtures"


@dataclass(frozen=True)
class Unsolvable:
    bound: int = 30

    def __str__(self) -> str:
        return f"unsolvable(<={self.bound})"


@dataclass(frozen=True)
class Fixture:
    name: str
    path: str  # relative to the fixtures directory
    expected: Union[int, Unsolvable]
    query_label: Optional[str] = None
    max_concurrent: Optional[int] = 1  # simultaneous boolean actions the oracle tries
    oracle: bool = True  # False when the state space is known to be out of reach
    advisory: bool = False  # the oracle length is informative only
    grid: bool = False  # a Sudoku grid to check independently
    suites: tuple = ()

    @property
    def file(self) -> Path:
        return FIXTURES / self.path


def _mcp(name, path, expected, **kw) -> Fixture:
    return Fixture(name, path, expected, suites=("mcp", "all"), **kw)


def _puzzle(name, path, expected, **kw) -> Fixture:
    return Fixture(name, path, expected, suites=kw.pop("suites", ("puzzles", "all")), **kw)


SLOW = ("puzzles", "all", "slow")

ALL_FIXTURES: tuple[Fixture, ...] = (
    _mcp("mcp-basic", "mcp/mcp.bc", 11),
    _mcp("mcp-01-rowboat", "elaborations/e01_rowboat.bc", 11),
    _mcp("mcp-02-hats", "elaborations/e02_hats.bc", 11),
    _mcp("mcp-03-four-each", "elaborations/e03_four_each.bc", Unsolvable()),
    _mcp("mcp-04-boat-of-three", "elaborations/e04_boat_of_three.bc", Unsolvable()),
    _mcp("mcp-05-oars", "elaborations/e05_oars.bc", 13),
    _mcp("mcp-06-two-rowers", "elaborations/e06_two_rowers.bc", 13),
    _mcp("mcp-07-missionaries-cannot-row", "elaborations/e07_missionaries_cannot_row.bc", Unsolvable()),
    _mcp("mcp-08-big-cannibal", "elaborations/e08_big_cannibal.bc", 15),
    _mcp("mcp-09-big-and-small", "elaborations/e09_big_and_small.bc", 11),
    _mcp("mcp-10-walks-on-water", "elaborations/e10_walks_on_water.bc", 7, max_concurrent=2),
    _mcp("mcp-11-conversion", "elaborations/e11_conversion.bc", 9, max_concurrent=2),
    _mcp("mcp-13-bridge", "elaborations/e13_bridge.bc", 4),
    _mcp("mcp-14-leaky-boat", "elaborations/e14_leaky_boat.bc", 11, max_concurrent=2),
    _mcp("mcp-16-island", "elaborations/e16_island.bc", 19),
    _mcp("mcp-17-hungry", "elaborations/e17_hungry.bc", 13, advisory=True),
    _mcp("mcp-19-two-sites", "elaborations/e19_two_sites.bc", 22),
    _puzzle("river-basic", "river/river.bc", 7),
    _puzzle("river-var1", "river/river_var1.bc", 6),
    _puzzle("hanoi-3-basic", "hanoi/hanoi3.bc", 7),
    _puzzle("hanoi-3-var1", "hanoi/hanoi3_var1.bc", 6),
    _puzzle("hanoi-5-basic", "hanoi/hanoi5.bc", 31),
    _puzzle("hanoi-5-var1", "hanoi/hanoi5_var1.bc", 27),
    _puzzle("hanoi-7-basic", "hanoi/hanoi7.bc", 127, suites=SLOW),
    _puzzle("hanoi-7-var1", "hanoi/hanoi7_var1.bc", 11),
    _puzzle("sudoku-1", "sudoku/sudoku1.bc", 0, oracle=False, grid=True),
    _puzzle("sudoku-2", "sudoku/sudoku2.bc", 0, oracle=False, grid=True),
    _puzzle("sudoku-3", "sudoku/sudoku3.bc", 0, oracle=False, grid=True),
    _puzzle("sudoku-var1", "sudoku/sudoku_var1.bc", Unsolvable(), oracle=False, grid=True),
    _puzzle("sudoku-var2", "sudoku/sudoku_var2.bc", Unsolvable(), oracle=False, grid=True),
)

SUITES = ("all", "mcp", "puzzles", "quick", "slow")


def suite(name: str) -> list[Fixture]:
    """Fixtures of a suite; "quick" is everything except the "slow" ones."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    if name == "quick":
        return [f for f in ALL_FIXTURES if "slow" not in f.suites]
    return [f for f in ALL_FIXTURES if name in f.suites]


def fixture(name: str) -> Fixture:
    for f in ALL_FIXTURES:
        if f.name == name:
            return f
    raise KeyError(name)


# --------------------------------------------------------- sudoku checking


def sudoku_grid(step: dict) -> list[list[int]]:
    """The 9x9 grid held by ``val(R, C)`` atoms of one step."""
    grid = [[0] * 9 for _ in range(9)]
    for atom, value in step.items():
        m = re.fullmatch(r"val\((\d), (\d)\)", atom)
        if m:
            grid[int(m.group(1)) - 1][int(m.group(2)) - 1] = int(value)
    return grid


def sudoku_valid(grid: Sequence[Sequence[int]]) -> bool:
    """Every row, column and 3x3 box holds 1..9 exactly once."""
    full = set(range(1, 10))
    rows = [set(r) for r in grid]
    cols = [{grid[r][c] for r in range(9)} for c in range(9)]
    boxes = [{grid[r][c] for r in range(br, br + 3) for c in range(bc, bc + 3)} for br in (0, 3, 6) for bc in (0, 3, 6)]
    return all(s == full for s in rows + cols + boxes)


def sudoku_givens(text: str) -> dict:
    return {(int(r), int(c)): int(v) for r, c, v in re.findall(r"val\((\d), (\d)\) = (\d)", text)}


# ------------------------------------------------------------------ running


@dataclass
class FixtureResult:
    name: str
    expected: str
    verdict: str = ""
    horizon: Optional[int] = None
    oracle: str = "skipped"
    valid: Optional[bool] = None
    grid_ok: Optional[bool] = None
    ok: bool = False
    solver_time: float = 0.0
    oracle_time: float = 0.0
    error: str = ""
    detail: str = ""
    plan: Optional[PlanResult] = field(default=None, repr=False, compare=False)  # kept out of records

    def record(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "plan"}


@dataclass
class BenchReport:
    results: list = field(default_factory=list)

    @property
    def passed(self) -> int:
        return sum(r.ok for r in self.results)

    def table(self) -> str:
        head = f"{'fixture':34} {'expected':16} {'solver':18} {'oracle':18} {'plan':7} {'ok':4} {'time':>8}"
        lines = [head, "-" * len(head)]
        for r in self.results:
            solver = f"{r.verdict[:5]} h={r.horizon}" if r.verdict else "error"
            plan = {True: "valid", False: "INVALID", None: "-"}[r.valid]
            lines.append(
                f"{r.name:34} {r.expected:16} {solver:18} {r.oracle:18} {plan:7} {'yes' if r.ok else 'NO':4} {r.solver_time:8.2f}"
            )
        lines.append(f"{self.passed}/{len(self.results)} fixtures as expected")
        return "\n".join(lines)

    def records(self, timings: bool = True) -> str:
        out = []
        for r in self.results:
            rec = r.record()
            if not timings:
                rec.pop("solver_time")
                rec.pop("oracle_time")
            out.append(json.dumps(rec, sort_keys=True))
        return "\n".join(out) + ("\n" if out else "")


def run_fixture(fx: Fixture, cfg: Optional[Config] = None) -> FixtureResult:
    cfg = cfg or Config()
    res = FixtureResult(fx.name, str(fx.expected))
    try:
        text = fx.file.read_text(encoding="utf-8")
        p = load_program(text, str(fx.file))
        q = p.query(fx.query_label)
        g = ground(p)
        qcfg = cfg.query
        ceiling = fx.expected.bound if isinstance(fx.expected, Unsolvable) else max(qcfg.max_horizon, fx.expected)
        qcfg = type(qcfg)(max_horizon=ceiling, solver=qcfg.solver, count_budget=qcfg.count_budget)
        t = time.perf_counter()
        r = solve_ground(g, q, qcfg)
        res.solver_time = time.perf_counter() - t
        res.verdict, res.horizon, res.plan = r.verdict, r.horizon, r
        oracle = Oracle(g, max_concurrent=fx.max_concurrent, state_cap=cfg.oracle.state_cap)
        if r.verdict == SAT:
            states, actions = full_valuation(g, r)
            verdict = validate_plan(g, states, actions, oracle)
            res.valid = verdict is True
            if isinstance(verdict, PlanViolation):
                res.detail = f"plan violation at step {verdict.step}: {verdict.reason}"
            if fx.grid:
                grid = sudoku_grid(r.steps[0])
                givens = sudoku_givens(text)
                res.grid_ok = sudoku_valid(grid) and all(grid[rr - 1][cc - 1] == v for (rr, cc), v in givens.items())
        if fx.oracle and cfg.bench.run_oracle:
            bound = fx.expected.bound if isinstance(fx.expected, Unsolvable) else max(fx.expected, cfg.oracle.bound)
            t = time.perf_counter()
            try:
                init, goal = split_query(ground_query(g, q))
                length = oracle.bfs_plan(init, goal, bound)
                res.oracle = str(length) if isinstance(length, int) else f"none<={length.bound}"
            except StateSpaceTooLarge:
                res.oracle = "over cap"
            res.oracle_time = time.perf_counter() - t
        res.ok = _judge(fx, res)
    except BCError as e:
        res.error = f"{type(e).__name__}: {e}"
    return res


def _judge(fx: Fixture, res: FixtureResult) -> bool:
    if isinstance(fx.expected, Unsolvable):
        ok = res.verdict == "UNSATISFIABLE" and res.horizon == fx.expected.bound
        if res.oracle not in ("skipped", "over cap") and not fx.advisory:
            ok = ok and res.oracle.startswith("none")
        return ok
    ok = res.verdict == SAT and res.horizon == fx.expected and res.valid is True
    if res.oracle not in ("skipped", "over cap") and not fx.advisory:
        ok = ok and res.oracle == str(fx.expected)
    if fx.grid:
        ok = ok and res.grid_ok is True
    return ok


def _run_one(args) -> FixtureResult:
    fx, cfg = args
    return run_fixture(fx, cfg)


def run_bench(fixtures: Sequence[Fixture], cfg: Optional[Config] = None) -> BenchReport:
    """Run every fixture; failures are recorded per fixture, never raised."""
    cfg = cfg or Config()
    if cfg.bench.workers > 1 and len(fixtures) > 1:
        with ProcessPoolExecutor(max_workers=cfg.bench.workers) as pool:
            results = list(pool.map(_run_one, [(f, cfg) for f in fixtures]))
    else:
        results = [run_fixture(f, cfg) for f in fixtures]
    return BenchReport(results)
