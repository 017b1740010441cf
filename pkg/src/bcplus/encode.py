"""Time-indexed propositional encoding of a ground program.

Every step's variables form one block; the clause set for a horizon k is
built from two templates, one for a state and one for a transition window
(state t, transition t, state t+1), shifted along the variable axis.  The
layout is ``[S0 T0 S1 T1 ... Sk]`` so a window literal ``w`` becomes
``w + t*(S+T)`` at transition t.

Non-boolean constants use a direct encoding (one variable per value with
at-least-one and pairwise at-most-one clauses); boolean constants use a
single variable.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

from .ast import FALSE, MAXSTEP, TRUE, Value
from .errors import GroundingBudgetExceeded, HorizonNegative, SolverBudgetExceeded
from .normalize import (
    NONE,
    GAnd,
    GAtom,
    GConst,
    GFormula,
    GNot,
    GroundProgram,
    GroundQuery,
)

STATE, TRANS, NEXT = 0, 1, 2
DEFAULT_CONFLICT_BUDGET = 10_000_000
DEFAULT_TIME_BUDGET = 60.0
SUM_RANGE_CAP = 4096

SymLit = tuple  # (sign, block, local)


# ---------------------------------------------------------------- templates


class _Block:
    """Variable allocator for one block of a template."""

    def __init__(self) -> None:
        self.size = 0

    def new(self) -> int:
        self.size += 1
        return self.size


@dataclass
class Templates:
    """Clause templates and variable tables shared by every horizon."""

    ground: GroundProgram
    state_size: int
    trans_size: int
    state_clauses: list  # window ints over the state block
    trans_clauses: list  # window ints over state t, trans t, state t+1
    value_var: dict  # inst -> {value: local}; boolean: {true: +l, false: -l}
    state_unary: dict = field(default_factory=dict)

    @property
    def stride(self) -> int:
        return self.state_size + self.trans_size


class _Builder:
    def __init__(self, g: GroundProgram):
        self.g = g
        self.blocks = {STATE: _Block(), TRANS: _Block()}
        self.value_var: dict[int, dict] = {}
        self.state_clauses: list[list[SymLit]] = []
        self.trans_clauses: list[list[SymLit]] = []
        self._cache: dict = {}
        self._static_body: dict[int, Union[SymLit, bool]] = {}

    # -- variables

    def alloc_constants(self) -> None:
        for c in self.g.constants:
            blk = self.blocks[TRANS if c.is_action else STATE]
            if c.is_boolean:
                v = blk.new()
                self.value_var[c.index] = {TRUE: v, FALSE: -v}
            else:
                self.value_var[c.index] = {val: blk.new() for val in c.domain}

    def atom(self, a: GAtom, ctx: str) -> Union[SymLit, bool]:
        c = self.g.constants[a.inst]
        table = self.value_var[c.index]
        if a.value not in table:
            return False
        local = table[a.value]
        sign = 1 if local > 0 else -1
        if c.is_action:
            if ctx == "state" or a.slot == 1:
                return False  # actions are not part of a state
            block = TRANS
        elif ctx == "state":
            block = STATE
        else:
            block = NEXT if a.slot == 1 else STATE
        return (sign, block, abs(local))

    # -- formulas

    def lit(self, f: GFormula, ctx: str) -> Union[SymLit, bool]:
        """A literal equivalent to ``f`` in the given context (Tseitin)."""
        if isinstance(f, GConst):
            return f.value
        if isinstance(f, GAtom):
            return self.atom(f, ctx)
        if isinstance(f, GNot):
            x = self.lit(f.operand, ctx)
            return (not x) if isinstance(x, bool) else _neg(x)
        key = (ctx, f)
        if key in self._cache:
            return self._cache[key]
        is_and = isinstance(f, GAnd)
        parts = []
        for item in f.items:
            x = self.lit(item, ctx)
            if isinstance(x, bool):
                if x != is_and:  # false in a conjunction / true in a disjunction
                    self._cache[key] = x
                    return x
                continue
            parts.append(x)
        if not parts:
            out: Union[SymLit, bool] = is_and
        elif len(parts) == 1:
            out = parts[0]
        else:
            block = STATE if ctx == "state" else TRANS
            aux = (1, block, self.blocks[block].new())
            sink = self.state_clauses if ctx == "state" else self.trans_clauses
            if is_and:
                for p in parts:
                    sink.append([_neg(aux), p])
                sink.append([aux] + [_neg(p) for p in parts])
            else:
                for p in parts:
                    sink.append([aux, _neg(p)])
                sink.append([_neg(aux)] + parts)
            out = aux
        self._cache[key] = out
        return out

    def body_clause(self, body: GFormula, ctx: str) -> Optional[list]:
        """Negated body as a clause prefix, or None when the body is false."""
        if isinstance(body, GAnd):
            out = []
            for item in body.items:
                x = self.lit(item, ctx)
                if x is False:
                    return None
                if x is True:
                    continue
                out.append(_neg(x))
            return out
        x = self.lit(body, ctx)
        if x is False:
            return None
        return [] if x is True else [_neg(x)]

    def add(self, sink: list, clause: list) -> None:
        out = []
        for x in clause:
            if x is True:
                return
            if x is False:
                continue
            out.append(x)
        sink.append(out)

    # -- templates

    def build(self) -> Templates:
        g = self.g
        self.alloc_constants()
        # exactly one value per non-boolean constant
        for c in g.constants:
            if c.is_boolean:
                continue
            sink = self.trans_clauses if c.is_action else self.state_clauses
            block = TRANS if c.is_action else STATE
            locs = [(1, block, v) for v in self.value_var[c.index].values()]
            sink.append(list(locs))
            for i in range(len(locs)):
                for j in range(i + 1, len(locs)):
                    sink.append([_neg(locs[i]), _neg(locs[j])])
        # attributes rest exactly when their action does not occur
        for c in g.constants:
            if c.kind == "attribute" and c.parent is not None:
                rest = (1, TRANS, self.value_var[c.index][NONE])
                occ = (1, TRANS, self.value_var[c.parent][TRUE])
                self.trans_clauses.append([_neg(rest), _neg(occ)])
                self.trans_clauses.append([rest, occ])
        supporters: dict[tuple, list] = {}
        for law in g.laws:
            ctx = "state" if law.kind == "static" else "trans"
            if law.default:
                if law.head is None or g.constants[law.head[0]].is_action:
                    continue
                x = self.lit(law.body, ctx)
                if x is not False:
                    supporters.setdefault(law.head, []).append((law.kind, x))
                continue
            sink = self.state_clauses if ctx == "state" else self.trans_clauses
            prefix = self.body_clause(law.body, ctx)
            if prefix is None:
                continue
            if law.head is None:
                self.add(sink, prefix)
                continue
            inst, val = law.head
            head = self.atom(GAtom(inst, val, 1 if law.kind == "fluentDynamic" else 0), ctx)
            self.add(sink, prefix + [head])
            if not g.constants[inst].is_action:
                x = self.lit(law.body, ctx)
                supporters.setdefault(law.head, []).append((law.kind, x))
        self.completion(supporters)
        self.additive()
        return self.finish()

    def completion(self, supporters: dict) -> None:
        g = self.g
        for c in g.constants:
            if c.kind != "inertialFluent":
                continue
            for val in c.domain:
                now = self.atom(GAtom(c.index, val, 0), "trans")
                nxt = self.atom(GAtom(c.index, val, 1), "trans")
                clause = [_neg(nxt), now]
                for kind, x in supporters.get((c.index, val), ()):
                    if kind == "static" and not isinstance(x, bool):
                        x = (x[0], NEXT, x[2])  # the state template's literal, one step later
                    clause.append(x)
                self.add(self.trans_clauses, clause)

    def additive(self) -> None:
        g = self.g
        by_target: dict[int, list] = {}
        for contrib in g.contributions:
            by_target.setdefault(contrib.target, []).append(contrib)
        for c in g.constants:
            if c.kind not in ("additiveFluent", "additiveAction"):
                continue
            contribs = by_target.get(c.index, [])
            domain = [v for v in c.domain if isinstance(v, int)]
            if c.kind == "additiveFluent":
                start = [(v, self.atom(GAtom(c.index, v, 0), "trans")) for v in domain]
                target = {v: self.atom(GAtom(c.index, v, 1), "trans") for v in domain}
            else:
                start = [(0, True)]
                target = {v: self.atom(GAtom(c.index, v, 0), "trans") for v in domain}
            groups = _exclusive_groups(contribs)
            current = start
            for group in groups:
                fires = []
                for contrib in group:
                    x = self.lit(contrib.fire, "trans")
                    if x is not False:
                        fires.append((contrib.amount, x))
                if not fires:
                    continue
                lo = min(v for v, _ in current) + min(0, min(a for a, _ in fires))
                hi = max(v for v, _ in current) + max(0, max(a for a, _ in fires))
                if hi - lo > SUM_RANGE_CAP:
                    raise GroundingBudgetExceeded(f"additive sum range for {c} exceeds {SUM_RANGE_CAP}")
                reach = sorted({v for v, _ in current} | {v + a for v, _ in current for a, _ in fires})
                nxt = {v: (1, TRANS, self.blocks[TRANS].new()) for v in reach}
                locs = list(nxt.values())
                self.trans_clauses.append(list(locs))
                for i in range(len(locs)):
                    for j in range(i + 1, len(locs)):
                        self.trans_clauses.append([_neg(locs[i]), _neg(locs[j])])
                for v, lv in current:
                    pre = [] if lv is True else [_neg(lv)]
                    for a, x in fires:
                        self.add(self.trans_clauses, pre + [_neg(x) if x is not True else False, nxt[v + a]])
                    self.add(self.trans_clauses, pre + [x for _, x in fires] + [nxt[v]])
                current = list(nxt.items())
            for v, lv in current:
                pre = [] if lv is True else [_neg(lv)]
                self.add(self.trans_clauses, pre + [target.get(v, False)])

    def finish(self) -> Templates:
        S = self.blocks[STATE].size
        T = self.blocks[TRANS].size

        def fin(x: SymLit) -> int:
            sign, block, local = x
            w = local if block == STATE else (S + local if block == TRANS else S + T + local)
            return sign * w

        state = [[fin(x) for x in cl] for cl in self.state_clauses]
        trans = [[fin(x) for x in cl] for cl in self.trans_clauses]
        values = {}
        for inst, table in self.value_var.items():
            values[inst] = dict(table)
        return Templates(self.g, S, T, state, trans, values)


def _neg(x: SymLit) -> SymLit:
    return (-x[0], x[1], x[2])


def _positive_atoms(f: GFormula) -> set:
    items = f.items if isinstance(f, GAnd) else (f,)
    return {(a.inst, a.slot, a.value) for a in items if isinstance(a, GAtom)}


def _exclusive(a: set, b: set) -> bool:
    keys_a = {(i, s): v for i, s, v in a}
    for i, s, v in b:
        if (i, s) in keys_a and keys_a[(i, s)] != v:
            return True
    return False


def _exclusive_groups(contribs: list) -> list[list]:
    """Greedy partition into groups of pairwise mutually exclusive contributions."""
    groups: list[list] = []
    atoms: list[list] = []
    for c in contribs:
        mine = _positive_atoms(c.fire)
        for grp, grp_atoms in zip(groups, atoms):
            if all(_exclusive(mine, other) for other in grp_atoms):
                grp.append(c)
                grp_atoms.append(mine)
                break
        else:
            groups.append([c])
            atoms.append([mine])
    return groups


def build_templates(g: GroundProgram) -> Templates:
    return _Builder(g).build()


# ---------------------------------------------------------------- encoding


@dataclass
class Encoding:
    horizon: int
    templates: Templates
    clauses: list
    num_vars: int
    primary: list  # (var or -var for boolean false, step, inst, value)

    @property
    def ground(self) -> GroundProgram:
        return self.templates.ground

    def var(self, step: int, inst: int, value: Value) -> int:
        """Signed variable for ``inst=value`` at ``step`` (state or transition)."""
        tp = self.templates
        c = tp.ground.constants[inst]
        local = tp.value_var[inst][value]
        base = step * tp.stride + (tp.state_size if c.is_action else 0)
        return local + base if local > 0 else local - base


def _shift(clauses: list, offsets: Iterable[int]) -> list:
    """Instantiate window clauses at each offset (numpy, grouped by length)."""
    offsets = np.fromiter(offsets, dtype=np.int64)
    if not clauses or offsets.size == 0:
        return []
    by_len: dict[int, list] = {}
    for cl in clauses:
        by_len.setdefault(len(cl), []).append(cl)
    out: list = []
    for n, group in sorted(by_len.items()):
        if n == 0:
            out.extend([] for _ in range(offsets.size))
            continue
        arr = np.asarray(group, dtype=np.int64)
        sign = np.sign(arr)
        shifted = arr[None, :, :] + sign[None, :, :] * offsets[:, None, None]
        out.extend(shifted.reshape(-1, n).tolist())
    return out


def encode(
    g: GroundProgram,
    k: int,
    query: Optional[GroundQuery] = None,
    templates: Optional[Templates] = None,
) -> Encoding:
    """Clauses for horizon ``k``, with the query's timed formulas asserted."""
    if k < 0:
        raise HorizonNegative(f"horizon must be non-negative, got {k}")
    tp = templates or build_templates(g)
    stride = tp.stride
    clauses = _shift(tp.state_clauses, (t * stride for t in range(k + 1)))
    clauses += _shift(tp.trans_clauses, (t * stride for t in range(k)))
    num_vars = k * stride + tp.state_size
    primary = []
    for step in range(k + 1):
        for c in g.constants:
            if c.is_action and step == k:
                continue
            base = step * stride + (tp.state_size if c.is_action else 0)
            for val, local in tp.value_var[c.index].items():
                if c.is_boolean and val == FALSE:
                    continue
                primary.append((local + base, step, c.index, val))
    enc = Encoding(k, tp, clauses, num_vars, primary)
    if query is not None:
        _QueryEncoder(enc).assert_query(query)
    return enc


class _QueryEncoder:
    def __init__(self, enc: Encoding):
        self.enc = enc
        self._cache: dict = {}

    def new(self) -> int:
        self.enc.num_vars += 1
        return self.enc.num_vars

    def lit(self, f: GFormula, step: int) -> Union[int, bool]:
        enc = self.enc
        if isinstance(f, GConst):
            return f.value
        if isinstance(f, GAtom):
            c = enc.ground.constants[f.inst]
            at = step + f.slot
            if at > enc.horizon or (c.is_action and at >= enc.horizon):
                return False
            if f.value not in enc.templates.value_var[f.inst]:
                return False
            return enc.var(at, f.inst, f.value)
        if isinstance(f, GNot):
            x = self.lit(f.operand, step)
            return (not x) if isinstance(x, bool) else -x
        key = (f, step)
        if key in self._cache:
            return self._cache[key]
        is_and = isinstance(f, GAnd)
        parts = []
        for item in f.items:
            x = self.lit(item, step)
            if isinstance(x, bool):
                if x != is_and:
                    self._cache[key] = x
                    return x
                continue
            parts.append(x)
        if not parts:
            out: Union[int, bool] = is_and
        elif len(parts) == 1:
            out = parts[0]
        else:
            aux = self.new()
            cl = self.enc.clauses
            if is_and:
                for p in parts:
                    cl.append([-aux, p])
                cl.append([aux] + [-p for p in parts])
            else:
                for p in parts:
                    cl.append([aux, -p])
                cl.append([-aux] + parts)
            out = aux
        self._cache[key] = out
        return out

    def assert_formula(self, f: GFormula, step: int) -> None:
        items = f.items if isinstance(f, GAnd) else (f,)
        for item in items:
            x = self.lit(item, step)
            if x is True:
                continue
            self.enc.clauses.append([] if x is False else [x])

    def assert_query(self, q: GroundQuery) -> None:
        for step, f in q.items:
            at = self.enc.horizon if step == MAXSTEP else step
            if at > self.enc.horizon:
                self.enc.clauses.append([])
                continue
            self.assert_formula(f, at)


# ------------------------------------------------------------------ solving


@dataclass
class SolveStats:
    conflicts: int = 0
    decisions: int = 0
    propagations: int = 0
    restarts: int = 0
    wall_time: float = 0.0
    variables: int = 0
    clauses: int = 0

    def add(self, other: "SolveStats") -> None:
        for name in ("conflicts", "decisions", "propagations", "restarts", "wall_time"):
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def record(self) -> dict:
        return {
            "conflicts": self.conflicts,
            "decisions": self.decisions,
            "propagations": self.propagations,
            "restarts": self.restarts,
            "wall_time": round(self.wall_time, 6),
            "variables": self.variables,
            "clauses": self.clauses,
        }


@dataclass
class SolverConfig:
    backend: str = "glucose4"
    conflict_budget: int = DEFAULT_CONFLICT_BUDGET
    time_budget: float = DEFAULT_TIME_BUDGET


@dataclass
class Model:
    """Values of every primary variable: ``values[(step, inst)] = value``."""

    horizon: int
    values: dict
    true_vars: frozenset = field(default_factory=frozenset, compare=False)

    def state(self, step: int, g: GroundProgram) -> dict:
        return {c.index: self.values[(step, c.index)] for c in g.constants if not c.is_action}

    def actions(self, step: int, g: GroundProgram) -> dict:
        return {c.index: self.values[(step, c.index)] for c in g.constants if c.is_action}


class _Session:
    """One incremental solver instance over a fixed encoding."""

    def __init__(self, enc: Encoding, cfg: SolverConfig):
        self.enc = enc
        self.cfg = cfg
        self.stats = SolveStats(variables=enc.num_vars, clauses=len(enc.clauses))
        if cfg.backend == "builtin":
            from .sat import CDCLSolver

            self.solver = CDCLSolver(enc.num_vars)
            self.builtin = True
        else:
            from pysat.solvers import Solver

            self.solver = Solver(name=cfg.backend)
            self.builtin = False
        self.trivially_unsat = any(len(c) == 0 for c in enc.clauses)
        if not self.trivially_unsat:
            self.solver.append_formula(enc.clauses)
        if enc.num_vars and not self.builtin:
            try:
                self.solver.set_phases([-v for v in range(1, enc.num_vars + 1)])
            except NotImplementedError:  # pragma: no cover - backend specific
                pass

    def solve(self, conflict_budget: Optional[int] = None) -> Optional[bool]:
        """True/False, or None when a budget ran out."""
        if self.trivially_unsat:
            return False
        budget = self.cfg.conflict_budget if conflict_budget is None else conflict_budget
        started = time.perf_counter()
        if self.builtin:
            result = self.solver.solve(conflict_budget=budget, time_budget=self.cfg.time_budget)
            st = self.solver.stats
            self.stats.add(
                SolveStats(st["conflicts"], st["decisions"], st["propagations"], st["restarts"])
            )
        else:
            if self.cfg.backend.startswith(("cadical", "lingeling")):
                # these bindings ignore budgets and interrupts
                result = self.solver.solve()
            else:
                timer = threading.Timer(self.cfg.time_budget, self.solver.interrupt)
                timer.start()
                try:
                    self.solver.conf_budget(budget)
                    result = self.solver.solve_limited(expect_interrupt=True)
                finally:
                    timer.cancel()
                self.solver.clear_interrupt()
            acc = self.solver.accum_stats() or {}
            st = SolveStats(
                acc.get("conflicts", 0), acc.get("decisions", 0), acc.get("propagations", 0), acc.get("restarts", 0)
            )
            # accum_stats is cumulative per solver object
            self.stats.conflicts, self.stats.decisions = st.conflicts, st.decisions
            self.stats.propagations, self.stats.restarts = st.propagations, st.restarts
        self.stats.wall_time += time.perf_counter() - started
        return result

    def model(self) -> Model:
        raw = self.solver.get_model()
        true = {v for v in raw if v > 0}
        values: dict = {}
        for var, step, inst, val in self.enc.primary:
            c = self.enc.ground.constants[inst]
            if c.is_boolean:
                values[(step, inst)] = TRUE if var in true else FALSE
            elif var in true:
                values[(step, inst)] = val
        return Model(self.enc.horizon, values, frozenset(true))

    def block(self, m: Model) -> None:
        clause = []
        for var, step, inst, val in self.enc.primary:
            c = self.enc.ground.constants[inst]
            if c.is_boolean:
                clause.append(-var if m.values[(step, inst)] == TRUE else var)
            elif m.values.get((step, inst)) == val:
                clause.append(-var)
        if not clause:
            self.trivially_unsat = True
            return
        self.solver.add_clause(clause)

    def close(self) -> None:
        if not self.builtin:
            self.solver.delete()


def solve(enc: Encoding, cfg: Optional[SolverConfig] = None) -> tuple[Optional[Model], SolveStats]:
    """First model of ``enc`` (None when unsatisfiable) and the solver statistics."""
    s = _Session(enc, cfg or SolverConfig())
    try:
        r = s.solve()
        if r is None:
            raise SolverBudgetExceeded(f"solver budget exhausted at horizon {enc.horizon}")
        return (s.model() if r else None), s.stats
    finally:
        s.close()


def enumerate_models(
    enc: Encoding, limit: int, cfg: Optional[SolverConfig] = None, proof_budget: Optional[int] = None
) -> tuple[list[Model], bool, SolveStats]:
    """Up to ``limit`` distinct models, in solver order.

    The boolean is True when the list is known to be complete.  Searches
    after the first model use ``proof_budget`` conflicts when given, and an
    exhausted budget simply stops the enumeration.
    """
    if limit < 1:
        raise ValueError("limit must be at least 1")
    s = _Session(enc, cfg or SolverConfig())
    out: list[Model] = []
    complete = False
    try:
        while len(out) < limit:
            r = s.solve(None if not out or proof_budget is None else proof_budget)
            if r is None:
                if not out:
                    raise SolverBudgetExceeded(f"solver budget exhausted at horizon {enc.horizon}")
                break
            if not r:
                complete = True
                break
            m = s.model()
            out.append(m)
            s.block(m)
            if s.trivially_unsat:
                complete = True
                break
        else:
            r = s.solve(proof_budget)
            complete = r is False
        return out, complete, s.stats
    finally:
        s.close()


# ------------------------------------------------------------------- export


def export_cnf(enc: Encoding) -> str:
    """DIMACS text with a comment map from variables to ``step:constant=value``."""
    g = enc.ground
    lines = [f"c horizon {enc.horizon}"]
    for var, step, inst, val in enc.primary:
        v = "none" if val == NONE else val
        lines.append(f"c var {var} {step}:{g.constants[inst]}={v}")
    lines.append(f"p cnf {enc.num_vars} {len(enc.clauses)}")
    for cl in enc.clauses:
        lines.append(" ".join(str(x) for x in cl) + " 0")
    return "\n".join(lines) + "\n"


def parse_var_map(dimacs: str) -> dict[int, tuple]:
    """Inverse of the comment map written by :func:`export_cnf`."""
    out = {}
    for line in dimacs.splitlines():
        if line.startswith("c var "):
            _, _, var, rest = line.split(" ", 3)
            step, atom = rest.split(":", 1)
            out[int(var)] = (int(step), atom)
    return out


def model_from_assignment(enc: Encoding, assignment: Iterable[int]) -> Model:
    """Map an external solver's model (signed ints) back to a Model."""
    true = {v for v in assignment if v > 0}
    values: dict = {}
    for var, step, inst, val in enc.primary:
        c = enc.ground.constants[inst]
        if c.is_boolean:
            values[(step, inst)] = TRUE if var in true else FALSE
        elif var in true:
            values[(step, inst)] = val
    return Model(enc.horizon, values, frozenset(true))


def check_assignment(enc: Encoding, assignment: Iterable[int]) -> bool:
    true = {v for v in assignment if v > 0}
    return all(any((x > 0) == (abs(x) in true) for x in cl) for cl in enc.clauses)
