"""Brute-force transition-system semantics.

States and transitions are enumerated by checking candidate valuations
against the ground laws directly.  Nothing here touches the clause
machinery in :mod:`bcplus.encode`; ground formulas are compiled to Python
predicates over value tuples instead.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .ast import FALSE, MAXSTEP, TRUE
from .errors import StateSpaceTooLarge
from .normalize import NONE, GAnd, GAtom, GConst, GFormula, GNot, GroundProgram, GroundQuery

DEFAULT_STATE_CAP = 5_000_000
DEFAULT_BOUND = 30

State = tuple  # values of the fluents, in GroundProgram.fluents order
Actions = tuple  # values of the actions, in GroundProgram.actions order


@dataclass(frozen=True)
class NoPlanWithin:
    bound: int


@dataclass(frozen=True)
class PlanViolation:
    step: int
    reason: str


class _Compiled:
    __slots__ = ("test", "required", "law")

    def __init__(self, test: Callable, required: tuple, law):
        self.test = test
        self.required = required  # (where, pos, value) atoms every true body contains
        self.law = law


class Oracle:
    def __init__(self, g: GroundProgram, max_concurrent: Optional[int] = 1, state_cap: int = DEFAULT_STATE_CAP):
        self.g = g
        self.max_concurrent = max_concurrent
        self.state_cap = state_cap
        self.fluents = [c for c in g.constants if not c.is_action]
        self.actions = [c for c in g.constants if c.is_action]
        self.fpos = {c.index: i for i, c in enumerate(self.fluents)}
        self.apos = {c.index: i for i, c in enumerate(self.actions)}
        self.static, self.action_laws, self.dynamic = [], [], []
        self.supports: dict[tuple, list] = {}  # (fluent pos, value) -> [(kind, compiled)]
        for law in g.laws:
            comp = self._compile(law.body, law)
            if law.head is not None and law.head[0] in self.fpos:
                key = (self.fpos[law.head[0]], law.head[1])
                self.supports.setdefault(key, []).append((law.kind, comp))
            if law.default:
                continue
            {"static": self.static, "actionDynamic": self.action_laws, "fluentDynamic": self.dynamic}[law.kind].append(
                comp
            )
        self.contribs = [(c, self._compile(c.fire, c)) for c in g.contributions]
        self.boolean_actions = [c for c in self.actions if c.kind == "exogenousAction"]
        self.attributes = [c for c in self.actions if c.kind == "attribute"]
        self.additive_actions = [c for c in self.actions if c.kind == "additiveAction"]

    # -- compilation

    def _expr(self, f: GFormula) -> str:
        if isinstance(f, GConst):
            return "True" if f.value else "False"
        if isinstance(f, GAtom):
            if f.inst in self.apos:
                if f.slot == 1:
                    return "False"
                return f"(a[{self.apos[f.inst]}] == {f.value!r})"
            src = "s" if f.slot == 0 else "n"
            return f"({src}[{self.fpos[f.inst]}] == {f.value!r})"
        if isinstance(f, GNot):
            return f"(not {self._expr(f.operand)})"
        joiner = " and " if isinstance(f, GAnd) else " or "
        return "(" + joiner.join(self._expr(x) for x in f.items) + ")"

    def _compile(self, f: GFormula, law) -> _Compiled:
        test = eval(f"lambda s, a, n: {self._expr(f)}")  # noqa: S307 - generated from ground atoms only
        items = f.items if isinstance(f, GAnd) else (f,)
        required = []
        for x in items:
            if isinstance(x, GAtom) and x.slot == 0:
                if x.inst in self.apos:
                    required.append(("a", self.apos[x.inst], x.value))
                else:
                    required.append(("s", self.fpos[x.inst], x.value))
        return _Compiled(test, tuple(required), law)

    @staticmethod
    def _may_fire(comp: _Compiled, s: State, a: Actions) -> bool:
        for where, pos, val in comp.required:
            if (s if where == "s" else a)[pos] != val:
                return False
        return True

    # -- states

    def _fluent_domain(self, c) -> tuple:
        return tuple(v for v in c.domain if v != NONE)

    def state_candidates(self, fixed: Optional[dict] = None) -> Iterable[State]:
        fixed = fixed or {}
        domains = [(fixed[c.index],) if c.index in fixed else self._fluent_domain(c) for c in self.fluents]
        size = 1
        for d in domains:
            size *= len(d)
        if size > self.state_cap:
            raise StateSpaceTooLarge(f"{size} candidate states exceed the cap of {self.state_cap}")
        return itertools.product(*domains)

    def static_violation(self, s: State) -> Optional[str]:
        for comp in self.static:
            law = comp.law
            if comp.test(s, (), s):
                if law.head is None or s[self.fpos[law.head[0]]] != law.head[1]:
                    return self.g.describe(law)
        return None

    def enumerate_states(self, fixed: Optional[dict] = None) -> list[State]:
        """Every valuation of the fluents satisfying the static laws."""
        return [s for s in self.state_candidates(fixed) if self.static_violation(s) is None]

    # -- actions

    def action_candidates(self, s: State) -> Iterable[Actions]:
        n = len(self.boolean_actions)
        limit = n if self.max_concurrent is None else min(n, self.max_concurrent)
        for size in range(limit + 1):
            for chosen in itertools.combinations(range(n), size):
                base = [None] * len(self.actions)
                occurring = set()
                for i, c in enumerate(self.boolean_actions):
                    on = i in chosen
                    base[self.apos[c.index]] = TRUE if on else FALSE
                    if on:
                        occurring.add(c.index)
                attr_domains = []
                for c in self.attributes:
                    if c.parent in occurring:
                        attr_domains.append(tuple(v for v in c.domain if v != NONE))
                    else:
                        attr_domains.append((NONE,))
                for combo in itertools.product(*attr_domains):
                    a = list(base)
                    for c, v in zip(self.attributes, combo):
                        a[self.apos[c.index]] = v
                    for c in self.additive_actions:
                        a[self.apos[c.index]] = 0
                    if self.additive_actions:
                        sums = self._sums(s, tuple(a), additive_actions=True)
                        for c in self.additive_actions:
                            a[self.apos[c.index]] = sums.get(c.index, 0)
                    yield tuple(a)

    def _sums(self, s: State, a: Actions, additive_actions: bool = False) -> dict:
        out: dict = {}
        for contrib, comp in self.contribs:
            is_action = contrib.target in self.apos
            if is_action != additive_actions:
                continue
            if self._may_fire(comp, s, a) and comp.test(s, a, s):
                out[contrib.target] = out.get(contrib.target, 0) + contrib.amount
        return out

    def action_violation(self, s: State, a: Actions) -> Optional[str]:
        g = self.g
        for c in self.attributes:
            v = a[self.apos[c.index]]
            occurs = c.parent is not None and a[self.apos[c.parent]] == TRUE
            if occurs == (v == NONE) or v not in c.domain:
                return f"attribute {c} has value {v} while its action {'occurs' if occurs else 'does not occur'}"
        for c in self.additive_actions:
            v = a[self.apos[c.index]]
            if v not in c.domain:
                return f"additive action {c}={v} is outside its domain"
        for comp in self.action_laws:
            law = comp.law
            if self._may_fire(comp, s, a) and comp.test(s, a, s):
                if law.head is None or a[self.apos[law.head[0]]] != law.head[1]:
                    return g.describe(law)
        return None

    # -- transitions

    def _next_candidates(self, s: State, a: Actions) -> Optional[list]:
        sums = self._sums(s, a)
        cands = []
        for i, c in enumerate(self.fluents):
            if c.kind == "additiveFluent":
                v = s[i] + sums.get(c.index, 0)
                if v not in c.domain:
                    return None
                cands.append((v,))
                continue
            vals = {s[i]}
            for val in self._fluent_domain(c):
                for kind, comp in self.supports.get((i, val), ()):
                    if kind == "static" or self._may_fire(comp, s, a):
                        vals.add(val)
                        break
            cands.append(tuple(v for v in self._fluent_domain(c) if v in vals))
        return cands

    def check_transition(self, s: State, a: Actions, n: State) -> Optional[str]:
        """None when (s, a, n) is a transition, else a description of the first failed check."""
        g = self.g
        bad = self.action_violation(s, a)
        if bad:
            return bad
        bad = self.static_violation(n)
        if bad:
            return bad
        for comp in self.dynamic:
            law = comp.law
            if self._may_fire(comp, s, a) and comp.test(s, a, n):
                if law.head is None or n[self.fpos[law.head[0]]] != law.head[1]:
                    return g.describe(law)
        sums = self._sums(s, a)
        for i, c in enumerate(self.fluents):
            if c.kind == "additiveFluent":
                want = s[i] + sums.get(c.index, 0)
                if n[i] != want:
                    return f"additive fluent {c} should be {want} after the transition, found {n[i]}"
            elif c.kind == "inertialFluent" and n[i] != s[i]:
                supported = False
                for kind, comp in self.supports.get((i, n[i]), ()):
                    if kind == "static":
                        ok = comp.test(n, (), n)
                    else:
                        ok = self._may_fire(comp, s, a) and comp.test(s, a, n)
                    if ok:
                        supported = True
                        break
                if not supported:
                    return f"{c} changes from {s[i]} to {n[i]} without a cause"
        return None

    def enumerate_transitions(self, s: State) -> list[tuple[Actions, State]]:
        out = []
        for a in self.action_candidates(s):
            if self.action_violation(s, a):
                continue
            cands = self._next_candidates(s, a)
            if cands is None:
                continue
            for n in itertools.product(*cands):
                if self.check_transition(s, a, n) is None:
                    out.append((a, n))
        return out

    # -- queries

    def holds(self, f: GFormula, s: State, a: Optional[Actions] = None) -> bool:
        test = eval(f"lambda s, a, n: {self._expr(f)}")  # noqa: S307
        return bool(test(s, a if a is not None else (None,) * len(self.actions), s))

    def init_fixed(self, f: GFormula) -> dict:
        """Fluent values forced by top-level positive atoms of an initial-state formula."""
        items = f.items if isinstance(f, GAnd) else (f,)
        out = {}
        for x in items:
            if isinstance(x, GAtom) and x.inst in self.fpos and x.slot == 0:
                out[x.inst] = x.value
        return out

    def bfs_plan(self, init: GFormula, goal: GFormula, bound: int = DEFAULT_BOUND):
        """Length of a shortest plan from an ``init`` state to a ``goal`` state, or NoPlanWithin."""
        init_test = eval(f"lambda s, a, n: {self._expr(init)}")  # noqa: S307
        goal_test = eval(f"lambda s, a, n: {self._expr(goal)}")  # noqa: S307
        none_a = (None,) * len(self.actions)
        frontier = [s for s in self.enumerate_states(self.init_fixed(init)) if init_test(s, none_a, s)]
        seen = set(frontier)
        for depth in range(bound + 1):
            if any(goal_test(s, none_a, s) for s in frontier):
                return depth
            if depth == bound:
                break
            nxt = []
            for s in frontier:
                for _, n in self.enumerate_transitions(s):
                    if n not in seen:
                        seen.add(n)
                        nxt.append(n)
            if not nxt:
                break
            frontier = nxt
        return NoPlanWithin(bound)

    def shortest_path(self, init: GFormula, goal: GFormula, bound: int = DEFAULT_BOUND):
        """A shortest plan as [(state, actions), ..., (state, None)], or NoPlanWithin."""
        init_test = eval(f"lambda s, a, n: {self._expr(init)}")  # noqa: S307
        goal_test = eval(f"lambda s, a, n: {self._expr(goal)}")  # noqa: S307
        none_a = (None,) * len(self.actions)
        starts = [s for s in self.enumerate_states(self.init_fixed(init)) if init_test(s, none_a, s)]
        parent: dict = {s: None for s in starts}
        queue = deque((s, 0) for s in starts)
        while queue:
            s, d = queue.popleft()
            if goal_test(s, none_a, s):
                path = [(s, None)]
                while parent[path[-1][0]] is not None:
                    prev, a = parent[path[-1][0]]
                    path.append((prev, a))
                path.reverse()  # path[i] = (state i, actions from state i to state i + 1)
                return path
            if d == bound:
                continue
            for a, n in self.enumerate_transitions(s):
                if n not in parent:
                    parent[n] = (s, a)
                    queue.append((n, d + 1))
        return NoPlanWithin(bound)

    # -- conversions

    def state_of(self, values: dict) -> State:
        return tuple(values[c.index] for c in self.fluents)

    def actions_of(self, values: dict) -> Actions:
        return tuple(values[c.index] for c in self.actions)


def split_query(q: GroundQuery) -> tuple[GFormula, GFormula]:
    """Initial-state and goal formulas of a query (step-0 and maxstep items)."""
    init = [f for step, f in q.items if step == 0]
    goal = [f for step, f in q.items if step == MAXSTEP]
    from .normalize import g_and

    return g_and(init), g_and(goal)


def validate_plan(g: GroundProgram, states: list[dict], actions: list[dict], oracle: Optional[Oracle] = None):
    """Replay a plan; True, or the first PlanViolation.

    ``states[t]`` and ``actions[t]`` map constant instance indices to
    values.  A violated static law in the first state is reported at step 0.
    """
    o = oracle or Oracle(g, max_concurrent=None)
    first = o.state_of(states[0])
    bad = o.static_violation(first)
    if bad:
        return PlanViolation(0, bad)
    for t, acts in enumerate(actions):
        s = o.state_of(states[t])
        n = o.state_of(states[t + 1])
        bad = o.check_transition(s, o.actions_of(acts), n)
        if bad:
            return PlanViolation(t, bad)
    return True
