"""A small conflict-driven clause-learning solver.

Two watched literals, first-UIP learning, VSIDS activity with a binary
heap, phase saving (initial phase false) and Luby restarts.  It is slow
next to the compiled backends and exists so that encodings can be
cross-checked by an independent implementation.
"""

from __future__ import annotations

import heapq
import time
from typing import Iterable, Optional


def luby(i: int) -> int:
    """The i-th element (1-based) of the Luby sequence 1 1 2 1 1 2 4 ..."""
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while True:
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1


class CDCLSolver:
    RESTART_UNIT = 100
    DECAY = 0.95

    def __init__(self, num_vars: int = 0):
        self.n = 0
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.value: list[int] = [0]  # 1 true, -1 false, 0 unassigned
        self.level: list[int] = [0]
        self.reason: list[int] = [-1]
        self.activity: list[float] = [0.0]
        self.phase: list[int] = [-1]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.inc = 1.0
        self.heap: list = []
        self.unsat = False
        self.units: list[int] = []
        self.stats = {"conflicts": 0, "decisions": 0, "propagations": 0, "restarts": 0}
        self._model: Optional[list[int]] = None
        self.grow(num_vars)

    # -- setup

    def grow(self, n: int) -> None:
        while self.n < n:
            self.n += 1
            self.value.append(0)
            self.level.append(0)
            self.reason.append(-1)
            self.activity.append(0.0)
            self.phase.append(-1)
            self.watches[self.n] = []
            self.watches[-self.n] = []
            heapq.heappush(self.heap, (0.0, self.n))

    def append_formula(self, clauses: Iterable[Iterable[int]]) -> None:
        for c in clauses:
            self.add_clause(c)

    def add_clause(self, clause: Iterable[int]) -> None:
        self._backtrack(0)
        lits = sorted(set(clause), key=abs)
        if any(-x in lits for x in lits):
            return
        for x in lits:
            self.grow(abs(x))
        lits = [x for x in lits if self._val(x) != -1]
        if any(self._val(x) == 1 for x in lits):
            return
        if not lits:
            self.unsat = True
            return
        if len(lits) == 1:
            self.units.append(lits[0])
            return
        idx = len(self.clauses)
        self.clauses.append(lits)
        self.watches[lits[0]].append(idx)
        self.watches[lits[1]].append(idx)

    def _val(self, lit: int) -> int:
        v = self.value[abs(lit)]
        return v if lit > 0 else -v

    # -- search

    def _assign(self, lit: int, reason: int) -> None:
        v = abs(lit)
        self.value[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self) -> int:
        """Index of a conflicting clause, or -1."""
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            self.stats["propagations"] += 1
            false_lit = -lit
            ws = self.watches[false_lit]
            i = 0
            while i < len(ws):
                ci = ws[i]
                c = self.clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                if self._val(c[0]) == 1:
                    i += 1
                    continue
                for j in range(2, len(c)):
                    if self._val(c[j]) != -1:
                        c[1], c[j] = c[j], c[1]
                        self.watches[c[1]].append(ci)
                        ws[i] = ws[-1]
                        ws.pop()
                        break
                else:
                    if self._val(c[0]) == -1:
                        return ci
                    self._assign(c[0], ci)
                    i += 1
        return -1

    def _bump(self, v: int) -> None:
        self.activity[v] += self.inc
        if self.activity[v] > 1e100:
            for u in range(1, self.n + 1):
                self.activity[u] *= 1e-100
            self.inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.n + 1) if self.value[u] == 0]
            heapq.heapify(self.heap)
        heapq.heappush(self.heap, (-self.activity[v], v))

    def _analyze(self, ci: int) -> tuple[list[int], int]:
        seen = set()
        learnt: list[int] = []
        counter = 0
        lit = 0
        idx = len(self.trail) - 1
        cur = len(self.trail_lim)
        clause = self.clauses[ci]
        while True:
            for q in clause:
                if lit != 0 and q == lit:
                    continue
                v = abs(q)
                if v in seen or self.level[v] == 0:
                    continue
                seen.add(v)
                self._bump(v)
                if self.level[v] == cur:
                    counter += 1
                else:
                    learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            lit = self.trail[idx]
            idx -= 1
            counter -= 1
            if counter == 0:
                break
            clause = self.clauses[self.reason[abs(lit)]]
        learnt.insert(0, -lit)
        back = max((self.level[abs(x)] for x in learnt[1:]), default=0)
        if len(learnt) > 1:
            k = max(range(1, len(learnt)), key=lambda j: self.level[abs(learnt[j])])
            learnt[1], learnt[k] = learnt[k], learnt[1]
        return learnt, back

    def _backtrack(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        for lit in self.trail[start:]:
            v = abs(lit)
            self.phase[v] = 1 if lit > 0 else -1
            self.value[v] = 0
            self.reason[v] = -1
            heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = min(self.qhead, len(self.trail))

    def _decide(self) -> int:
        while self.heap:
            _, v = heapq.heappop(self.heap)
            if self.value[v] == 0:
                return v if self.phase[v] > 0 else -v
        return 0

    def solve(self, conflict_budget: Optional[int] = None, time_budget: Optional[float] = None) -> Optional[bool]:
        """True/False, or None when a budget was exhausted."""
        self._model = None
        if self.unsat:
            return False
        self._backtrack(0)
        for u in self.units:
            val = self._val(u)
            if val == -1:
                self.unsat = True
                return False
            if val == 0:
                self._assign(u, -1)
        if self._propagate() != -1:
            self.unsat = True
            return False
        deadline = None if time_budget is None else time.perf_counter() + time_budget
        conflicts = 0
        restart_i = 1
        limit = luby(restart_i) * self.RESTART_UNIT
        since_restart = 0
        while True:
            ci = self._propagate()
            if ci != -1:
                self.stats["conflicts"] += 1
                conflicts += 1
                since_restart += 1
                if not self.trail_lim:
                    self.unsat = True
                    return False
                learnt, back = self._analyze(ci)
                self._backtrack(back)
                if len(learnt) == 1:
                    self.units.append(learnt[0])
                    self._assign(learnt[0], -1)
                else:
                    idx = len(self.clauses)
                    self.clauses.append(learnt)
                    self.watches[learnt[0]].append(idx)
                    self.watches[learnt[1]].append(idx)
                    self._assign(learnt[0], idx)
                self.inc /= self.DECAY
                if conflict_budget is not None and conflicts >= conflict_budget:
                    self._backtrack(0)
                    return None
                if deadline is not None and (conflicts & 63) == 0 and time.perf_counter() > deadline:
                    self._backtrack(0)
                    return None
                continue
            if since_restart >= limit:
                self.stats["restarts"] += 1
                since_restart = 0
                restart_i += 1
                limit = luby(restart_i) * self.RESTART_UNIT
                self._backtrack(0)
                continue
            lit = self._decide()
            if lit == 0:
                self._model = [v if self.value[v] > 0 else -v for v in range(1, self.n + 1)]
                self._backtrack(0)
                return True
            self.stats["decisions"] += 1
            self.trail_lim.append(len(self.trail))
            self._assign(lit, -1)

    def get_model(self) -> Optional[list[int]]:
        return self._model

    def delete(self) -> None:
        pass
