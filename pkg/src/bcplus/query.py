"""Query answering, the program satisfiability check and result formatting."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .ast import FALSE, MAXSTEP, TRUE, Program, Query, Value
from .encode import SolverConfig, build_templates, encode, enumerate_models
from .errors import BCError, ParseFailure, ValidationFailure
from .normalize import NONE, GroundProgram, errors_only, ground, ground_query, validate_program
from .parser import SourceProgram, parse_program

SAT, UNSAT, ERROR = "SATISFIABLE", "UNSATISFIABLE", "ERROR"
DEFAULT_MAX_HORIZON = 30
DEFAULT_COUNT_BUDGET = 20_000


@dataclass
class QueryConfig:
    max_horizon: int = DEFAULT_MAX_HORIZON
    solver: SolverConfig = field(default_factory=SolverConfig)
    count_budget: int = DEFAULT_COUNT_BUDGET  # conflicts spent proving a model unique


@dataclass
class PlanResult:
    verdict: str
    horizon: int
    steps: list = field(default_factory=list)  # per step: {atom: value} for every fluent
    transitions: list = field(default_factory=list)  # per transition: {atom: value} of occurring actions
    models: str = "0"  # "0", "1" or "1+"
    label: Optional[str] = None
    note: str = ""
    diagnostics: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def satisfiable(self) -> bool:
        return self.verdict == SAT

    def record(self) -> dict:
        return {
            "label": self.label,
            "verdict": self.verdict,
            "horizon": self.horizon,
            "models": self.models,
            "note": self.note,
            "steps": [[[k, v] for k, v in s.items()] for s in self.steps],
            "transitions": [[[k, v] for k, v in a.items()] for a in self.transitions],
            "diagnostics": list(self.diagnostics),
            "stats": self.stats,
        }

    def to_json(self) -> str:
        return json.dumps(self.record(), sort_keys=True)

    @classmethod
    def from_record(cls, rec: dict) -> "PlanResult":
        return cls(
            verdict=rec["verdict"],
            horizon=rec["horizon"],
            steps=[{k: v for k, v in s} for s in rec.get("steps", [])],
            transitions=[{k: v for k, v in a} for a in rec.get("transitions", [])],
            models=rec.get("models", "0"),
            label=rec.get("label"),
            note=rec.get("note", ""),
            diagnostics=list(rec.get("diagnostics", [])),
            stats=rec.get("stats", {}),
        )


@dataclass(frozen=True)
class SampleQueryExpectation:
    query: Query
    expected: Optional[str]  # "satisfiable", "unsatisfiable" or None when not annotated
    text: str = ""


# ------------------------------------------------------------------- running


def _plan(g: GroundProgram, model) -> tuple[list, list]:
    """Fluent valuations per step and, per transition, the occurring
    actions in print order (each action followed by its attributes)."""
    steps, trans = [], []
    order = sorted(g.actions, key=lambda c: _arg_key(str(c)))
    for t in range(model.horizon + 1):
        steps.append({str(c): model.values[(t, c.index)] for c in g.fluents})
        if t == model.horizon:
            break
        occ = {}
        for c in order:
            v = model.values[(t, c.index)]
            if c.kind == "exogenousAction" and v == TRUE:
                occ[str(c)] = TRUE
                for a in order:
                    av = model.values[(t, a.index)]
                    if a.kind == "attribute" and a.parent == c.index and av != NONE:
                        occ[str(a)] = av
        for c in order:
            v = model.values[(t, c.index)]
            if c.kind == "additiveAction" and v != 0:
                occ[str(c)] = v
        trans.append(occ)
    return steps, trans


def _horizons(q: Query, cfg: QueryConfig) -> list[int]:
    if q.maxstep is not None:
        return [q.maxstep]
    start = max([s for s, _ in q.items if s != MAXSTEP] + [0])
    return list(range(start, max(start, cfg.max_horizon) + 1))


def solve_ground(g: GroundProgram, q: Query, cfg: Optional[QueryConfig] = None, templates=None) -> PlanResult:
    """Horizon search for ``q`` over an already ground program."""
    cfg = cfg or QueryConfig()
    tp = templates or build_templates(g)
    gq = ground_query(g, q)
    per_horizon = []
    horizons = _horizons(q, cfg)
    for k in horizons:
        enc = encode(g, k, gq, tp)
        models, complete, st = enumerate_models(enc, 2, cfg.solver, proof_budget=cfg.count_budget)
        per_horizon.append({"horizon": k, "verdict": SAT if models else UNSAT, **st.record()})
        if models:
            steps, trans = _plan(g, models[0])
            count = "1" if complete and len(models) == 1 else "1+"
            return PlanResult(SAT, k, steps, trans, count, q.label, stats={"solves": per_horizon})
    last = horizons[-1] if horizons else 0
    note = f"UNSATISFIABLE up to horizon {last}" if q.maxstep is None else f"UNSATISFIABLE at horizon {last}"
    return PlanResult(UNSAT, last, models="0", label=q.label, note=note, stats={"solves": per_horizon})


def run_query(p: Program, q: Optional[Query] = None, cfg: Optional[QueryConfig] = None) -> PlanResult:
    """Answer ``q`` (default: the program's last query) on ``p``.

    Raises ValidationFailure when the program has errors.
    """
    if q is None:
        q = p.query(None)
        if q is None:
            raise BCError("the program has no query")
    errs = errors_only(validate_program(p))
    if errs:
        raise ValidationFailure(errs)
    g = ground(p, check=False)
    return solve_ground(g, q, cfg)


def satisfiability_check(p: Program, cfg: Optional[QueryConfig] = None, origin: str = "<input>") -> PlanResult:
    """Validate, then look for one legal state with no query attached."""
    cfg = cfg or QueryConfig()
    diags = validate_program(p, origin)
    errs = errors_only(diags)
    if errs:
        return PlanResult(ERROR, 0, diagnostics=[str(d) for d in errs])
    try:
        g = ground(p.without_queries(), check=False)
    except BCError as e:
        return PlanResult(ERROR, 0, diagnostics=[str(e)])
    r = solve_ground(g, Query(None, 0, ()), cfg)
    r.diagnostics = [str(d) for d in diags]
    return r


def check_source(text: str, origin: str = "<input>", cfg: Optional[QueryConfig] = None) -> PlanResult:
    """Satisfiability check straight from source text, reporting syntax errors too."""
    prog, diags = parse_program(SourceProgram(text, origin))
    if prog is None:
        return PlanResult(ERROR, 0, diagnostics=[str(d) for d in diags if d.severity == "error"])
    r = satisfiability_check(prog, cfg, origin)
    r.diagnostics = [str(d) for d in diags] + r.diagnostics
    return r


def run_sample_queries(
    p: Program, qs: Sequence[SampleQueryExpectation], cfg: Optional[QueryConfig] = None
) -> list[tuple[PlanResult, Optional[bool]]]:
    """Run each query on its own; matched is None for unannotated queries."""
    out = []
    if not qs:
        return out
    base = p.without_queries()
    errs = errors_only(validate_program(base.with_queries(tuple(e.query for e in qs))))
    if errs:
        for e in qs:
            out.append((PlanResult(ERROR, 0, label=e.query.label, diagnostics=[str(d) for d in errs]), False))
        return out
    g = ground(base, check=False)
    tp = build_templates(g)
    for e in qs:
        try:
            r = solve_ground(g, e.query, cfg, tp)
        except BCError as exc:
            r = PlanResult(ERROR, 0, label=e.query.label, diagnostics=[str(exc)])
        if e.expected is None:
            matched = None
        else:
            matched = (r.verdict == SAT) == (e.expected == "satisfiable") and r.verdict != ERROR
        out.append((r, matched))
    return out


# ---------------------------------------------------------------- formatting


def _arg_key(text: str):
    m = re.fullmatch(r"([^()]*)(?:\((.*)\))?", text)
    name, args = m.group(1), m.group(2)
    parts = []
    for a in (args.split(", ") if args else []):
        parts.append((0, int(a), "") if re.fullmatch(r"-?\d+", a) else (1, 0, a))
    return (name, tuple(parts))


def _atom(name: str, value: Value) -> str:
    return name if value == TRUE else f"{name}={value}"


def format_state(step: dict) -> str:
    atoms = [_atom(k, v) for k, v in sorted(step.items(), key=lambda kv: _arg_key(kv[0])) if v != FALSE]
    return " ".join(atoms)


def format_actions(trans: dict) -> str:
    """Occurring actions in stored order."""
    return " ".join(_atom(k, v) for k, v in trans.items())


def format_output(r: PlanResult, stats: bool = False) -> str:
    lines = ["Solving..."]
    if r.verdict == ERROR:
        lines.extend(r.diagnostics)
        lines.append("ERROR")
        return "\n".join(lines) + "\n"
    if r.verdict == SAT:
        lines += ["Solution: 1", "\t", ""]
        for t, step in enumerate(r.steps):
            lines.append(f"\t{t}:  {format_state(step)}")
            lines.append("")
            if t < len(r.transitions):
                lines.append(f"\tACTIONS:  {format_actions(r.transitions[t])}")
                lines.append("")
        lines.append("SATISFIABLE")
        lines.append(f"Models       : {r.models}")
    else:
        lines += ["UNSATISFIABLE", "Models       : 0", "No solution."]
    if stats:
        solves = r.stats.get("solves", [])
        lines.append(f"Calls        : {len(solves)}")
        total = sum(s.get("wall_time", 0.0) for s in solves)
        lines.append(f"Time         : {total:.3f}s")
    return "\n".join(lines) + "\n"


def _value(text: str) -> Value:
    return int(text) if re.fullmatch(r"-?\d+", text) else text


def _split_atoms(text: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in text.strip():
        if ch == " " and depth == 0:
            if cur:
                out.append(cur)
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    if cur:
        out.append(cur)
    return out


def _parse_atoms(text: str) -> dict:
    out = {}
    for tok in _split_atoms(text):
        name, eq, v = tok.rpartition("=")
        if eq and name.count("(") == name.count(")"):
            out[name] = _value(v)
        else:
            out[tok] = TRUE
    return out


def parse_output(text: str) -> PlanResult:
    """Read back the text written by :func:`format_output`."""
    steps, trans = [], []
    verdict, models = UNSAT, "0"
    for line in text.splitlines():
        s = line.strip()
        m = re.match(r"^(\d+):\s*(.*)$", s)
        if m:
            steps.append(_parse_atoms(m.group(2)))
        elif s.startswith("ACTIONS:"):
            trans.append(_parse_atoms(s[len("ACTIONS:"):]))
        elif s == SAT:
            verdict = SAT
        elif s.startswith("Models"):
            models = s.split(":", 1)[1].strip()
    return PlanResult(verdict, max(len(steps) - 1, 0), steps, trans, models)


def full_valuation(g: GroundProgram, r: PlanResult) -> tuple[list[dict], list[dict]]:
    """Instance-indexed states and action valuations of a (possibly parsed) plan.

    Omitted boolean fluents read as false; omitted actions as not occurring,
    omitted attributes as resting and omitted additive actions as 0.
    """
    states = []
    for step in r.steps:
        st = {}
        for c in g.fluents:
            v = step.get(str(c))
            st[c.index] = (FALSE if c.is_boolean else None) if v is None else v
        states.append(st)
    actions = []
    for occ in r.transitions:
        a = {}
        for c in g.actions:
            v = occ.get(str(c))
            if v is None:
                v = {"exogenousAction": FALSE, "attribute": NONE, "additiveAction": 0}[c.kind]
            a[c.index] = v
        actions.append(a)
    return states, actions


def read_expectations(blocks: Iterable[tuple[str, Optional[str]]]) -> list[SampleQueryExpectation]:
    """Parse (query text, annotation) pairs into expectations."""
    out = []
    from .parser import parse_query

    for text, annotation in blocks:
        q, diags = parse_query(SourceProgram(text))
        if q is None:
            raise ParseFailure([d for d in diags if d.severity == "error"])
        out.append(SampleQueryExpectation(q, annotation, text))
    return out
