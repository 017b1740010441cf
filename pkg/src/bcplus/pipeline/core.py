"""The program-synthesis pipeline: signature, knowledge, laws and query,
then self-revision driven by the reasoner's output."""

from __future__ import annotations

import json
import re
import string
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from ..ast import Program, Query
from ..config import Config
from ..errors import BCError, MissingFencedBlock
from ..normalize import errors_only, validate_program
from ..parser import SourceProgram, parse_program, parse_query
from ..query import (
    ERROR,
    SAT,
    PlanResult,
    SampleQueryExpectation,
    check_source,
    format_output,
    run_query,
    run_sample_queries,
)
from .client import Cancelled, ClientError, CompletionClient

STAGES = ("signature", "knowledge", "rules", "satisfiability", "sample-queries", "feedback")
SEGMENTS = ("PROGRAM", "MAIN QUERY", "SAMPLE QUERIES")

# terminal statuses
OK = "ok"
BUDGET_EXHAUSTED = "BudgetExhausted"
CANCELLED = "Cancelled"


# ------------------------------------------------------------ text helpers


_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.S)


def last_fenced_block(text: str) -> str:
    """Contents of the last triple-backtick block of a response."""
    blocks = _FENCE.findall(text)
    if not blocks:
        raise MissingFencedBlock("the response has no block in triple backticks")
    return blocks[-1].strip("\n")


_END = re.compile(r"(?<!\.)\.(?!\.)(?=[ \t]*(?:%[^\n]*)?(?:\n|$))")


def split_statements(text: str) -> list[str]:
    """Split program text into statements, each keeping its leading comments.

    A statement ends at a period that closes a line (comments allowed
    after it); the periods of ``0..10`` never qualify.
    """
    out = []
    pos = 0
    for m in _END.finditer(text):
        if m.start() < pos or "%" in text[text.rfind("\n", 0, m.start()) + 1 : m.start()]:
            continue  # inside a comment
        chunk = text[pos:m.end()]
        eol = text.find("\n", m.end())
        eol = len(text) if eol < 0 else eol
        chunk += text[m.end():eol]
        pos = eol
        if _strip_comments(chunk).strip():
            out.append(chunk.strip("\n"))
    tail = text[pos:]
    if _strip_comments(tail).strip():
        out.append(tail.strip("\n"))
    return out


def _strip_comments(text: str) -> str:
    return re.sub(r"%[^\n]*", "", text)


def _kind(statement: str) -> str:
    body = _strip_comments(statement).strip()
    m = re.match(r":-\s*(\w+)", body)
    if not m:
        return "law"
    return "query" if m.group(1) == "query" else "declaration"


def split_program_text(text: str) -> tuple[str, str, list[str]]:
    """(signature, laws, queries) of a program text."""
    sig, laws, queries = [], [], []
    for st in split_statements(text):
        {"declaration": sig, "law": laws, "query": queries}[_kind(st)].append(st)
    return "\n\n".join(sig), "\n\n".join(laws), queries


_NUMBERING = re.compile(r"^(\s*)\d+[.)]\s+(?=\S)", re.M)


def strip_numbering(text: str) -> str:
    """Drop "1. " style list numbers at line starts (never "0..9" ranges)."""
    return _NUMBERING.sub(r"\1", text)


def annotation_of(statement: str) -> Optional[str]:
    """"satisfiable"/"unsatisfiable" from a trailing annotation, else None."""
    found = re.findall(r"\((un)?satisfiable\)", statement, re.I)
    if not found:
        return None
    return "unsatisfiable" if found[-1] else "satisfiable"


_SEGMENT_LINE = re.compile(
    r"^[ \t]*(?:%[ \t]*)?(?:\[(UN)?CHANGED\][ \t]*)?(PROGRAM|MAIN QUERY|SAMPLE QUERIES)[ \t]*:?[ \t]*(?:\[(UN)?CHANGED\])?[ \t]*:?[ \t]*$",
    re.M,
)


@dataclass
class Segment:
    name: str
    changed: bool
    marked: bool
    body: str


def parse_segments(block: str) -> dict[str, Segment]:
    """The PROGRAM / MAIN QUERY / SAMPLE QUERIES segments of a feedback answer."""
    heads = list(_SEGMENT_LINE.finditer(block))
    out: dict[str, Segment] = {}
    for i, m in enumerate(heads):
        end = heads[i + 1].start() if i + 1 < len(heads) else len(block)
        text = m.group(0)
        marked = "CHANGED" in text
        changed = marked and "UNCHANGED" not in text
        out[m.group(2)] = Segment(m.group(2), changed, marked, block[m.end():end].strip("\n"))
    return out


def problem_query(problem: str) -> str:
    """The query paragraph of a problem statement (after a "Query" heading)."""
    m = re.search(r"^\s*query\s*:?\s*$(.*)", problem, re.I | re.M | re.S)
    return m.group(1).strip() if m else problem.strip()


# --------------------------------------------------------------- templates


class Templates:
    """Prompt templates with ``$name`` placeholders, loaded from a directory."""

    NAMES = ("language", "checklist") + tuple(s.replace("-", "_") for s in STAGES)

    def __init__(self, texts: Mapping[str, str]):
        self.texts = dict(texts)

    @classmethod
    def load(cls, directory: Optional[str] = None) -> "Templates":
        texts = {}
        if directory is None:
            root = resources.files("bcplus.pipeline") / "templates"
            for name in cls.NAMES:
                texts[name] = (root / f"{name}.txt").read_text(encoding="utf-8")
        else:
            for name in cls.NAMES:
                texts[name] = (Path(directory) / f"{name}.txt").read_text(encoding="utf-8")
        return cls(texts)

    def placeholders(self, name: str) -> set[str]:
        t = string.Template(self.texts[name])
        return {m.group("named") or m.group("braced") for m in t.pattern.finditer(t.template) if m.group("named") or m.group("braced")}

    def render(self, name: str, **values: str) -> str:
        """Fill every placeholder; a missing value raises KeyError."""
        values.setdefault("language", self.texts["language"].strip())
        values.setdefault("checklist", self.texts["checklist"].strip())
        return string.Template(self.texts[name]).substitute(values)


# ------------------------------------------------------------------- state


@dataclass
class Exchange:
    stage: str
    attempt: int
    prompt: str = ""
    response: str = ""
    feedback: str = ""
    status: str = ""
    seconds: float = 0.0  # kept out of the persisted index


@dataclass
class PipelineState:
    problem_text: str
    query_text: str = ""
    analysis: str = ""
    constants_reading: str = ""
    signature_text: str = ""
    signature: Optional[Program] = None
    knowledge: list = field(default_factory=list)
    rules_text: str = ""
    main_query_text: str = ""
    program: Optional[Program] = None
    main_query: Optional[Query] = None
    sample_queries: list = field(default_factory=list)
    sample_texts: list = field(default_factory=list)
    sat_budget: int = 10
    feedback_budget: int = 3
    transcript: list = field(default_factory=list)
    status: str = "running"
    stage: str = ""
    warnings: list = field(default_factory=list)
    incomplete: bool = False
    sat_revisions: int = 0
    feedback_iterations: int = 0
    manual_corrections: int = 0
    result: Optional[PlanResult] = None

    @property
    def program_text(self) -> str:
        return "\n\n".join(t for t in (self.signature_text, self.rules_text) if t.strip())

    @property
    def full_text(self) -> str:
        return "\n\n".join(t for t in (self.program_text, self.main_query_text) if t.strip()) + "\n"

    def summary(self) -> dict:
        return {
            "status": self.status,
            "stage": self.stage,
            "sat_revisions": self.sat_revisions,
            "feedback_iterations": self.feedback_iterations,
            "manual_corrections": self.manual_corrections,
            "sample_queries": len(self.sample_queries),
            "knowledge": len(self.knowledge),
            "incomplete": self.incomplete,
            "warnings": list(self.warnings),
            "verdict": self.result.verdict if self.result else None,
            "horizon": self.result.horizon if self.result else None,
        }


class StageFailed(BCError):
    pass


# ---------------------------------------------------------------- pipeline


class Pipeline:
    def __init__(self, client: CompletionClient, cfg: Optional[Config] = None, templates: Optional[Templates] = None):
        self.client = client
        self.cfg = cfg or Config()
        self.pcfg = self.cfg.pipeline
        self.templates = templates or Templates.load(self.pcfg.templates_dir)
        self.transcript_dir = Path(self.pcfg.transcript_dir) if self.pcfg.transcript_dir else None
        if self.transcript_dir is not None:
            self.transcript_dir.mkdir(parents=True, exist_ok=True)
            for stale in ("index.jsonl", "timings.jsonl"):
                (self.transcript_dir / stale).unlink(missing_ok=True)

    # -- bookkeeping

    def _record(self, state: PipelineState, ex: Exchange) -> None:
        state.transcript.append(ex)
        if self.transcript_dir is None:
            return
        n = len(state.transcript)
        stem = f"{n:03d}-{ex.stage}-{ex.attempt}"
        files = []
        for part in ("prompt", "response", "feedback"):
            text = getattr(ex, part)
            if text:
                (self.transcript_dir / f"{stem}.{part}.txt").write_text(text, encoding="utf-8")
                files.append(f"{stem}.{part}.txt")
        entry = {"n": n, "stage": ex.stage, "attempt": ex.attempt, "status": ex.status, "files": files}
        with open(self.transcript_dir / "index.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
        with open(self.transcript_dir / "timings.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"n": n, "seconds": round(ex.seconds, 6)}) + "\n")

    def _ask(self, state: PipelineState, stage: str, attempt: int, prompt: str) -> Exchange:
        if self.client.cancelled:
            raise Cancelled("client cancelled")
        t = time.perf_counter()
        response = self.client.complete(prompt, {"stage": stage, "attempt": attempt})
        return Exchange(stage, attempt, prompt, response, seconds=time.perf_counter() - t)

    def _tool(self, state: PipelineState, stage: str, attempt: int, feedback: str, status: str) -> None:
        self._record(state, Exchange(stage, attempt, feedback=feedback, status=status))

    def _persist_final(self, state: PipelineState) -> None:
        if self.transcript_dir is None:
            return
        (self.transcript_dir / "final_program.bc").write_text(state.full_text, encoding="utf-8")
        (self.transcript_dir / "state.json").write_text(json.dumps(state.summary(), sort_keys=True, indent=1) + "\n", encoding="utf-8")
        if state.result is not None:
            (self.transcript_dir / "result.txt").write_text(format_output(state.result), encoding="utf-8")

    # -- stage 1

    def generate_signature(self, state: PipelineState) -> PipelineState:
        state.stage = "signature"
        note = ""
        last_error: Optional[Exception] = None
        for attempt in range(1, self.pcfg.stage_retries + 1):
            prompt = self.templates.render("signature", problem=state.problem_text, retry_note=note)
            ex = self._ask(state, "signature", attempt, prompt)
            try:
                block = last_fenced_block(ex.response)
            except MissingFencedBlock as e:
                ex.status = "missing-block"
                self._record(state, ex)
                last_error = e
                note = "\nYour previous answer had no block in triple backticks.\n"
                continue
            reading, sig_text = _split_signature_block(block)
            problems = signature_problems(sig_text)
            if problems:
                ex.status = "invalid"
                ex.feedback = "\n".join(problems)
                self._record(state, ex)
                last_error = StageFailed("signature: " + "; ".join(problems))
                note = "\nYour previous signature was rejected:\n" + "\n".join(problems) + "\n"
                continue
            ex.status = "ok"
            self._record(state, ex)
            state.analysis = ex.response[: ex.response.rfind("```", 0, ex.response.rfind("```"))].strip()
            state.constants_reading = reading
            state.signature_text = sig_text
            state.signature, _ = parse_program(SourceProgram(sig_text, "<signature>"))
            return state
        assert last_error is not None
        raise last_error

    # -- stage 2

    def generate_knowledge(self, state: PipelineState) -> PipelineState:
        state.stage = "knowledge"
        prompt = self.templates.render("knowledge", problem=state.problem_text, hint=state.constants_reading)
        ex = self._ask(state, "knowledge", 1, prompt)
        try:
            block = last_fenced_block(ex.response)
        except MissingFencedBlock:
            ex.status = "missing-block"
            self._record(state, ex)
            raise
        items = []
        for line in block.splitlines():
            line = re.sub(r"^\s*(?:[-*•]|\d+[.)])\s*", "", line).strip()
            if line:
                items.append(line)
        state.knowledge = items
        if not items:
            state.warnings.append("knowledge: the answer listed no statements")
        ex.status = "ok" if items else "empty"
        self._record(state, ex)
        return state

    # -- stage 3

    def generate_rules_and_query(self, state: PipelineState) -> PipelineState:
        state.stage = "rules"
        prompt = self.templates.render(
            "rules",
            problem=state.problem_text,
            hint=state.constants_reading,
            signature=state.signature_text,
            knowledge="\n".join(f"{i}. {k}" for i, k in enumerate(state.knowledge, 1)),
            query_text=state.query_text,
        )
        ex = self._ask(state, "rules", 1, prompt)
        try:
            block = strip_numbering(last_fenced_block(ex.response))
        except MissingFencedBlock:
            ex.status = "missing-block"
            self._record(state, ex)
            raise
        _, laws, queries = split_program_text(block)
        state.rules_text = laws
        state.main_query_text = queries[0] if queries else ""
        if len(queries) > 1:
            state.warnings.append(f"rules: {len(queries)} queries given, the first is the main query")
        ex.status = self._assemble(state)
        self._record(state, ex)
        return state

    def _assemble(self, state: PipelineState) -> str:
        """Parse the current texts into the state's program; a status word."""
        prog, diags = parse_program(SourceProgram(state.full_text, "<program>"))
        if prog is not None:
            state.program = prog
            state.main_query = prog.queries[0] if prog.queries else None
            state.incomplete = False
            return "ok"
        # keep whatever parses, statement by statement
        keep = [st for st in split_statements(state.full_text) if parse_program(SourceProgram(st))[0] is not None]
        state.program, _ = parse_program(SourceProgram("\n\n".join(keep), "<program>"))
        state.main_query = state.program.queries[0] if state.program and state.program.queries else None
        state.incomplete = True
        state.warnings.append(f"{state.stage}: program text has syntax errors; kept {len(keep)} parseable statements")
        return "incomplete"

    # -- self-revision

    def satisfiability_loop(self, state: PipelineState) -> PipelineState:
        state.stage = "satisfiability"
        attempt = 0
        while True:
            attempt += 1
            check = check_source(state.full_text, "<program>", self.cfg.query)
            feedback = _check_feedback(check)
            ok = check.verdict == SAT
            self._tool(state, "satisfiability-check", attempt, feedback, "satisfiable" if ok else "failed")
            if ok:
                self._assemble(state)
                return state
            if state.sat_budget <= 0:
                state.status = BUDGET_EXHAUSTED
                return state
            prompt = self.templates.render(
                "satisfiability",
                problem=state.problem_text,
                program=state.program_text,
                query_text=state.query_text,
                main_query=state.main_query_text,
                feedback=feedback,
            )
            ex = self._ask(state, "satisfiability", attempt, prompt)
            try:
                block = strip_numbering(last_fenced_block(ex.response))
            except MissingFencedBlock:
                ex.status = "missing-block"
                self._record(state, ex)
                state.sat_budget -= 1
                state.sat_revisions += 1
                continue
            sig, laws, queries = split_program_text(block)
            if sig:
                state.signature_text = sig
            state.rules_text = laws
            if queries:
                state.main_query_text = queries[0]
            ex.status = self._assemble(state)
            self._record(state, ex)
            state.sat_budget -= 1
            state.sat_revisions += 1

    def generate_sample_queries(self, state: PipelineState) -> PipelineState:
        state.stage = "sample-queries"
        prompt = self.templates.render(
            "sample_queries",
            problem=state.problem_text,
            program=state.program_text,
            query_text=state.query_text,
            main_query=state.main_query_text,
        )
        ex = self._ask(state, "sample-queries", 1, prompt)
        try:
            block = last_fenced_block(ex.response)
        except MissingFencedBlock:
            ex.status = "missing-block"
            self._record(state, ex)
            raise
        self._read_sample_queries(state, block)
        ex.status = f"{len(state.sample_queries)} queries"
        self._record(state, ex)
        return state

    def _read_sample_queries(self, state: PipelineState, block: str) -> None:
        texts = [st for st in split_statements(block) if _kind(st) == "query"]
        cap = self.pcfg.max_sample_queries
        if len(texts) > cap:
            state.warnings.append(f"sample-queries: {len(texts)} queries given, keeping the first {cap}")
            texts = texts[:cap]
        qs, kept = [], []
        for text in texts:
            q, diags = parse_query(SourceProgram(_strip_comments(text)))
            if q is None:
                state.warnings.append("sample-queries: dropped a query with syntax errors: " + "; ".join(str(d) for d in diags))
                continue
            expected = annotation_of(text)
            if expected is None:
                state.warnings.append("sample-queries: a query has no (satisfiable)/(unsatisfiable) annotation")
            qs.append(SampleQueryExpectation(q, expected, text))
            kept.append(text)
        state.sample_queries, state.sample_texts = qs, kept

    def _run_main(self, state: PipelineState) -> PlanResult:
        if state.program is None or state.main_query is None:
            return PlanResult(ERROR, 0, diagnostics=["no main query"])
        try:
            return run_query(state.program, state.main_query, self.cfg.query)
        except BCError as e:
            return PlanResult(ERROR, 0, diagnostics=[str(e)])

    def feedback_loop(self, state: PipelineState) -> PipelineState:
        state.stage = "feedback"
        iteration = 0
        while True:
            iteration += 1
            sample_fb = self._sample_feedback(state)
            main = self._run_main(state)
            main_fb = f"{state.main_query_text}\n\nReasoner output:\n\n{format_output(main)}"
            self._tool(state, "feedback-run", iteration, sample_fb + "\n\n=== main query ===\n\n" + main_fb, main.verdict)
            state.feedback_iterations = iteration
            if state.feedback_budget <= 0:
                return state
            prompt = self.templates.render(
                "feedback",
                problem=state.problem_text,
                program=state.program_text,
                sample_feedback=sample_fb or "(no test queries)",
                query_text=state.query_text,
                main_feedback=main_fb,
            )
            ex = self._ask(state, "feedback", iteration, prompt)
            try:
                block = last_fenced_block(ex.response)
            except MissingFencedBlock:
                ex.status = "missing-block"
                self._record(state, ex)
                state.warnings.append("feedback: answer without a block read as all [UNCHANGED]")
                return state
            segments = parse_segments(block)
            for name in SEGMENTS:
                seg = segments.get(name)
                if seg is None or not seg.marked:
                    state.warnings.append(f"feedback: segment {name} not marked, read as [UNCHANGED]")
            changed = [s for s in segments.values() if s.changed]
            if not changed:
                ex.status = "unchanged"
                self._record(state, ex)
                return state
            for seg in changed:
                if seg.name == "PROGRAM":
                    sig, laws, _ = split_program_text(strip_numbering(seg.body))
                    if sig:
                        state.signature_text = sig
                    state.rules_text = laws
                elif seg.name == "MAIN QUERY":
                    queries = split_program_text(seg.body)[2]
                    if queries:
                        state.main_query_text = queries[0]
                else:
                    self._read_sample_queries(state, seg.body)
            ex.status = "changed: " + ", ".join(s.name for s in changed)
            self._assemble(state)
            self._record(state, ex)
            state.feedback_budget -= 1

    def _sample_feedback(self, state: PipelineState) -> str:
        if not state.sample_queries or state.program is None:
            return ""
        parts = []
        for exp, (res, matched) in zip(state.sample_queries, run_sample_queries(state.program, state.sample_queries, self.cfg.query)):
            tag = {True: "as expected", False: "NOT as expected", None: "no expectation"}[matched]
            parts.append(f"{exp.text}\n\nReasoner output ({tag}):\n\n{format_output(res)}")
        return "\n\n".join(parts)

    def sample_results(self, state: PipelineState) -> list:
        """(PlanResult, matched) for each sample query on the current program."""
        if state.program is None:
            return []
        return run_sample_queries(state.program, state.sample_queries, self.cfg.query)

    # -- finish

    def finalize(self, state: PipelineState) -> PipelineState:
        self._assemble(state)
        self._human_review(state)
        state.result = self._run_main(state)
        if state.status == "running":
            state.status = OK
        return state

    def _human_review(self, state: PipelineState) -> None:
        if self.pcfg.review_file:
            Path(self.pcfg.review_file).write_text(state.full_text, encoding="utf-8")
        if self.pcfg.corrected_file and Path(self.pcfg.corrected_file).exists():
            text = Path(self.pcfg.corrected_file).read_text(encoding="utf-8")
            if text != state.full_text:
                sig, laws, queries = split_program_text(text)
                state.signature_text, state.rules_text = sig, laws
                if queries:
                    state.main_query_text = queries[0]
                state.manual_corrections += 1
                self._tool(state, "human-correction", state.manual_corrections, text, "applied")
                self._assemble(state)

    def run(self, problem_text: str) -> PipelineState:
        state = PipelineState(
            problem_text.strip(),
            query_text=problem_query(problem_text),
            sat_budget=self.pcfg.sat_budget,
            feedback_budget=self.pcfg.feedback_budget,
        )
        try:
            self.generate_signature(state)
            self.generate_knowledge(state)
            self.generate_rules_and_query(state)
            self.satisfiability_loop(state)
            if state.status == "running":
                self.generate_sample_queries(state)
                self.feedback_loop(state)
        except Cancelled:
            state.status = CANCELLED
        except (BCError, ClientError) as e:
            state.status = f"failed at {state.stage}: {e}"
        if state.status != CANCELLED and state.program_text:
            self.finalize(state)
        self._persist_final(state)
        return state


def run_pipeline(problem_text: str, client: CompletionClient, cfg: Optional[Config] = None) -> PipelineState:
    """Run every stage; the final plan is ``state.result``."""
    return Pipeline(client, cfg).run(problem_text)


# ----------------------------------------------------------------- helpers


def _split_signature_block(block: str) -> tuple[str, str]:
    """(constants reading, signature) of a signature-stage answer."""
    m = re.search(r"^\s*BC\+?\s*Signature\s*:?\s*$", block, re.M | re.I)
    if m:
        return block[: m.start()].strip(), block[m.end():].strip("\n")
    m = re.search(r"^\s*:-", block, re.M)
    if m:
        return block[: m.start()].strip(), block[m.start():].strip("\n")
    return block.strip(), ""


def signature_problems(text: str) -> list[str]:
    """Reasons a signature text is unusable; empty when it is fine."""
    problems = []
    for section in ("sorts", "objects", "variables", "constants"):
        if not re.search(rf"^\s*:-\s*{section}\b", text, re.M):
            problems.append(f"the signature has no ':- {section}' section")
    prog, diags = parse_program(SourceProgram(text, "<signature>"))
    problems.extend(str(d) for d in diags if d.severity == "error")
    if prog is not None:
        problems.extend(str(d) for d in errors_only(validate_program(prog, "<signature>")))
    return problems


def _check_feedback(r: PlanResult) -> str:
    lines = list(r.diagnostics)
    if r.verdict == ERROR:
        return "\n".join(lines) if lines else "error"
    return "\n".join(lines + [format_output(r).rstrip("\n")])
