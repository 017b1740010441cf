from __future__ import annotations

import json

import pytest

from bcplus.ast import Query
from bcplus.errors import ValidationFailure
from bcplus.normalize import ground
from bcplus.oracle import Oracle, validate_plan
from bcplus.parser import load_program, parse_query
from bcplus.query import (
    ERROR,
    SAT,
    UNSAT,
    PlanResult,
    QueryConfig,
    SampleQueryExpectation,
    check_source,
    format_output,
    full_valuation,
    parse_output,
    run_query,
    run_sample_queries,
    satisfiability_check,
)

from conftest import fixture_text, load


@pytest.fixture(scope="module")
def mcp_result(mcp_program):
    return run_query(mcp_program)


def test_mcp_main_query_is_eleven_steps(mcp_result):
    assert mcp_result.verdict == SAT
    assert mcp_result.horizon == 11
    assert len(mcp_result.steps) == 12 and len(mcp_result.transitions) == 11


def test_mcp_plan_replays(mcp_result, mcp_ground):
    states, actions = full_valuation(mcp_ground, mcp_result)
    assert validate_plan(mcp_ground, states, actions) is True


def test_plan_starts_and_ends_where_the_query_says(mcp_result):
    first, last = mcp_result.steps[0], mcp_result.steps[-1]
    assert first["numOnBank(bank1, missionaries)"] == 3 and first["loc(boat)"] == "bank1"
    assert last["numOnBank(bank2, missionaries)"] == 3 and last["numOnBank(bank2, cannibals)"] == 3


def test_attributes_follow_their_action(mcp_result):
    for trans in mcp_result.transitions:
        keys = list(trans)
        assert keys[0] == "cross(boat)"
        assert all(k.startswith("numCrossing(boat") for k in keys[1:])


def test_output_text_layout(mcp_result):
    text = format_output(mcp_result)
    lines = text.splitlines()
    assert lines[:3] == ["Solving...", "Solution: 1", "\t"]
    assert "\t0:  loc(boat)=bank1 " in text
    assert "\tACTIONS:  cross(boat) numCrossing(boat, cannibals)=" in text
    assert lines[-2] == "SATISFIABLE"
    assert lines[-1].startswith("Models       : 1")


def test_output_round_trip(mcp_result):
    back = parse_output(format_output(mcp_result))
    assert back.verdict == SAT and back.horizon == 11
    assert back.steps == mcp_result.steps
    assert back.transitions == mcp_result.transitions


def test_record_round_trip(mcp_result):
    again = PlanResult.from_record(json.loads(mcp_result.to_json()))
    assert again.steps == mcp_result.steps and again.transitions == mcp_result.transitions
    assert again.verdict == mcp_result.verdict and again.models == mcp_result.models


def test_unsat_output_and_note():
    r = run_query(load("elaborations/e03_four_each.bc"), cfg=QueryConfig(max_horizon=8))
    assert r.verdict == UNSAT and r.horizon == 8
    assert r.note == "UNSATISFIABLE up to horizon 8"
    assert format_output(r) == "Solving...\nUNSATISFIABLE\nModels       : 0\nNo solution.\n"


def test_fixed_maxstep_uses_only_that_horizon(mcp_program):
    q, _ = parse_query(
        "maxstep :: 5; 0: numOnBank(bank1, missionaries) = 3 & numOnBank(bank1, cannibals) = 3 & "
        "numOnBank(bank2, missionaries) = 0 & numOnBank(bank2, cannibals) = 0 & loc(boat) = bank1; "
        "maxstep: numOnBank(bank2, missionaries) = 3 & numOnBank(bank2, cannibals) = 3."
    )
    r = run_query(mcp_program, q)
    assert r.verdict == UNSAT and r.horizon == 5
    assert len(r.stats["solves"]) == 1
    assert r.note == "UNSATISFIABLE at horizon 5"


def test_horizon_search_starts_at_largest_explicit_step(mcp_program):
    q, _ = parse_query(
        "0: loc(boat) = bank1 & numOnBank(bank1, missionaries) = 3 & numOnBank(bank1, cannibals) = 3 & "
        "numOnBank(bank2, missionaries) = 0 & numOnBank(bank2, cannibals) = 0; 2: loc(boat) = bank1."
    )
    r = run_query(mcp_program, q)
    assert r.verdict == SAT and r.horizon == 2
    assert [s["horizon"] for s in r.stats["solves"]] == [2]


def test_run_query_rejects_invalid_programs():
    with pytest.raises(ValidationFailure):
        run_query(load("mcp/mcp_initial.bc"))


def test_satisfiability_check_reports_additive_head():
    r = satisfiability_check(load("mcp/mcp_initial.bc"))
    assert r.verdict == ERROR
    assert any("must be an additive constant" in d for d in r.diagnostics)
    assert format_output(r).rstrip().endswith("ERROR")


def test_satisfiability_check_ignores_queries():
    r = satisfiability_check(load("mcp/mcp_revised.bc"))
    assert r.verdict == SAT and r.horizon == 0 and not r.transitions


def test_check_source_reports_syntax_errors():
    r = check_source("impossible (.", "<t>")
    assert r.verdict == ERROR and r.diagnostics and r.diagnostics[0].startswith("<t>:")


def test_check_source_keeps_warnings():
    r = check_source(fixture_text("mcp/mcp_revised.bc"))
    assert r.verdict == SAT and any("warning" in d for d in r.diagnostics)


def test_contradictory_program_is_unsat():
    text = fixture_text("mcp/mcp.bc").split(":- query")[0] + "\nimpossible loc(boat) = bank1.\nimpossible loc(boat) = bank2.\n"
    r = satisfiability_check(load_program(text))
    assert r.verdict == UNSAT


def _samples():
    blocks = fixture_text("mcp/mcp_sample_queries.bc").strip().split("\n\n")
    expected = ["satisfiable", "unsatisfiable", "satisfiable", "unsatisfiable", "unsatisfiable"]
    return [SampleQueryExpectation(parse_query(b)[0], e, b) for b, e in zip(blocks, expected)]


def test_sample_queries_match_expectations(mcp_program):
    results = run_sample_queries(mcp_program, _samples())
    assert [r.verdict for r, _ in results] == [SAT, UNSAT, SAT, UNSAT, UNSAT]
    assert all(m is True for _, m in results)


def test_unannotated_sample_query_is_not_matched(mcp_program):
    s = _samples()[0]
    ((r, matched),) = run_sample_queries(mcp_program, [SampleQueryExpectation(s.query, None, s.text)])
    assert r.verdict == SAT and matched is None


def test_wrong_expectation_is_reported(mcp_program):
    s = _samples()[0]
    ((_, matched),) = run_sample_queries(mcp_program, [SampleQueryExpectation(s.query, "unsatisfiable", s.text)])
    assert matched is False


def test_models_reports_uniqueness():
    # two vessels would give many plans; the 11-step MCP plan is not unique either
    r = run_query(load("mcp/mcp.bc"))
    assert r.models in ("1", "1+")
    one = run_query(load("sudoku/sudoku1.bc"))
    assert one.verdict == SAT and one.horizon == 0 and one.models == "1"


def test_empty_query_is_a_state_search(mcp_program):
    r = run_query(mcp_program.without_queries(), Query(None, 0, ()))
    assert r.verdict == SAT and r.horizon == 0
    o = Oracle(ground(mcp_program))
    states, _ = full_valuation(ground(mcp_program), r)
    assert o.static_violation(o.state_of(states[0])) is None
