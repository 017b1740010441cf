from __future__ import annotations

import pytest

from bcplus.ast import FALSE_F, TRUE_F, And, Bool, Not
from bcplus.errors import AdditiveHeadMisuse, GroundingBudgetExceeded, ImpossibleContainsAction
from bcplus.normalize import (
    ADDITIVE_HEAD_MESSAGE,
    Signature,
    errors_only,
    expand_shorthand,
    ground,
    ground_query,
    render_normal,
    validate_program,
)
from bcplus.parser import load_program

from conftest import load

# --------------------------------------------------------------- shorthand

SIG = """
:- sorts
    vessel; location; group; integer.
:- objects
    boat, raft :: vessel;
    bank1, bank2 :: location;
    missionaries, cannibals :: group;
    0..4 :: integer.
:- variables
    V :: vessel; L :: location; G :: group; N, N1, N2 :: integer.
:- constants
    cross(vessel) :: exogenousAction;
    wait(vessel) :: exogenousAction;
    numCrossing(vessel, group) :: attribute(integer) of cross(vessel);
    loc(vessel) :: inertialFluent(location);
    docked(vessel) :: inertialFluent;
    count(location, group) :: additiveFluent(integer).
"""


def expand_one(law_text: str) -> list:
    p = load_program(SIG + law_text)
    sig = Signature(p)
    return [n for law in p.laws for n in expand_shorthand(law, sig)]


def rendered(law_text: str) -> list[str]:
    return [render_normal(n) for n in expand_one(law_text)]


# "a causes F if H" is "F if true after a & H"
CAUSES = [
    ("cross(V) causes loc(V) = bank2 if loc(V) = bank1.", "loc(V) = bank2 if true after cross(V) & loc(V) = bank1"),
    ("cross(boat) causes docked(boat).", "docked(boat) if true after cross(boat) & true"),
    ("wait(V) causes ~docked(V) if loc(V) = L.", "~docked(V) if true after wait(V) & loc(V) = L"),
    ("cross(V) & wait(V) causes docked(V).", "docked(V) if true after cross(V) & wait(V) & true"),
]

# "impossible F" is "false if F"
IMPOSSIBLE = [
    ("impossible loc(V) = bank1 & docked(V).", "false if loc(V) = bank1 & docked(V)"),
    ("impossible N < 0 & N = count(L, G).", "false if N < 0 & N = count(L, G)"),
    ("impossible ~docked(boat).", "false if ~docked(boat)"),
]

# "nonexecutable a_1 & ... & a_k if G" is "false if true after a_1 & ... & a_k & G"
NONEXECUTABLE = [
    ("nonexecutable cross(V) if docked(V).", "false if true after cross(V) & docked(V)"),
    ("nonexecutable cross(V) & wait(V).", "false if true after cross(V) & wait(V) & true"),
    (
        "nonexecutable cross(V) if N > 2 & N = numCrossing(V, G).",
        "false if true after cross(V) & (N > 2 & N = numCrossing(V, G))",
    ),
]

# "always F" is "false if true after ~F"
ALWAYS = [
    ("always cross(V) -> docked(V).", "false if true after ~(cross(V) -> docked(V))"),
    ("always ~wait(boat).", "false if true after ~~wait(boat)"),
    (
        "always (N = numCrossing(V, G)) -> N <= 2.",
        "false if true after ~(N = numCrossing(V, G) -> N <= 2)",
    ),
]


@pytest.mark.parametrize("law, expected", CAUSES + IMPOSSIBLE + NONEXECUTABLE + ALWAYS)
def test_shorthand_golden(law, expected):
    assert rendered(law) == [expected]


@pytest.mark.parametrize("law, _", CAUSES)
def test_causes_expands_to_fluent_dynamic(law, _):
    (n,) = expand_one(law)
    assert n.kind == "fluentDynamic" and n.cond == TRUE_F and isinstance(n.after, And)


@pytest.mark.parametrize("law, _", IMPOSSIBLE)
def test_impossible_is_a_static_constraint(law, _):
    (n,) = expand_one(law)
    assert n.kind == "static" and n.head == FALSE_F


@pytest.mark.parametrize("law, _", NONEXECUTABLE + ALWAYS)
def test_transition_constraints(law, _):
    (n,) = expand_one(law)
    assert n.kind == "fluentDynamic" and n.head == FALSE_F and n.cond == TRUE_F


def test_always_negates_its_formula():
    (n,) = expand_one("always docked(boat).")
    assert isinstance(n.after, Not)


def test_causes_equals_explicit_basic_form():
    short = expand_one("cross(V) causes loc(V) = bank2 if loc(V) = bank1.")
    basic = expand_one("loc(V) = bank2 if true after cross(V) & loc(V) = bank1.")
    assert short == basic


def test_basic_law_classification():
    kinds = [n.kind for n in expand_one("docked(V) if loc(V) = bank1.\nwait(V) if cross(V).\ndocked(V) after wait(V).")]
    assert kinds == ["static", "actionDynamic", "fluentDynamic"]


def test_increment_becomes_additive_marker():
    (n,) = expand_one("cross(V) decrements count(L, G) by N if numCrossing(V, G) = N & loc(V) = L.")
    assert n.kind == "additive"
    assert render_normal(n) == "cross(V) adds -N to count(L, G) if numCrossing(V, G) = N & loc(V) = L"


def test_default_marker():
    (n,) = expand_one("default docked(V).")
    assert n.kind == "default" and n.after is None


def test_increment_on_inertial_fluent_is_rejected():
    p = load_program(SIG + "cross(V) increments loc(V) by 1.")
    with pytest.raises(AdditiveHeadMisuse):
        expand_shorthand(p.laws[0], Signature(p))


def test_causes_on_additive_fluent_is_rejected():
    p = load_program(SIG + "cross(V) causes count(L, G) = 1.")
    with pytest.raises(AdditiveHeadMisuse):
        expand_shorthand(p.laws[0], Signature(p))


def test_impossible_with_action_is_rejected():
    p = load_program(SIG + "impossible cross(V) & docked(V).")
    with pytest.raises(ImpossibleContainsAction):
        expand_shorthand(p.laws[0], Signature(p))


def test_expansion_is_idempotent_on_fixture_laws(mcp_program):
    sig = Signature(mcp_program)
    for law in mcp_program.laws:
        once = expand_shorthand(law, sig)
        twice = [m for n in once for m in expand_shorthand(n, sig)]
        assert once == twice


# ------------------------------------------------------------- validation

TEACH = """
:- sorts
    car; truck; airplane; location; nationality; block; object; item; integer.
:- objects
    c1 :: car; t1 :: truck; p1 :: airplane; l1, l2 :: location; us :: nationality;
    b1 :: block; o1 :: object; coin :: item; 0..20 :: integer.
:- variables
    C :: car; T :: truck; P :: airplane; L :: location; Nat :: nationality;
    B :: block; O :: object; N, N1, N2, N3 :: integer.
"""

# (incorrect, corrected) pairs following the teaching material's labelled examples
PAIRS = {
    "attribute prefix": (
        """:- constants
    fly(airplane, location) :: exogenousAction;
    passengers(nationality) :: attribute(integer) of fly(airplane, location).""",
        """:- constants
    fly(airplane, location) :: exogenousAction;
    onBoard(airplane, location, nationality) :: attribute(integer) of fly(airplane, location).""",
    ),
    "zero-argument attribute parent": (
        """:- constants
    move :: exogenousAction;
    destination :: attribute(location) of move.""",
        """:- constants
    move(block) :: exogenousAction;
    destination(block) :: attribute(location) of move(block).""",
    ),
    "nested constant": (
        """:- constants
    move(car) :: exogenousAction;
    loc(car) :: inertialFluent(location);
    roadBlock(location) :: inertialFluent.
nonexecutable move(C) if roadBlock(loc(C)).""",
        """:- constants
    move(car) :: exogenousAction;
    loc(car) :: inertialFluent(location);
    roadBlock(location) :: inertialFluent.
nonexecutable move(C) if roadBlock(L) & L = loc(C).""",
    ),
    "attribute arithmetic": (
        """:- constants
    drive(truck) :: exogenousAction;
    weight(truck, location) :: attribute(integer) of drive(truck);
    capacity(truck) :: inertialFluent(integer).
nonexecutable drive(T) if weight(T, l1) + weight(T, l2) > capacity(T).""",
        """:- constants
    drive(truck) :: exogenousAction;
    weight(truck, location) :: attribute(integer) of drive(truck);
    capacity(truck) :: inertialFluent(integer).
nonexecutable drive(T) if N1 + N2 > N3 & weight(T, l1) = N1 & weight(T, l2) = N2 & capacity(T) = N3.""",
    ),
    "unquantified always": (
        """:- constants
    load(truck) :: exogenousAction;
    weightOf(object) :: inertialFluent(integer);
    capacity(truck) :: inertialFluent(integer).
always weightOf(o1) = N1 & capacity(t1) = N2 & N1 < N2.""",
        """:- constants
    load(truck) :: exogenousAction;
    weightOf(object) :: inertialFluent(integer);
    capacity(truck) :: inertialFluent(integer).
always (weightOf(o1) = N1 & capacity(t1) = N2) -> N1 < N2.""",
    ),
}


@pytest.mark.parametrize("name", sorted(PAIRS))
def test_validator_flags_incorrect_form(name):
    bad, _ = PAIRS[name]
    assert len(validate_program(load_program(TEACH + bad))) >= 1


@pytest.mark.parametrize("name", sorted(PAIRS))
def test_validator_accepts_corrected_form(name):
    _, good = PAIRS[name]
    assert validate_program(load_program(TEACH + good)) == []


def test_additive_head_message_matches_first_generated_program():
    p = load("mcp/mcp_initial.bc")
    errs = errors_only(validate_program(p))
    assert errs and all(ADDITIVE_HEAD_MESSAGE in d.message for d in errs)
    assert "must be an additive constant" in ADDITIVE_HEAD_MESSAGE


def test_unknown_sort_in_declaration():
    p = load_program(":- sorts s.\n:- objects a :: s.\n:- constants c(nosuch) :: inertialFluent.")
    assert any("nosuch" in d.message for d in errors_only(validate_program(p)))


def test_undeclared_constant_in_law():
    p = load_program(SIG + "cross(V) causes nowhere(V).")
    assert errors_only(validate_program(p))


def test_fixtures_validate_cleanly():
    for rel in ("mcp/mcp.bc", "river/river.bc", "hanoi/hanoi3.bc", "sudoku/sudoku1.bc", "blocks/blocks.bc"):
        assert errors_only(validate_program(load(rel))) == [], rel


# --------------------------------------------------------------- grounding


def test_ground_constants_of_mcp(mcp_ground):
    names = sorted(str(c) for c in mcp_ground.constants)
    assert "cross(boat)" in names and "numCrossing(boat, cannibals)" in names
    assert len([c for c in mcp_ground.constants if c.kind == "inertialFluent"]) == 1
    assert len([c for c in mcp_ground.constants if c.kind == "additiveFluent"]) == 4


def test_attribute_domain_has_none_sentinel(mcp_ground):
    from bcplus.normalize import NONE

    attr = next(c for c in mcp_ground.constants if c.kind == "attribute")
    assert NONE in attr.domain and 0 in attr.domain
    parent = mcp_ground.constants[attr.parent]
    assert str(parent) == "cross(boat)"


def test_ground_query_items(mcp_program, mcp_ground):
    gq = ground_query(mcp_ground, mcp_program.query(None))
    assert [s for s, _ in gq.items] == [0, "maxstep"]


def test_grounding_cap():
    with pytest.raises(GroundingBudgetExceeded):
        ground(load("mcp/mcp.bc"), cap=10)


def test_bool_literals_survive():
    assert Bool(True) == TRUE_F
