"""Property tests over randomly generated formulas, laws, sort hierarchies and plans."""

from __future__ import annotations

import itertools

from hypothesis import given, settings
from hypothesis import strategies as st

from bcplus.ast import (
    FALSE,
    TRUE,
    And,
    BasicLaw,
    Bool,
    Cmp,
    Implies,
    Int,
    Lit,
    Not,
    ObjectDecl,
    Or,
    SortDecl,
    Sym,
    eval_formula,
    sort_domain,
)
from bcplus.normalize import GAnd, GAtom, GConst, GNot, GOr, NormalLaw, Signature, expand_shorthand, g_and, g_not, g_or
from bcplus.parser import load_program, parse_program, render_law
from bcplus.query import SAT, PlanResult, format_output, parse_output

HEADER = """
:- sorts
    integer.
:- objects
    0..4 :: integer.
:- constants
    p :: inertialFluent;
    q :: inertialFluent;
    r :: inertialFluent;
    x :: inertialFluent(integer);
    a :: exogenousAction.
"""

BOOLS = ["p", "q", "r"]

atoms = st.one_of(
    st.sampled_from(BOOLS).map(lambda n: Lit(Sym(n))),
    st.builds(lambda op, v: Cmp(op, Sym("x"), Int(v)), st.sampled_from(["=", "\\=", "<", ">=", "<="]), st.integers(0, 4)),
)


def _compound(children):
    return st.one_of(
        children.map(Not),
        st.builds(And, children, children),
        st.builds(Or, children, children),
        st.builds(Implies, children, children),
    )


formulas = st.recursive(atoms, _compound, max_leaves=8)
valuations = st.fixed_dictionaries(
    {**{(n, ()): st.sampled_from([TRUE, FALSE]) for n in BOOLS}, ("x", ()): st.integers(0, 4)}
)


@given(formulas, formulas, valuations)
def test_de_morgan(f, g, v):
    assert eval_formula(Not(And(f, g)), v) == eval_formula(Or(Not(f), Not(g)), v)
    assert eval_formula(Not(Or(f, g)), v) == eval_formula(And(Not(f), Not(g)), v)


@given(formulas, valuations)
def test_double_negation_and_implication(f, v):
    assert eval_formula(Not(Not(f)), v) == eval_formula(f, v)
    assert eval_formula(Implies(f, Bool(False)), v) == (not eval_formula(f, v))


# ------------------------------------------------------------ ground formulas
# built only through the simplifying constructors, as the grounder does


def g_eval(f, val):
    if isinstance(f, GConst):
        return f.value
    if isinstance(f, GAtom):
        return val[f.inst] == f.value
    if isinstance(f, GNot):
        return not g_eval(f.operand, val)
    if isinstance(f, GAnd):
        return all(g_eval(i, val) for i in f.items)
    if isinstance(f, GOr):
        return any(g_eval(i, val) for i in f.items)
    raise TypeError(f)


g_atoms = st.one_of(
    st.builds(GAtom, st.integers(0, 3), st.sampled_from([TRUE, FALSE])),
    st.sampled_from([GConst(True), GConst(False)]),
)
g_formulas = st.recursive(
    g_atoms,
    lambda c: st.one_of(
        c.map(g_not),
        st.lists(c, max_size=3).map(g_and),
        st.lists(c, max_size=3).map(g_or),
    ),
    max_leaves=8,
)
g_vals = st.lists(st.sampled_from([TRUE, FALSE]), min_size=4, max_size=4)


@given(st.lists(g_formulas, max_size=4), g_vals)
def test_simplifying_constructors_preserve_meaning(items, val):
    assert g_eval(g_and(items), val) == all(g_eval(i, val) for i in items)
    assert g_eval(g_or(items), val) == any(g_eval(i, val) for i in items)
    for f in items:
        assert g_eval(g_not(f), val) == (not g_eval(f, val))
        assert g_not(g_not(f)) == f


@given(st.lists(g_formulas, max_size=4))
def test_simplified_conjunction_is_idempotent(items):
    once = g_and(items)
    assert g_and([once]) == once
    assert g_and([once, once]) == once


# ------------------------------------------------------------------- laws

SIG = Signature(load_program(HEADER))
heads = st.one_of(
    st.sampled_from(BOOLS).map(lambda n: Lit(Sym(n))),
    st.sampled_from(BOOLS).map(lambda n: Not(Lit(Sym(n)))),
    st.integers(0, 4).map(lambda v: Cmp("=", Sym("x"), Int(v))),
    st.just(Bool(False)),
)
basic_laws = st.builds(
    lambda h, c, after: BasicLaw(h, c, after),
    heads,
    formulas,
    st.one_of(st.none(), formulas, st.just(Lit(Sym("a")))),
)


@settings(max_examples=100)
@given(basic_laws)
def test_expansion_is_idempotent(law):
    once = expand_shorthand(law, SIG)
    assert len(once) == 1 and isinstance(once[0], NormalLaw)
    assert [m for n in once for m in expand_shorthand(n, SIG)] == once
    n = once[0]
    assert n.head == law.head and n.cond == law.cond
    assert n.kind == ("static" if law.after is None else "fluentDynamic")


@settings(max_examples=100)
@given(basic_laws)
def test_law_render_parse_round_trip(law):
    p = load_program(HEADER + render_law(law) + "\n")
    (back,) = p.laws
    assert (back.head, back.cond, back.after) == (law.head, law.cond, law.after)
    assert render_law(back) == render_law(law)


@given(st.lists(st.sampled_from(list("abpqx01 .:-,;()=~&|<>%\n") + ["::", ":- ", " if ", " after ", " causes "]), max_size=40).map("".join))
def test_parse_never_raises(text):
    prog, diags = parse_program(text)
    assert prog is not None or diags


# ------------------------------------------------------------- sort domains


@st.composite
def hierarchies(draw):
    n = draw(st.integers(1, 5))
    names = [f"s{i}" for i in range(n)]
    # supersorts point only to earlier sorts, so the hierarchy is acyclic
    sorts = [SortDecl(nm, tuple(draw(st.sets(st.sampled_from(names[:i])))) if i else ()) for i, nm in enumerate(names)]
    objects = [ObjectDecl(Sym(f"o{j}"), draw(st.sampled_from(names))) for j in range(draw(st.integers(0, 8)))]
    return sorts, objects


@given(hierarchies())
def test_sort_domain_contains_subsort_domains(h):
    sorts, objects = h
    doms = {s.name: sort_domain(sorts, objects, s.name) for s in sorts}
    for s in sorts:
        d = doms[s.name]
        assert len(d) == len(set(d))
        assert {o.value.name for o in objects if o.sort == s.name} <= set(d)
        for sup in s.supersorts:
            assert set(d) <= set(doms[sup])


# ------------------------------------------------------------ plan output

atom_names = st.sampled_from(["loc(boat)", "num(bank1, 2)", "num(bank10, 2)", "on(d1, peg3)", "flag", "v(1, 9)"])
values = st.one_of(st.integers(-3, 40), st.sampled_from([TRUE, "bank1", "peg2"]))


@given(
    st.lists(st.dictionaries(atom_names, values, max_size=5), min_size=1, max_size=4),
    st.data(),
)
def test_output_round_trip(steps, data):
    trans = [data.draw(st.dictionaries(st.sampled_from(["cross(boat)", "move(d1, peg2)"]), values, max_size=2)) for _ in steps[1:]]
    r = PlanResult(SAT, len(steps) - 1, steps, trans, data.draw(st.sampled_from(["1", "1+"])))
    back = parse_output(format_output(r))
    assert back.verdict == SAT and back.horizon == r.horizon and back.models == r.models
    assert back.steps == steps
    assert back.transitions == trans


def test_output_round_trip_drops_false_only():
    r = PlanResult(SAT, 0, [{"flag": FALSE, "x": 3}], [], "1")
    assert parse_output(format_output(r)).steps == [{"x": 3}]


def test_exhaustive_small_de_morgan():
    # every valuation of the three booleans for a fixed pair
    f, g = Lit(Sym("p")), Or(Lit(Sym("q")), Not(Lit(Sym("r"))))
    for bits in itertools.product([TRUE, FALSE], repeat=3):
        v = {("p", ()): bits[0], ("q", ()): bits[1], ("r", ()): bits[2], ("x", ()): 0}
        assert eval_formula(Not(And(f, g)), v) == eval_formula(Or(Not(f), Not(g)), v)
