"""Validation, shorthand expansion and grounding.

The ground program is the shared input of the satisfiability encoder and
the brute-force oracle.  Ground formulas only contain value atoms
``c=v`` tagged with a time slot (0 for the current state/transition, 1 for
the successor state); every comparison is expanded into atoms here, so the
downstream consumers never evaluate arithmetic themselves.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .ast import (
    BOOLEAN,
    FALSE,
    FALSE_F,
    MAXSTEP,
    TRUE,
    TRUE_F,
    Always,
    And,
    BasicLaw,
    BinOp,
    Bool,
    Causes,
    Cmp,
    ConstantDecl,
    Default,
    Formula,
    Implies,
    Impossible,
    Increment,
    Int,
    Law,
    Lit,
    Nonexecutable,
    Not,
    Or,
    Program,
    Query,
    Sym,
    Term,
    UnOp,
    Value,
    Var,
    arith,
    conjuncts,
    expand_object,
    format_value,
    formula_terms,
    formula_vars,
    sort_domain,
    subterms,
)
from .errors import (
    AdditiveHeadMisuse,
    CyclicSortHierarchy,
    Diagnostic,
    DomainEmpty,
    GroundingBudgetExceeded,
    ImpossibleContainsAction,
    UnknownSort,
    ValidationFailure,
)
from .parser import render_formula, render_law, render_term

NONE = "__none__"  # rest value of an attribute whose action does not occur
ADDITIVE_HEAD_MESSAGE = (
    'The head of an additive law (G in "F decrements G") must be an additive constant '
    "(additiveFluent or additiveAction)"
)
DEFAULT_GROUNDING_CAP = 2_000_000
COMPARISON_EXPANSION_CAP = 100_000


# ------------------------------------------------------------ signature


class Signature:
    """Resolved view of a program's declarations."""

    def __init__(self, program: Program):
        self.program = program
        self.sort_names = {s.name for s in program.sorts} | {BOOLEAN}
        self.constants: dict[str, ConstantDecl] = {}
        for c in program.constants:
            self.constants.setdefault(c.name, c)
        self.variables: dict[str, str] = {}
        for v in program.variables:
            self.variables.setdefault(v.name, v.sort)
        self.object_names: set[str] = set()
        self.constructor_names: set[str] = set()
        for o in program.objects:
            v = o.value
            if isinstance(v, Sym):
                (self.constructor_names if v.args else self.object_names).add(v.name)
        self._domains: dict[str, list[Value]] = {}

    def domain(self, sort: str) -> list[Value]:
        if sort not in self._domains:
            self._domains[sort] = sort_domain(self.program.sorts, self.program.objects, sort)
        return self._domains[sort]

    def domain_set(self, sort: str) -> frozenset:
        key = "#set:" + sort
        if key not in self._domains:
            self._domains[key] = frozenset(self.domain(sort))  # type: ignore[assignment]
        return self._domains[key]  # type: ignore[return-value]

    def int_objects(self) -> frozenset:
        out = set()
        for o in self.program.objects:
            try:
                for v in expand_object(o, self.program.sorts, self.program.objects):
                    if isinstance(v, int):
                        out.add(v)
            except (UnknownSort, CyclicSortHierarchy):
                pass
        return frozenset(out)

    def is_constant(self, t: Term) -> bool:
        return isinstance(t, Sym) and t.name in self.constants

    def kind(self, name: str) -> Optional[str]:
        c = self.constants.get(name)
        return c.kind if c else None

    def constants_in(self, f: Optional[Formula]) -> list[Sym]:
        out = []
        for t in formula_terms(f):
            for s in subterms(t):
                if isinstance(s, Sym) and s.name in self.constants:
                    out.append(s)
        return out

    def has_action(self, f: Optional[Formula]) -> bool:
        return any(self.constants[s.name].is_action for s in self.constants_in(f))

    def has_fluent(self, f: Optional[Formula]) -> bool:
        return any(self.constants[s.name].is_fluent for s in self.constants_in(f))

    def value_sort_is_integer(self, c: ConstantDecl) -> bool:
        if c.value_sort == BOOLEAN:
            return False
        try:
            dom = self.domain(c.value_sort)
        except (UnknownSort, CyclicSortHierarchy):
            return False
        return bool(dom) and all(isinstance(v, int) for v in dom)


# -------------------------------------------------------------- heads


@dataclass(frozen=True)
class HeadAtom:
    constant: Sym
    value: Term  # Sym("true") / Sym("false") for boolean heads


def head_atom(f: Formula, sig: Signature) -> Union[HeadAtom, None, str]:
    """The single atom a law head asserts, None for ``false``, or an error string."""
    if f == FALSE_F:
        return None
    if isinstance(f, Lit) and sig.is_constant(f.term):
        return HeadAtom(f.term, Sym(TRUE))
    if isinstance(f, Not) and isinstance(f.operand, Lit) and sig.is_constant(f.operand.term):
        return HeadAtom(f.operand.term, Sym(FALSE))
    if isinstance(f, Cmp) and f.op == "=":
        if sig.is_constant(f.left) and not sig.constants_in(Lit(f.right)):
            return HeadAtom(f.left, f.right)
        if sig.is_constant(f.right) and not sig.constants_in(Lit(f.left)):
            return HeadAtom(f.right, f.left)
    return f"law head must be a single atom 'c=v' or 'false', found '{render_formula(f)}'"


# -------------------------------------------------------------- validation


class _Validator:
    def __init__(self, program: Program, origin: str):
        self.p = program
        self.sig = Signature(program)
        self.origin = origin
        self.diags: list[Diagnostic] = []

    def err(self, msg: str, node=None, severity: str = "error") -> None:
        line = getattr(node, "line", 0) or 1
        col = getattr(node, "column", 0) or 1
        self.diags.append(Diagnostic(severity, msg, line, col, self.origin))

    def warn(self, msg: str, node=None) -> None:
        self.err(msg, node, "warning")

    def run(self) -> list[Diagnostic]:
        self.check_sorts()
        self.check_objects()
        self.check_variables()
        self.check_constants()
        for law in self.p.laws:
            self.check_law(law)
        for q in self.p.queries:
            self.check_query(q)
        return list(dict.fromkeys(self.diags))

    # -- declarations

    def check_sorts(self) -> None:
        for s in self.p.sorts:
            for sup in s.supersorts:
                if sup not in self.sig.sort_names:
                    self.err(f"undeclared supersort '{sup}' of sort '{s.name}'", s)
        try:
            for s in self.p.sorts:
                self.sig.domain(s.name)
        except CyclicSortHierarchy as e:
            self.err(f"cyclic sort hierarchy: {e}")
        except UnknownSort:
            pass

    def check_objects(self) -> None:
        for o in self.p.objects:
            if o.sort not in self.sig.sort_names or o.sort == BOOLEAN:
                self.err(f"object declared for undeclared sort '{o.sort}'", o)
            v = o.value
            if isinstance(v, Sym):
                for a in v.args:
                    if isinstance(a, Sym) and a.name not in self.sig.sort_names:
                        self.err(f"undeclared sort '{a.name}' in constructor object '{v.name}'", o)

    def check_variables(self) -> None:
        seen: set[str] = set()
        for v in self.p.variables:
            if v.name in seen:
                self.err(f"variable '{v.name}' declared more than once", v)
            seen.add(v.name)
            if v.sort not in self.sig.sort_names:
                self.err(f"variable '{v.name}' has undeclared sort '{v.sort}'", v)

    def check_constants(self) -> None:
        seen: set[str] = set()
        for c in self.p.constants:
            if c.name in seen:
                self.err(f"constant '{c.name}' declared more than once", c)
            seen.add(c.name)
            for s in c.arg_sorts:
                if s not in self.sig.sort_names:
                    self.err(f"constant '{c.name}' has undeclared argument sort '{s}'", c)
            if c.value_sort not in self.sig.sort_names:
                self.err(f"constant '{c.name}' has undeclared value sort '{c.value_sort}'", c)
            if c.kind not in ("inertialFluent", "additiveFluent", "exogenousAction", "attribute", "additiveAction"):
                self.err(
                    f"unsupported constant kind '{c.kind}' for '{c.name}' (use inertialFluent, additiveFluent, "
                    "exogenousAction, attribute or additiveAction)",
                    c,
                )
            if c.is_additive and c.value_sort in self.sig.sort_names and not self.sig.value_sort_is_integer(c):
                self.err(f"additive constant '{c.name}' needs an integer value sort", c)
            if c.kind == "attribute":
                self.check_attribute(c)

    def check_attribute(self, c: ConstantDecl) -> None:
        parent = self.sig.constants.get(c.parent or "")
        if parent is None:
            self.err(f"attribute '{c.name}' refers to undeclared action '{c.parent}'", c)
            return
        if parent.kind != "exogenousAction":
            self.err(f"attribute '{c.name}' must be an attribute of an exogenous action, not of '{parent.name}'", c)
        if not parent.arg_sorts or not c.parent_arg_sorts:
            self.err(
                f"attribute '{c.name}' belongs to action '{parent.name}' which has no arguments; "
                "the action of an attribute must have at least one argument",
                c,
            )
            return
        if tuple(c.parent_arg_sorts) != tuple(parent.arg_sorts):
            self.err(
                f"attribute '{c.name}' names {parent.name}({', '.join(c.parent_arg_sorts)}) but the action is "
                f"declared as {parent.name}({', '.join(parent.arg_sorts)})",
                c,
            )
        n = len(parent.arg_sorts)
        if tuple(c.arg_sorts[:n]) != tuple(parent.arg_sorts):
            self.err(
                f"attribute '{c.name}' must take the arguments of '{parent.name}' first, in order: expected "
                f"{c.name}({', '.join(parent.arg_sorts + ('...',))})",
                c,
            )

    # -- formulas

    def check_terms(self, f: Optional[Formula], node) -> None:
        if f is None:
            return
        for top in formula_terms(f):
            self.check_term(top, node, top_level=True)
        for name in _nested(self.sig, f):
            self.err(
                f"nested constant: {name}; a constant cannot appear as an argument of another constant, "
                "set it to a variable instead",
                node,
            )
        for sub in _arith_constants(self.sig, f):
            self.err(
                f"'{render_term(sub)}' is used as an arithmetic operand; attributes and additive actions must be "
                "set to variables and the variables used as operands",
                node,
            )
        self.check_comparisons(f, node)

    def check_term(self, t: Term, node, top_level: bool) -> None:
        if isinstance(t, Var):
            if t.name not in self.sig.variables:
                self.err(f"undeclared variable '{t.name}'", node)
            return
        if isinstance(t, Int):
            return
        if isinstance(t, (BinOp, UnOp)):
            for s in (t.left, t.right) if isinstance(t, BinOp) else (t.operand,):
                self.check_term(s, node, False)
            return
        if isinstance(t, Sym):
            c = self.sig.constants.get(t.name)
            if c is not None:
                if len(t.args) != len(c.arg_sorts):
                    self.err(f"constant '{t.name}' expects {len(c.arg_sorts)} argument(s), got {len(t.args)}", node)
                else:
                    for a, s in zip(t.args, c.arg_sorts):
                        self.check_arg(a, s, t, node)
                for a in t.args:
                    self.check_term(a, node, False)
                return
            if t.args:
                if t.name not in self.sig.constructor_names:
                    self.err(f"undeclared constant '{t.name}'", node)
                for a in t.args:
                    self.check_term(a, node, False)
                return
            if t.name in (TRUE, FALSE) or t.name in self.sig.object_names:
                return
            self.err(f"undeclared identifier '{t.name}'", node)

    def check_arg(self, a: Term, sort: str, const: Sym, node) -> None:
        if sort not in self.sig.sort_names:
            return
        try:
            dom = self.sig.domain_set(sort)
        except (UnknownSort, CyclicSortHierarchy):
            return
        if isinstance(a, Var) and a.name in self.sig.variables:
            vs = self.sig.variables[a.name]
            try:
                vdom = self.sig.domain_set(vs)
            except (UnknownSort, CyclicSortHierarchy):
                return
            if not vdom <= dom:
                self.warn(f"variable '{a.name}' of sort '{vs}' is not within sort '{sort}' of {const.name}", node)
        elif isinstance(a, Sym) and not a.args and a.name in self.sig.object_names and a.name not in dom:
            self.err(f"object '{a.name}' is not of sort '{sort}' expected by {const.name}", node)
        elif isinstance(a, Int) and a.value not in dom:
            self.err(f"integer {a.value} is not of sort '{sort}' expected by {const.name}", node)

    def check_comparisons(self, f: Formula, node) -> None:
        for cmp in _comparisons(f):
            if cmp.op in ("=", "\\="):
                continue
            for side in (cmp.left, cmp.right):
                if self.sig.is_constant(side):
                    c = self.sig.constants[side.name]
                    if not self.sig.value_sort_is_integer(c):
                        self.err(f"'{cmp.op}' applied to non-integer constant '{side.name}'", node)

    def check_head(self, head: Formula, node, *, fluent: Optional[bool], allow_false: bool = True) -> Optional[HeadAtom]:
        h = head_atom(head, self.sig)
        if isinstance(h, str):
            self.err(h, node)
            return None
        if h is None:
            if not allow_false:
                self.err("a default law needs an atom as its head", node)
            return None
        c = self.sig.constants[h.constant.name]
        if c.is_additive:
            self.err(
                f"additive constant '{c.name}' can only be changed by increment or decrement laws", node
            )
        if fluent is True and not c.is_fluent:
            self.err(f"the head of this law must be a fluent, but '{c.name}' is an action", node)
        if fluent is False and not c.is_action:
            self.err(f"the head of this law must be an action, but '{c.name}' is a fluent", node)
        return h

    def check_head_vars(self, head_terms: Sequence[Formula], body: Sequence[Optional[Formula]], node) -> None:
        hv = []
        for h in head_terms:
            hv.extend(formula_vars(h))
        bv = set()
        for b in body:
            bv.update(formula_vars(b))
        only = [v for v in dict.fromkeys(hv) if v not in bv]
        if only:
            self.err(
                f"variable(s) {', '.join(only)} occur only in the head of the law; every head variable must "
                "also occur in the body",
                node,
            )

    def actions_only(self, f: Formula, node, what: str) -> None:
        for s in self.sig.constants_in(f):
            if not self.sig.constants[s.name].is_action:
                self.err(f"{what} must mention only actions, but '{s.name}' is a fluent", node)

    def check_law(self, law: Law) -> None:
        sig = self.sig
        for f in _law_parts(law):
            self.check_terms(f, law)
        if isinstance(law, Impossible):
            acts = [s.name for s in sig.constants_in(law.formula) if sig.constants[s.name].is_action]
            if acts:
                self.err(
                    f"'impossible F' cannot contain action constants or attributes (found {', '.join(sorted(set(acts)))})",
                    law,
                )
        elif isinstance(law, Nonexecutable):
            if not sig.has_action(law.actions):
                self.err("nonexecutable needs at least one action before 'if'", law)
            self.actions_only(law.actions, law, "the first part of a nonexecutable law")
        elif isinstance(law, Always):
            self.check_always(law)
        elif isinstance(law, Causes):
            if not sig.has_action(law.action):
                self.err("'causes' must be preceded by an action", law)
            self.actions_only(law.action, law, "the part before 'causes'")
            self.check_head(law.head, law, fluent=True)
            self.check_head_vars([law.head], [law.action, law.cond], law)
        elif isinstance(law, Increment):
            self.check_increment(law)
        elif isinstance(law, (BasicLaw, Default)):
            is_default = isinstance(law, Default)
            h = head_atom(law.head, sig)
            if law.after is not None:
                self.check_head(law.head, law, fluent=True, allow_false=not is_default)
                if sig.has_action(law.cond):
                    self.err("the 'if' part of a fluent dynamic law cannot mention actions; move them after 'after'", law)
            else:
                head_is_action = isinstance(h, HeadAtom) and sig.constants[h.constant.name].is_action
                self.check_head(law.head, law, fluent=None, allow_false=not is_default)
                if not head_is_action and h is not None and sig.has_action(law.cond):
                    self.err("a static law cannot mention actions; use 'after' for a dynamic law", law)
            if not is_default and not (law.cond == TRUE_F and law.after is None):
                self.check_head_vars([law.head], [law.cond, law.after], law)

    def check_increment(self, law: Increment) -> None:
        sig = self.sig
        c = law.constant
        decl = sig.constants.get(c.name) if isinstance(c, Sym) else None
        if decl is None or not decl.is_additive:
            self.err(ADDITIVE_HEAD_MESSAGE, law)
        if not sig.has_action(law.action):
            self.err("increment and decrement laws must be triggered by an action", law)
        self.actions_only(law.action, law, "the trigger of an increment law")
        if sig.constants_in(Lit(law.amount)):
            self.err("the amount of an increment law must be an integer or a variable, not a constant", law)
        self.check_head_vars([Lit(law.constant), Cmp("=", law.amount, law.amount)], [law.action, law.cond], law)

    def check_always(self, law: Always) -> None:
        f = law.formula
        if isinstance(f, Implies):
            return
        bound = []
        for part in conjuncts(f):
            if isinstance(part, Cmp) and part.op == "=":
                if self.sig.is_constant(part.left) and isinstance(part.right, Var):
                    bound.append(part.right.name)
                elif self.sig.is_constant(part.right) and isinstance(part.left, Var):
                    bound.append(part.left.name)
        if bound:
            self.warn(
                f"variables {', '.join(dict.fromkeys(bound))} in 'always' are quantified over every value; "
                "set them in the antecedent of an implication: always (c = N & ...) -> ...",
                law,
            )

    def check_query(self, q: Query) -> None:
        for _, f in q.items:
            self.check_terms(f, q)


def _law_parts(law: Law) -> list[Formula]:
    if isinstance(law, (BasicLaw, Default)):
        return [f for f in (law.head, law.cond, law.after) if f is not None]
    if isinstance(law, Causes):
        return [law.action, law.head, law.cond]
    if isinstance(law, (Impossible, Always)):
        return [law.formula]
    if isinstance(law, Nonexecutable):
        return [law.actions, law.cond]
    if isinstance(law, Increment):
        return [law.action, Lit(law.constant), Cmp("=", law.amount, Int(0)), law.cond]
    raise TypeError(law)


def _nested(sig: Signature, f: Formula) -> list[str]:
    out = []
    for t in formula_terms(f):
        for s in subterms(t):
            if isinstance(s, Sym) and s.name in sig.constants:
                for a in s.args:
                    for inner in subterms(a):
                        if isinstance(inner, Sym) and inner.name in sig.constants:
                            out.append(f"'{render_term(inner)}' inside '{render_term(s)}'")
    return out


def _arith_constants(sig: Signature, f: Formula) -> list[Term]:
    out = []
    for t in formula_terms(f):
        for s in subterms(t):
            if isinstance(s, (BinOp, UnOp)):
                operands = (s.left, s.right) if isinstance(s, BinOp) else (s.operand,)
                for o in operands:
                    if isinstance(o, Sym) and sig.kind(o.name) in ("attribute", "additiveAction"):
                        out.append(o)
    return out


def _comparisons(f: Optional[Formula]) -> list[Cmp]:
    if f is None or isinstance(f, (Bool, Lit)):
        return []
    if isinstance(f, Cmp):
        return [f]
    if isinstance(f, Not):
        return _comparisons(f.operand)
    return _comparisons(f.left) + _comparisons(f.right)


def validate_program(p: Program, origin: str = "<input>") -> list[Diagnostic]:
    """All static problems of a parsed program, as diagnostics (never raises)."""
    return _Validator(p, origin).run()


def errors_only(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity == "error"]


# ------------------------------------------------------------ expansion


@dataclass(frozen=True)
class NormalLaw:
    """A basic law or an encoder marker.

    kind is one of ``static``, ``actionDynamic``, ``fluentDynamic`` (basic
    laws, ``head`` is an atom or ``false``), ``default`` (defeasible cause of
    ``head``; ``after`` set for the dynamic variant) or ``additive``
    (``action`` contributes signed ``amount`` to ``constant`` when ``cond``).
    """

    kind: str
    head: Formula = FALSE_F
    cond: Formula = TRUE_F
    after: Optional[Formula] = None
    action: Optional[Formula] = None
    constant: Optional[Term] = None
    amount: Optional[Term] = None
    source: Optional[Law] = field(default=None, compare=False)


def render_normal(n: NormalLaw) -> str:
    r = render_formula
    if n.kind in ("static", "actionDynamic"):
        return f"{r(n.head)} if {r(n.cond)}"
    if n.kind == "fluentDynamic":
        return f"{r(n.head)} if {r(n.cond)} after {r(n.after)}"
    if n.kind == "default":
        after = "" if n.after is None else f" after {r(n.after)}"
        return f"default {r(n.head)} if {r(n.cond)}{after}"
    if n.kind == "additive":
        return f"{r(n.action)} adds {render_term(n.amount)} to {render_term(n.constant)} if {r(n.cond)}"
    raise ValueError(n.kind)


def _head_is_action(head: Formula, sig: Optional[Signature]) -> bool:
    if sig is None:
        return False
    h = head_atom(head, sig)
    return isinstance(h, HeadAtom) and sig.constants[h.constant.name].is_action


def expand_shorthand(law: Union[Law, NormalLaw], sig: Optional[Signature] = None) -> list[NormalLaw]:
    """Rewrite one causal law into basic laws or encoder markers.

    Raises AdditiveHeadMisuse or ImpossibleContainsAction for the two
    errors that make an expansion meaningless; everything else is left to
    the validator.
    """
    if isinstance(law, NormalLaw):
        return [law]
    if isinstance(law, Causes):
        _no_additive_head(law.head, sig)
        return [NormalLaw("fluentDynamic", law.head, TRUE_F, And(law.action, law.cond), source=law)]
    if isinstance(law, Impossible):
        if sig is not None and sig.has_action(law.formula):
            raise ImpossibleContainsAction(render_law(law))
        return [NormalLaw("static", FALSE_F, law.formula, source=law)]
    if isinstance(law, Nonexecutable):
        return [NormalLaw("fluentDynamic", FALSE_F, TRUE_F, And(law.actions, law.cond), source=law)]
    if isinstance(law, Always):
        return [NormalLaw("fluentDynamic", FALSE_F, TRUE_F, Not(law.formula), source=law)]
    if isinstance(law, Default):
        _no_additive_head(law.head, sig)
        return [NormalLaw("default", law.head, law.cond, law.after, source=law)]
    if isinstance(law, Increment):
        if sig is not None:
            c = law.constant
            decl = sig.constants.get(c.name) if isinstance(c, Sym) else None
            if decl is None or not decl.is_additive:
                raise AdditiveHeadMisuse(ADDITIVE_HEAD_MESSAGE)
        amount = UnOp("-", law.amount) if law.negative else law.amount
        return [NormalLaw("additive", TRUE_F, law.cond, None, law.action, law.constant, amount, source=law)]
    if isinstance(law, BasicLaw):
        _no_additive_head(law.head, sig)
        if law.after is not None:
            return [NormalLaw("fluentDynamic", law.head, law.cond, law.after, source=law)]
        if _head_is_action(law.head, sig) or (
            law.head == FALSE_F and sig is not None and sig.has_action(law.cond)
        ):
            return [NormalLaw("actionDynamic", law.head, law.cond, source=law)]
        return [NormalLaw("static", law.head, law.cond, source=law)]
    raise TypeError(law)


def _no_additive_head(head: Formula, sig: Optional[Signature]) -> None:
    if sig is None:
        return
    h = head_atom(head, sig)
    if isinstance(h, HeadAtom) and sig.constants[h.constant.name].is_additive:
        raise AdditiveHeadMisuse(
            f"additive constant '{h.constant.name}' can only be changed by increment or decrement laws"
        )


# ------------------------------------------------------ ground formulas


@dataclass(frozen=True)
class GAtom:
    inst: int
    value: Value
    slot: int = 0


@dataclass(frozen=True)
class GNot:
    operand: "GFormula"


@dataclass(frozen=True)
class GAnd:
    items: tuple


@dataclass(frozen=True)
class GOr:
    items: tuple


@dataclass(frozen=True)
class GConst:
    value: bool


GTRUE = GConst(True)
GFALSE = GConst(False)
GFormula = Union[GAtom, GNot, GAnd, GOr, GConst]


def g_not(f: GFormula) -> GFormula:
    if isinstance(f, GConst):
        return GFALSE if f.value else GTRUE
    if isinstance(f, GNot):
        return f.operand
    return GNot(f)


def g_and(items: Iterable[GFormula]) -> GFormula:
    out: list = []
    for f in items:
        if f is GFALSE or f == GFALSE:
            return GFALSE
        if f == GTRUE:
            continue
        if isinstance(f, GAnd):
            out.extend(f.items)
        else:
            out.append(f)
    out = list(dict.fromkeys(out))
    if not out:
        return GTRUE
    if len(out) == 1:
        return out[0]
    return GAnd(tuple(out))


def g_or(items: Iterable[GFormula]) -> GFormula:
    out: list = []
    for f in items:
        if f == GTRUE:
            return GTRUE
        if f == GFALSE:
            continue
        if isinstance(f, GOr):
            out.extend(f.items)
        else:
            out.append(f)
    out = list(dict.fromkeys(out))
    if not out:
        return GFALSE
    if len(out) == 1:
        return out[0]
    return GOr(tuple(out))


def g_atoms(f: GFormula) -> Iterable[GAtom]:
    if isinstance(f, GAtom):
        yield f
    elif isinstance(f, GNot):
        yield from g_atoms(f.operand)
    elif isinstance(f, (GAnd, GOr)):
        for x in f.items:
            yield from g_atoms(x)


# -------------------------------------------------------- ground program


@dataclass(frozen=True)
class GroundConstant:
    index: int
    name: str
    args: tuple
    kind: str
    domain: tuple  # value order; attributes end with NONE
    parent: Optional[int] = None

    @property
    def is_action(self) -> bool:
        return self.kind in ("exogenousAction", "attribute", "additiveAction")

    @property
    def is_boolean(self) -> bool:
        return self.domain == (FALSE, TRUE)

    def __str__(self) -> str:
        return format_value(self.name, self.args)


@dataclass(frozen=True)
class GroundLaw:
    """One instance of a basic law or default.

    ``head`` is ``(instance, value)`` or None for ``false``; atoms in
    ``body`` carry slots (static laws use slot 0 only; fluent dynamic laws
    put the head condition in slot 1 and the ``after`` part in slot 0).
    """

    kind: str  # static | actionDynamic | fluentDynamic
    head: Optional[tuple]
    body: GFormula
    default: bool
    source: int  # index into GroundProgram.normal_laws
    env: tuple  # variable bindings, for messages


@dataclass(frozen=True)
class Contribution:
    target: int
    fire: GFormula  # action and condition, slot 0
    amount: int
    source: int
    env: tuple


@dataclass
class GroundProgram:
    signature: Signature
    constants: list[GroundConstant]
    index: dict
    laws: list[GroundLaw]
    contributions: list[Contribution]
    normal_laws: list[NormalLaw]
    int_objects: frozenset
    instance_count: int = 0

    @property
    def fluents(self) -> list[GroundConstant]:
        return [c for c in self.constants if not c.is_action]

    @property
    def actions(self) -> list[GroundConstant]:
        return [c for c in self.constants if c.is_action]

    def lookup(self, name: str, args: tuple = ()) -> GroundConstant:
        return self.constants[self.index[(name, tuple(args))]]

    def describe(self, law: Union[GroundLaw, Contribution]) -> str:
        n = self.normal_laws[law.source]
        text = render_law(n.source) if n.source is not None else render_normal(n)
        if law.env:
            text += " with " + ", ".join(f"{k}={v}" for k, v in law.env)
        return text

    def dump(self) -> str:
        """Line-oriented text of the ground program, for diffing."""
        lines = []
        for c in self.constants:
            dom = ",".join("none" if v == NONE else str(v) for v in c.domain)
            lines.append(f"constant {c} :: {c.kind} {{{dom}}}")
        for law in self.laws:
            head = "false" if law.head is None else f"{self.constants[law.head[0]]}={law.head[1]}"
            tag = "default " if law.default else ""
            lines.append(f"{tag}{law.kind}: {head} <- {self.format_g(law.body)}")
        for c in self.contributions:
            lines.append(f"additive: {self.constants[c.target]} += {c.amount} <- {self.format_g(c.fire)}")
        return "\n".join(lines) + "\n"

    def format_g(self, f: GFormula) -> str:
        if isinstance(f, GConst):
            return "true" if f.value else "false"
        if isinstance(f, GAtom):
            v = "none" if f.value == NONE else f.value
            return f"{self.constants[f.inst]}@{f.slot}={v}"
        if isinstance(f, GNot):
            return f"~{self.format_g(f.operand)}"
        sep = " & " if isinstance(f, GAnd) else " | "
        return "(" + sep.join(self.format_g(x) for x in f.items) + ")"


# --------------------------------------------------------------- grounding


class _Env(dict):
    pass


class Grounder:
    def __init__(self, program: Program, cap: int = DEFAULT_GROUNDING_CAP):
        self.program = program
        self.sig = Signature(program)
        self.cap = cap
        self.count = 0
        self.int_objects = self.sig.int_objects()
        self.constants: list[GroundConstant] = []
        self.index: dict = {}
        self._build_constants()

    # -- constant instances

    def _build_constants(self) -> None:
        sig = self.sig
        for decl in self.program.constants:
            if decl.kind == "attribute":
                continue
            self._instances(decl)
        # attributes after all actions so parents are indexed
        for decl in self.program.constants:
            if decl.kind == "attribute":
                self._instances(decl)
        del sig

    def _instances(self, decl: ConstantDecl) -> None:
        domains = [self.sig.domain(s) for s in decl.arg_sorts]
        values = tuple(self.sig.domain(decl.value_sort))
        if decl.kind == "attribute":
            values = values + (NONE,)
        parent_decl = self.sig.constants.get(decl.parent) if decl.parent else None
        for args in itertools.product(*domains):
            parent = None
            if parent_decl is not None:
                parent = self.index.get((parent_decl.name, tuple(args[: len(parent_decl.arg_sorts)])))
            gc = GroundConstant(len(self.constants), decl.name, tuple(args), decl.kind, values, parent)
            self.index[(decl.name, tuple(args))] = gc.index
            self.constants.append(gc)

    # -- terms

    def _term(self, t: Term, env: dict):
        """Partially evaluate a term.

        Returns ("v", value, compound) for ground values, ("c", inst) for a
        constant instance, ("x", node) for arithmetic over constants, or
        ("bad",) when the term denotes nothing (e.g. an undeclared instance).
        """
        if isinstance(t, Int):
            return ("v", t.value, False)
        if isinstance(t, Var):
            return ("v", env[t.name], False)
        if isinstance(t, Sym):
            args = []
            for a in t.args:
                r = self._term(a, env)
                if r[0] != "v":
                    return ("bad",)
                args.append(r[1])
            if t.name in self.sig.constants:
                inst = self.index.get((t.name, tuple(args)))
                return ("bad",) if inst is None else ("c", inst)
            return ("v", format_value(t.name, args), False)
        if isinstance(t, UnOp):
            r = self._term(t.operand, env)
            if r[0] == "bad":
                return r
            if r[0] == "v":
                if not isinstance(r[1], int):
                    return ("bad",)
                # a negated literal is still a literal
                literal = isinstance(t.operand, Int) and t.op == "-"
                return ("v", -r[1] if t.op == "-" else abs(r[1]), not literal)
            return ("x", ("un", t.op, r))
        if isinstance(t, BinOp):
            a = self._term(t.left, env)
            b = self._term(t.right, env)
            if a[0] == "bad" or b[0] == "bad":
                return ("bad",)
            if a[0] == "v" and b[0] == "v":
                if not isinstance(a[1], int) or not isinstance(b[1], int):
                    return ("bad",)
                return ("v", arith(t.op, a[1], b[1]), True)
            return ("x", ("bin", t.op, a, b))
        raise TypeError(t)

    def _consts_of(self, r) -> list[int]:
        if r[0] == "c":
            return [r[1]]
        if r[0] == "x":
            node = r[1]
            if node[0] == "un":
                return self._consts_of(node[2])
            return self._consts_of(node[2]) + self._consts_of(node[3])
        return []

    def _eval(self, r, vals: dict):
        """Value of a partially evaluated term under constant values; (value, compound)."""
        if r[0] == "v":
            return r[1], r[2]
        if r[0] == "c":
            return vals[r[1]], False
        node = r[1]
        if node[0] == "un":
            v, _ = self._eval(node[2], vals)
            if not isinstance(v, int):
                return None, True
            return (-v if node[1] == "-" else abs(v)), True
        a, _ = self._eval(node[2], vals)
        b, _ = self._eval(node[3], vals)
        if not isinstance(a, int) or not isinstance(b, int):
            return None, True
        return arith(node[1], a, b), True

    def _holds(self, op: str, a, b) -> bool:
        """Comparison under the grounding conventions.

        Arithmetic results outside the declared integer objects (or
        undefined ones) make the comparison false; the rest value of an
        attribute never satisfies a comparison.
        """
        va, ca = a
        vb, cb = b
        if va is None or vb is None or va == NONE or vb == NONE:
            return False
        if ca and va not in self.int_objects:
            return False
        if cb and vb not in self.int_objects:
            return False
        if op == "=":
            return va == vb
        if op == "\\=":
            return va != vb
        if not isinstance(va, int) or not isinstance(vb, int):
            return False
        if op == "<":
            return va < vb
        if op == ">":
            return va > vb
        if op == "<=":
            return va <= vb
        return va >= vb

    def _value_set(self, inst: int, values: set, slot: int) -> GFormula:
        dom = self.constants[inst].domain
        pos = [v for v in dom if v in values]
        neg = [v for v in dom if v not in values]
        if not pos:
            return GFALSE
        if not neg:
            return GTRUE
        if len(pos) <= len(neg):
            return g_or(GAtom(inst, v, slot) for v in pos)
        return g_not(g_or(GAtom(inst, v, slot) for v in neg))

    # -- formulas

    def formula(self, f: Formula, env: dict, slot_of) -> GFormula:
        """Ground ``f`` under ``env``; ``slot_of(inst)`` gives each atom's time slot."""
        if isinstance(f, Bool):
            return GTRUE if f.value else GFALSE
        if isinstance(f, Lit):
            return self._bool_atom(f.term, env, slot_of, TRUE)
        if isinstance(f, Not):
            if isinstance(f.operand, Lit):
                return self._bool_atom(f.operand.term, env, slot_of, FALSE)
            return g_not(self.formula(f.operand, env, slot_of))
        if isinstance(f, And):
            left = self.formula(f.left, env, slot_of)
            if left == GFALSE:
                return GFALSE
            return g_and((left, self.formula(f.right, env, slot_of)))
        if isinstance(f, Or):
            left = self.formula(f.left, env, slot_of)
            if left == GTRUE:
                return GTRUE
            return g_or((left, self.formula(f.right, env, slot_of)))
        if isinstance(f, Implies):
            left = self.formula(f.left, env, slot_of)
            if left == GFALSE:
                return GTRUE
            return g_or((g_not(left), self.formula(f.right, env, slot_of)))
        if isinstance(f, Cmp):
            return self._comparison(f, env, slot_of)
        raise TypeError(f)

    def _bool_atom(self, t: Term, env: dict, slot_of, value: str) -> GFormula:
        r = self._term(t, env)
        if r[0] == "c":
            inst = r[1]
            if value not in self.constants[inst].domain:
                return GFALSE
            return GAtom(inst, value, slot_of(inst))
        if r[0] == "v" and r[1] in (TRUE, FALSE):
            return GTRUE if r[1] == value else GFALSE
        return GFALSE

    def _comparison(self, f: Cmp, env: dict, slot_of) -> GFormula:
        a = self._term(f.left, env)
        b = self._term(f.right, env)
        if a[0] == "bad" or b[0] == "bad":
            return GFALSE
        if a[0] == "v" and b[0] == "v":
            return GTRUE if self._holds(f.op, a[1:], b[1:]) else GFALSE
        consts = list(dict.fromkeys(self._consts_of(a) + self._consts_of(b)))
        if len(consts) == 1:
            inst = consts[0]
            ok = set()
            for v in self.constants[inst].domain:
                vals = {inst: v}
                if self._holds(f.op, self._eval(a, vals), self._eval(b, vals)):
                    ok.add(v)
            return self._value_set(inst, ok, slot_of(inst))
        domains = [self.constants[i].domain for i in consts]
        size = 1
        for d in domains:
            size *= len(d)
        if size > COMPARISON_EXPANSION_CAP:
            raise GroundingBudgetExceeded(f"comparison '{render_formula(f)}' expands to {size} cases")
        cases_true, cases_false = [], []
        for combo in itertools.product(*domains):
            vals = dict(zip(consts, combo))
            (cases_true if self._holds(f.op, self._eval(a, vals), self._eval(b, vals)) else cases_false).append(combo)
        if not cases_true:
            return GFALSE
        if not cases_false:
            return GTRUE

        def case(combo):
            return g_and(GAtom(i, v, slot_of(i)) for i, v in zip(consts, combo))

        if len(cases_true) <= len(cases_false):
            return g_or(case(c) for c in cases_true)
        return g_not(g_or(case(c) for c in cases_false))

    # -- laws

    def _var_domain(self, name: str) -> list[Value]:
        sort = self.sig.variables[name]
        dom = self.sig.domain(sort)
        if not dom:
            raise DomainEmpty(f"variable {name} ranges over sort '{sort}' which has no objects")
        return dom

    def _has_constant(self, f: Formula) -> bool:
        return bool(self.sig.constants_in(f))

    def assignments(self, variables: list[str], static_parts: list[Formula]) -> Iterable[dict]:
        """Variable assignments in declaration-major order, pruning statically false conjuncts early."""
        domains = [self._var_domain(v) for v in variables]
        size = 1
        for d in domains:
            size *= len(d)
        self.count += size
        if self.count > self.cap:
            raise GroundingBudgetExceeded(f"more than {self.cap} ground law instances")
        checks: dict[int, list[Formula]] = {}
        for part in static_parts:
            vs = set(formula_vars(part))
            depth = max((variables.index(v) for v in vs if v in variables), default=-1)
            checks.setdefault(depth, []).append(part)
        env: dict = {}

        def ok(depth: int) -> bool:
            for part in checks.get(depth, ()):
                if self.formula(part, env, _slot0) == GFALSE:
                    return False
            return True

        if not ok(-1):
            return

        def rec(i: int):
            if i == len(variables):
                yield dict(env)
                return
            name = variables[i]
            for v in domains[i]:
                env[name] = v
                if ok(i):
                    yield from rec(i + 1)
            env.pop(name, None)

        yield from rec(0)

    def ground_law(self, n: NormalLaw, source: int) -> tuple[list[GroundLaw], list[Contribution]]:
        parts = [n.head, n.cond] + ([n.after] if n.after is not None else [])
        if n.kind == "additive":
            parts = [n.action, Lit(n.constant), Cmp("=", n.amount, Int(0)), n.cond]
        variables: list[str] = []
        for f in parts:
            for v in formula_vars(f):
                if v not in variables:
                    variables.append(v)
        body_parts = [n.cond] + ([n.after] if n.after is not None else [])
        if n.kind == "additive":
            body_parts = [n.action, n.cond]
        static = [c for b in body_parts for c in conjuncts(b) if not self._has_constant(c)]
        laws: list[GroundLaw] = []
        contribs: list[Contribution] = []
        sig = self.sig

        def slot_after(inst):
            return 0

        def slot_next(inst):
            return 1

        for env in self.assignments(variables, static):
            env_t = tuple((k, env[k]) for k in variables)
            if n.kind == "additive":
                fire = g_and((self.formula(n.action, env, _slot0), self.formula(n.cond, env, _slot0)))
                if fire == GFALSE:
                    continue
                target = self._term(n.constant, env)
                amount = self._term(n.amount, env)
                if target[0] != "c" or amount[0] != "v" or not isinstance(amount[1], int):
                    continue
                if amount[1] == 0:
                    continue
                contribs.append(Contribution(target[1], fire, amount[1], source, env_t))
                continue
            head = None
            if n.head != FALSE_F:
                h = head_atom(n.head, sig)
                if not isinstance(h, HeadAtom):
                    continue
                c = self._term(h.constant, env)
                v = self._term(h.value, env)
                if c[0] != "c" or v[0] != "v":
                    continue
                if v[1] not in self.constants[c[1]].domain or v[1] == NONE:
                    continue
                head = (c[1], v[1])
            if n.kind == "fluentDynamic":
                body = g_and((self.formula(n.after, env, slot_after), self.formula(n.cond, env, slot_next)))
            else:
                body = self.formula(n.cond, env, _slot0)
                if n.after is not None:  # dynamic default
                    body = g_and((self.formula(n.after, env, slot_after), self.formula(n.cond, env, slot_next)))
            if body == GFALSE:
                continue
            kind = n.kind
            if kind == "default":
                if n.after is not None:
                    kind = "fluentDynamic"
                elif head is not None and self.constants[head[0]].is_action:
                    kind = "actionDynamic"
                else:
                    kind = "static"
            laws.append(GroundLaw(kind, head, body, n.kind == "default", source, env_t))
        return laws, contribs

    def ground(self) -> GroundProgram:
        normal: list[NormalLaw] = []
        for law in self.program.laws:
            normal.extend(expand_shorthand(law, self.sig))
        laws: list[GroundLaw] = []
        contribs: list[Contribution] = []
        for i, n in enumerate(normal):
            ls, cs = self.ground_law(n, i)
            laws.extend(ls)
            contribs.extend(cs)
        return GroundProgram(
            self.sig, self.constants, self.index, laws, contribs, normal, self.int_objects, self.count
        )

    # -- queries

    def query_formula(self, f: Formula) -> GFormula:
        """Ground a query formula; free variables are read universally."""
        variables = list(dict.fromkeys(formula_vars(f)))
        parts = [self.formula(f, env, _slot0) for env in self.assignments(variables, [])]
        return g_and(parts)


def _slot0(inst) -> int:
    return 0


def ground(p: Program, cap: int = DEFAULT_GROUNDING_CAP, check: bool = True) -> GroundProgram:
    """Validate (unless told not to) and ground a program."""
    if check:
        errs = errors_only(validate_program(p))
        if errs:
            raise ValidationFailure(errs)
    return Grounder(p, cap).ground()


@dataclass(frozen=True)
class GroundQuery:
    label: Optional[str]
    maxstep: Optional[int]
    items: tuple  # (step or MAXSTEP, GFormula)


def ground_query(g: GroundProgram, q: Query) -> GroundQuery:
    gr = Grounder.__new__(Grounder)
    gr.program = g.signature.program
    gr.sig = g.signature
    gr.cap = DEFAULT_GROUNDING_CAP
    gr.count = 0
    gr.int_objects = g.int_objects
    gr.constants = g.constants
    gr.index = g.index
    items = tuple((step, gr.query_formula(f)) for step, f in q.items)
    return GroundQuery(q.label, q.maxstep, items)


__all__ = [
    "ADDITIVE_HEAD_MESSAGE",
    "MAXSTEP",
    "NONE",
    "Contribution",
    "GAnd",
    "GAtom",
    "GConst",
    "GFALSE",
    "GNot",
    "GOr",
    "GTRUE",
    "GroundConstant",
    "GroundLaw",
    "GroundProgram",
    "GroundQuery",
    "NormalLaw",
    "Signature",
    "errors_only",
    "expand_shorthand",
    "ground",
    "ground_query",
    "render_normal",
    "validate_program",
]
