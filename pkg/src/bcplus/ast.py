"""Immutable data model for BC+ programs.

Terms and formulas are plain frozen dataclasses so they hash, compare
structurally and can be shared freely.  Source positions are carried on
declarations and laws but excluded from equality, which keeps the
parse/render round trip a structural comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import CyclicSortHierarchy, NonIntegerArithmetic, UnassignedConstant, UnknownSort

# Ground values are ints for integers and strings for every symbolic object,
# including the booleans "true"/"false".  Python bools are never used as
# values because True == 1 would collide with the integer 1 in mappings.
Value = Union[int, str]
TRUE = "true"
FALSE = "false"
BOOLEAN = "boolean"
BOOLEAN_DOMAIN: tuple[Value, ...] = (FALSE, TRUE)


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Sym:
    """Identifier with optional arguments: a constant, an object or a constructor term."""

    name: str
    args: tuple = ()


@dataclass(frozen=True)
class Int:
    value: int


@dataclass(frozen=True)
class BinOp:
    op: str  # "+", "-", "*", "//", "mod"
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class UnOp:
    op: str  # "-" or "abs"
    operand: "Term"


Term = Union[Var, Sym, Int, BinOp, UnOp]


# ------------------------------------------------------------- formulas


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Lit:
    """A bare term used as a formula; for boolean constants this reads c=true."""

    term: Term


@dataclass(frozen=True)
class Cmp:
    op: str  # "=", "\\=", "<", ">", "<=", ">="
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    operand: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


Formula = Union[Bool, Lit, Cmp, Not, And, Or, Implies]
TRUE_F = Bool(True)
FALSE_F = Bool(False)

COMPARISONS = ("=", "\\=", "<", ">", "<=", ">=")
ARITH_BINARY = ("+", "-", "*", "//", "mod")


def conj(items: Sequence[Formula]) -> Formula:
    """Left-nested conjunction; the empty conjunction is true."""
    items = [f for f in items if f != TRUE_F]
    if not items:
        return TRUE_F
    out = items[0]
    for f in items[1:]:
        out = And(out, f)
    return out


def conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]


# --------------------------------------------------------- declarations


def _pos() -> int:
    return field(default=0, compare=False)


@dataclass(frozen=True)
class SortDecl:
    name: str
    supersorts: tuple[str, ...] = ()
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Range:
    lo: int
    hi: int


@dataclass(frozen=True)
class ObjectDecl:
    value: Union[Sym, Int, Range]  # Sym with args = constructor over sort names
    sort: str
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class VariableDecl:
    name: str
    sort: str
    line: int = _pos()
    column: int = _pos()


CONSTANT_KINDS = ("inertialFluent", "additiveFluent", "exogenousAction", "attribute", "additiveAction")
FLUENT_KINDS = ("inertialFluent", "additiveFluent")
ACTION_KINDS = ("exogenousAction", "attribute", "additiveAction")
ADDITIVE_KINDS = ("additiveFluent", "additiveAction")


@dataclass(frozen=True)
class ConstantDecl:
    name: str
    arg_sorts: tuple[str, ...]
    kind: str
    value_sort: str = BOOLEAN
    parent: Optional[str] = None  # attribute parent action name
    parent_arg_sorts: tuple[str, ...] = ()
    line: int = _pos()
    column: int = _pos()

    @property
    def is_action(self) -> bool:
        return self.kind in ACTION_KINDS

    @property
    def is_fluent(self) -> bool:
        return self.kind in FLUENT_KINDS

    @property
    def is_additive(self) -> bool:
        return self.kind in ADDITIVE_KINDS


# ---------------------------------------------------------------- laws


@dataclass(frozen=True)
class BasicLaw:
    """``F if G`` or ``F if G after H``; static versus action dynamic is decided by the normalizer."""

    head: Formula
    cond: Formula = TRUE_F
    after: Optional[Formula] = None
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Causes:
    action: Formula
    head: Formula
    cond: Formula = TRUE_F
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Impossible:
    formula: Formula
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Nonexecutable:
    actions: Formula
    cond: Formula = TRUE_F
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Default:
    head: Formula
    cond: Formula = TRUE_F
    after: Optional[Formula] = None
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Always:
    formula: Formula
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Increment:
    action: Formula
    constant: Term
    amount: Term
    cond: Formula = TRUE_F
    negative: bool = False  # True for "decrements"
    line: int = _pos()
    column: int = _pos()


Law = Union[BasicLaw, Causes, Impossible, Nonexecutable, Default, Always, Increment]


# -------------------------------------------------------------- queries

MAXSTEP = "maxstep"


@dataclass(frozen=True)
class Query:
    label: Optional[str] = None
    maxstep: Optional[int] = None
    items: tuple[tuple[Union[int, str], Formula], ...] = ()
    line: int = _pos()
    column: int = _pos()


@dataclass(frozen=True)
class Program:
    sorts: tuple[SortDecl, ...] = ()
    objects: tuple[ObjectDecl, ...] = ()
    variables: tuple[VariableDecl, ...] = ()
    constants: tuple[ConstantDecl, ...] = ()
    laws: tuple[Law, ...] = ()
    queries: tuple[Query, ...] = ()

    def is_empty(self) -> bool:
        return not (self.sorts or self.objects or self.variables or self.constants or self.laws or self.queries)

    def constant(self, name: str) -> Optional[ConstantDecl]:
        for c in self.constants:
            if c.name == name:
                return c
        return None

    def query(self, label: Optional[str] = None) -> Optional[Query]:
        """Query by label, or the last query when no label is given."""
        if label is None:
            return self.queries[-1] if self.queries else None
        for q in self.queries:
            if q.label == label:
                return q
        return None

    def without_queries(self) -> "Program":
        return Program(self.sorts, self.objects, self.variables, self.constants, self.laws, ())

    def with_queries(self, queries: Iterable[Query]) -> "Program":
        return Program(self.sorts, self.objects, self.variables, self.constants, self.laws, tuple(queries))


# ---------------------------------------------------------- sort domains


def format_value(name: str, args: Sequence[Value]) -> str:
    if not args:
        return name
    return f"{name}({', '.join(str(a) for a in args)})"


def sort_domain(sorts: Sequence[SortDecl], objects: Sequence[ObjectDecl], sort: str) -> list[Value]:
    """All objects of ``sort`` and its transitive subsorts, in declaration order.

    Direct objects come first, then each subsort's domain in the order the
    subsorts were declared.  Duplicates keep their first position.
    """
    if sort == BOOLEAN:
        return list(BOOLEAN_DOMAIN)
    known = {s.name for s in sorts}
    if sort not in known:
        raise UnknownSort(sort)
    subsorts: dict[str, list[str]] = {s.name: [] for s in sorts}
    for s in sorts:
        for sup in s.supersorts:
            if sup not in subsorts:
                raise UnknownSort(sup)
            if s.name not in subsorts[sup]:
                subsorts[sup].append(s.name)
    _check_acyclic(subsorts)

    def direct(s: str) -> list[Value]:
        out: list[Value] = []
        for o in objects:
            if o.sort == s:
                out.extend(expand_object(o, sorts, objects))
        return out

    seen: set = set()
    result: list[Value] = []

    def visit(s: str) -> None:
        for v in direct(s):
            if v not in seen:
                seen.add(v)
                result.append(v)
        for t in subsorts[s]:
            visit(t)

    visit(sort)
    return result


def _check_acyclic(subsorts: Mapping[str, list[str]]) -> None:
    state: dict[str, int] = {}

    def dfs(s: str) -> None:
        state[s] = 1
        for t in subsorts.get(s, ()):
            if state.get(t) == 1:
                raise CyclicSortHierarchy(f"sort hierarchy cycle through {t}")
            if state.get(t) is None:
                dfs(t)
        state[s] = 2

    for s in subsorts:
        if s not in state:
            dfs(s)


def expand_object(o: ObjectDecl, sorts: Sequence[SortDecl], objects: Sequence[ObjectDecl]) -> list[Value]:
    v = o.value
    if isinstance(v, Int):
        return [v.value]
    if isinstance(v, Range):
        return list(range(v.lo, v.hi + 1))
    if not v.args:
        return [v.name]
    # constructor term: arguments name sorts, expanded row-major
    import itertools

    domains = []
    for a in v.args:
        if isinstance(a, Sym) and not a.args:
            domains.append(sort_domain(sorts, objects, a.name))
        elif isinstance(a, Int):
            domains.append([a.value])
        else:
            raise UnknownSort(str(a))
    return [format_value(v.name, combo) for combo in itertools.product(*domains)]


# ------------------------------------------------------------ evaluation

GroundKey = tuple  # (name, args)


def eval_term(t: Term, valuation: Mapping[GroundKey, Value], constants: Optional[set] = None) -> Value:
    if isinstance(t, Int):
        return t.value
    if isinstance(t, Var):
        raise UnassignedConstant(f"unbound variable {t.name}")
    if isinstance(t, Sym):
        args = tuple(eval_term(a, valuation, constants) for a in t.args)
        key = (t.name, args)
        is_const = key in valuation if constants is None else t.name in constants
        if is_const:
            if key not in valuation:
                raise UnassignedConstant(format_value(t.name, args))
            return valuation[key]
        return format_value(t.name, args)
    if isinstance(t, UnOp):
        x = eval_term(t.operand, valuation, constants)
        if not isinstance(x, int):
            raise NonIntegerArithmetic(f"{t.op} applied to {x}")
        return -x if t.op == "-" else abs(x)
    if isinstance(t, BinOp):
        a = eval_term(t.left, valuation, constants)
        b = eval_term(t.right, valuation, constants)
        if not isinstance(a, int) or not isinstance(b, int):
            raise NonIntegerArithmetic(f"{a} {t.op} {b}")
        return arith(t.op, a, b)
    raise TypeError(t)


def arith(op: str, a: int, b: int) -> Optional[int]:
    """Integer arithmetic; division or modulus by zero yields None (no value)."""
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "//":
        return None if b == 0 else a // b
    if op == "mod":
        return None if b == 0 else a % b
    raise ValueError(op)


def compare(op: str, a: Value, b: Value) -> bool:
    if op == "=":
        return a == b
    if op == "\\=":
        return a != b
    if not isinstance(a, int) or not isinstance(b, int):
        raise NonIntegerArithmetic(f"{a} {op} {b}")
    if op == "<":
        return a < b
    if op == ">":
        return a > b
    if op == "<=":
        return a <= b
    if op == ">=":
        return a >= b
    raise ValueError(op)


def eval_formula(f: Formula, valuation: Mapping[GroundKey, Value], constants: Optional[set] = None) -> bool:
    """Classical evaluation of a ground formula.

    ``valuation`` maps ``(name, args)`` keys to values.  When ``constants`` is
    given it names the constant symbols; otherwise any symbol whose key is in
    the valuation is treated as a constant and the rest as objects.
    """
    if isinstance(f, Bool):
        return f.value
    if isinstance(f, Lit):
        return eval_term(f.term, valuation, constants) == TRUE
    if isinstance(f, Cmp):
        a = eval_term(f.left, valuation, constants)
        b = eval_term(f.right, valuation, constants)
        if a is None or b is None:
            return False
        return compare(f.op, a, b)
    if isinstance(f, Not):
        if isinstance(f.operand, Lit):
            # ~c abbreviates c=false
            return eval_term(f.operand.term, valuation, constants) == FALSE
        return not eval_formula(f.operand, valuation, constants)
    if isinstance(f, And):
        return eval_formula(f.left, valuation, constants) and eval_formula(f.right, valuation, constants)
    if isinstance(f, Or):
        return eval_formula(f.left, valuation, constants) or eval_formula(f.right, valuation, constants)
    if isinstance(f, Implies):
        return (not eval_formula(f.left, valuation, constants)) or eval_formula(f.right, valuation, constants)
    raise TypeError(f)


# ------------------------------------------------------------- traversal


def term_vars(t: Term) -> list[str]:
    if isinstance(t, Var):
        return [t.name]
    if isinstance(t, Sym):
        return [v for a in t.args for v in term_vars(a)]
    if isinstance(t, BinOp):
        return term_vars(t.left) + term_vars(t.right)
    if isinstance(t, UnOp):
        return term_vars(t.operand)
    return []


def formula_vars(f: Optional[Formula]) -> list[str]:
    if f is None or isinstance(f, Bool):
        return []
    if isinstance(f, Lit):
        return term_vars(f.term)
    if isinstance(f, Cmp):
        return term_vars(f.left) + term_vars(f.right)
    if isinstance(f, Not):
        return formula_vars(f.operand)
    return formula_vars(f.left) + formula_vars(f.right)


def formula_terms(f: Optional[Formula]) -> list[Term]:
    """Top-level terms of every atom and comparison in ``f``."""
    if f is None or isinstance(f, Bool):
        return []
    if isinstance(f, Lit):
        return [f.term]
    if isinstance(f, Cmp):
        return [f.left, f.right]
    if isinstance(f, Not):
        return formula_terms(f.operand)
    return formula_terms(f.left) + formula_terms(f.right)


def subterms(t: Term) -> Iterable[Term]:
    yield t
    if isinstance(t, Sym):
        for a in t.args:
            yield from subterms(a)
    elif isinstance(t, BinOp):
        yield from subterms(t.left)
        yield from subterms(t.right)
    elif isinstance(t, UnOp):
        yield from subterms(t.operand)


def nested_constant_violations(f: Optional[Formula], constant_names: set) -> list[str]:
    """Names of constants that occur as arguments of other constants in ``f``."""
    out = []
    for t in formula_terms(f):
        for s in subterms(t):
            if isinstance(s, Sym) and s.name in constant_names:
                for a in s.args:
                    for inner in subterms(a):
                        if isinstance(inner, Sym) and inner.name in constant_names:
                            out.append(f"{inner.name} inside {s.name}")
    return out


def law_formulas(law: Law) -> list[Formula]:
    if isinstance(law, (BasicLaw, Default)):
        return [f for f in (law.head, law.cond, law.after) if f is not None]
    if isinstance(law, Causes):
        return [law.action, law.head, law.cond]
    if isinstance(law, (Impossible, Always)):
        return [law.formula]
    if isinstance(law, Nonexecutable):
        return [law.actions, law.cond]
    if isinstance(law, Increment):
        return [law.action, Lit(law.constant), Cmp("=", law.amount, law.amount), law.cond]
    raise TypeError(law)
