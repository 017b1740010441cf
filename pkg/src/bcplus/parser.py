"""Lexer, recursive-descent parser and renderer for BC+ source text."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .ast import (
    MAXSTEP,
    TRUE_F,
    And,
    Always,
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
    ObjectDecl,
    Or,
    Program,
    Query,
    Range,
    SortDecl,
    Sym,
    Term,
    UnOp,
    Var,
    VariableDecl,
)
from .errors import Diagnostic, ParseFailure


@dataclass(frozen=True)
class SourceProgram:
    text: str
    origin: str = "<input>"


@dataclass(frozen=True)
class Token:
    kind: str  # INT, IDENT, VAR, OP, EOF
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>%[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z][A-Za-z0-9_]*)
  | (?P<op>:-|::|\.\.|//|\\=|<=|>=|->|>>|[:;,.()&|~\-+*=<>])
    """,
    re.VERBOSE,
)

LAW_KEYWORDS = {"if", "after", "causes", "increments", "decrements", "by", "ifcons", "unless"}
SECTION_NAMES = ("sorts", "objects", "variables", "constants", "query")
CMP_OPS = {"=", "\\=", "<", ">", "<=", ">="}


def tokenize(text: str, origin: str = "<input>") -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        m = _TOKEN_RE.match(text, i)
        if m is None:
            diags.append(Diagnostic("error", f"unexpected character {text[i]!r}", line, col, origin))
            if text[i] == "\n":
                line, col = line + 1, 1
            else:
                col += 1
            i += 1
            continue
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        elif kind in ("ws", "comment"):
            col += len(s)
        else:
            tokens.append(Token({"int": "INT", "ident": "IDENT", "var": "VAR", "op": "OP"}[kind], s, line, col))
            col += len(s)
        i = m.end()
    tokens.append(Token("EOF", "", line, col))
    return tokens, diags


class _Error(Exception):
    def __init__(self, message: str, token: Token):
        super().__init__(message)
        self.message = message
        self.token = token


@dataclass(frozen=True)
class _ParenFormula:
    """A parenthesised formula met where a term was expected."""

    formula: Formula


class _Parser:
    def __init__(self, tokens: list[Token], origin: str):
        self.toks = tokens
        self.i = 0
        self.origin = origin
        self.diags: list[Diagnostic] = []

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("OP", "IDENT") and t.text == text

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def error(self, message: str, token: Optional[Token] = None) -> _Error:
        token = token or self.tok
        if token.kind == "EOF":
            prev = self.toks[self.i - 1] if self.i > 0 else token
            return _Error("unexpected end of law" if "end" not in message else message, prev)
        return _Error(message, token)

    def expect(self, text: str, what: Optional[str] = None) -> Token:
        if not self.at(text):
            found = "end of input" if self.tok.kind == "EOF" else repr(self.tok.text)
            raise self.error(f"expected {what or repr(text)}, found {found}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            found = "end of input" if self.tok.kind == "EOF" else repr(self.tok.text)
            raise self.error(f"expected {what}, found {found}")
        return self.advance()

    def diag(self, severity: str, message: str, token: Token) -> None:
        self.diags.append(Diagnostic(severity, message, token.line, token.column, self.origin))

    def recover(self) -> None:
        """Skip to just past the next period at parenthesis depth 0."""
        depth = 0
        while self.tok.kind != "EOF":
            t = self.advance()
            if t.text == "(":
                depth += 1
            elif t.text == ")":
                depth = max(0, depth - 1)
            elif t.text == "." and depth == 0:
                return
            elif t.text == ":-" and t.kind == "OP":
                self.i -= 1
                return

    # -- program

    def parse_program(self) -> Program:
        sorts: list[SortDecl] = []
        objects: list[ObjectDecl] = []
        variables: list[VariableDecl] = []
        constants: list[ConstantDecl] = []
        laws: list[Law] = []
        queries: list[Query] = []
        while self.tok.kind != "EOF":
            start = self.i
            try:
                if self.at(":-"):
                    self.advance()
                    name = self.expect_kind("IDENT", "a section name (sorts, objects, variables, constants, query)")
                    if name.text == "sorts":
                        for s in self.parse_items(self.sort_item):
                            _merge_sort(sorts, s)
                    elif name.text == "objects":
                        objects.extend(self.parse_items(self.object_item))
                    elif name.text == "variables":
                        variables.extend(self.parse_items(self.variable_item))
                    elif name.text == "constants":
                        constants.extend(self.parse_items(self.constant_item))
                    elif name.text == "query":
                        queries.append(self.parse_query_body(name))
                    else:
                        raise self.error(f"unknown section ':- {name.text}'", name)
                else:
                    laws.append(self.parse_law())
            except _Error as e:
                self.diag("error", e.message, e.token)
                if self.i == start:
                    self.advance()
                self.recover()
            except RecursionError:
                self.diag("error", "expression nested too deeply", self.tok)
                self.recover()
        return Program(tuple(sorts), tuple(objects), tuple(variables), tuple(constants), tuple(laws), tuple(queries))

    def parse_items(self, item_fn) -> list:
        """Semicolon-separated items ending with a period.

        A trailing semicolon that is not followed by another item ends the
        section as if it were a period.
        """
        out: list = []
        if self.at("."):
            self.advance()
            return out
        while True:
            out.extend(item_fn())
            if self.at("."):
                self.advance()
                return out
            if self.at(";"):
                semi = self.advance()
                if self.at("."):
                    self.advance()
                    return out
                if self.tok.kind == "EOF" or self.at(":-") or not self._item_follows(item_fn):
                    self.diag("warning", "section ended by ';' instead of '.'", semi)
                    return out
                continue
            raise self.error("expected ';' or '.' after declaration")

    def _item_follows(self, item_fn) -> bool:
        save, ndiag = self.i, len(self.diags)
        try:
            item_fn()
            ok = self.at(";") or self.at(".") or self.tok.kind == "EOF" or self.at(":-")
        except _Error:
            ok = False
        self.i = save
        del self.diags[ndiag:]
        return ok

    # -- declarations

    def sort_item(self) -> list[SortDecl]:
        names = [self.expect_kind("IDENT", "a sort name")]
        while self.at(">>"):
            self.advance()
            names.append(self.expect_kind("IDENT", "a sort name"))
        out = [SortDecl(names[0].text, (), names[0].line, names[0].column)]
        for sup, sub in zip(names, names[1:]):
            out.append(SortDecl(sub.text, (sup.text,), sub.line, sub.column))
        if self.at(","):
            self.advance()
            out.extend(self.sort_item())
        return out

    def object_item(self) -> list[ObjectDecl]:
        values = [self.object_value()]
        while self.at(","):
            self.advance()
            values.append(self.object_value())
        self.expect("::", "'::' and a sort")
        sort = self.expect_kind("IDENT", "a sort name")
        return [ObjectDecl(v, sort.text, t.line, t.column) for v, t in values]

    def object_value(self):
        t = self.tok
        if self.at("-") or t.kind == "INT":
            lo = self.signed_int()
            if self.at(".."):
                self.advance()
                hi = self.signed_int()
                if hi < lo:
                    raise self.error(f"empty range {lo}..{hi}", t)
                return Range(lo, hi), t
            return Int(lo), t
        name = self.expect_kind("IDENT", "an object name")
        if self.at("("):
            self.advance()
            args = [self.object_arg()]
            while self.at(","):
                self.advance()
                args.append(self.object_arg())
            self.expect(")")
            return Sym(name.text, tuple(args)), t
        return Sym(name.text), t

    def object_arg(self):
        if self.tok.kind == "INT" or self.at("-"):
            return Int(self.signed_int())
        return Sym(self.expect_kind("IDENT", "a sort name").text)

    def signed_int(self) -> int:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        v = int(self.expect_kind("INT", "an integer").text)
        return -v if neg else v

    def variable_item(self) -> list[VariableDecl]:
        names: list[tuple[str, Token]] = []
        while True:
            t = self.expect_kind("VAR", "a capitalised variable name")
            if self.at(".."):
                self.advance()
                t2 = self.expect_kind("VAR", "a variable name")
                names.extend((n, t) for n in _expand_var_range(t, t2, self))
            else:
                names.append((t.text, t))
            if not self.at(","):
                break
            self.advance()
        self.expect("::", "'::' and a sort")
        sort = self.expect_kind("IDENT", "a sort name")
        return [VariableDecl(n, sort.text, t.line, t.column) for n, t in names]

    def constant_item(self) -> list[ConstantDecl]:
        heads: list[tuple[Token, tuple[str, ...]]] = []
        while True:
            name = self.expect_kind("IDENT", "a constant name")
            heads.append((name, self.sort_list()))
            if not self.at(","):
                break
            self.advance()
        self.expect("::", "'::' and a constant kind")
        kind = self.expect_kind("IDENT", "a constant kind")
        value_sort = "boolean"
        if self.at("("):
            self.advance()
            value_sort = self.expect_kind("IDENT", "a value sort").text
            self.expect(")")
        parent, parent_args = None, ()
        if kind.text == "attribute":
            if self.at("of"):
                self.advance()
                p = self.expect_kind("IDENT", "the parent action of the attribute")
                parent = p.text
                parent_args = self.sort_list()
            else:
                raise self.error("attribute declaration needs 'of <action>'")
        return [
            ConstantDecl(n.text, args, kind.text, value_sort, parent, parent_args, n.line, n.column)
            for n, args in heads
        ]

    def sort_list(self) -> tuple[str, ...]:
        if not self.at("("):
            return ()
        self.advance()
        out = [self.expect_kind("IDENT", "a sort name").text]
        while self.at(","):
            self.advance()
            out.append(self.expect_kind("IDENT", "a sort name").text)
        self.expect(")")
        return tuple(out)

    # -- laws

    def parse_law(self) -> Law:
        t = self.tok
        pos = (t.line, t.column)
        if self.at("impossible"):
            self.advance()
            law: Law = Impossible(self.formula(), *pos)
        elif self.at("nonexecutable"):
            self.advance()
            acts = self.formula()
            cond = self.opt_if()
            law = Nonexecutable(acts, cond, *pos)
        elif self.at("always"):
            self.advance()
            law = Always(self.formula(), *pos)
        elif self.at("default"):
            self.advance()
            head = self.formula()
            cond = self.opt_if()
            after = self.opt_after()
            law = Default(head, cond, after, *pos)
        else:
            first = self.formula()
            if self.at("causes"):
                self.advance()
                head = self.formula()
                law = Causes(first, head, self.opt_if(), *pos)
            elif self.at("increments") or self.at("decrements"):
                neg = self.advance().text == "decrements"
                const = self.term()
                if isinstance(const, _ParenFormula):
                    raise self.error("expected an additive constant")
                self.expect("by", "'by' and an amount")
                amount = self.term()
                if isinstance(amount, _ParenFormula):
                    raise self.error("expected an integer amount")
                law = Increment(first, const, amount, self.opt_if(), neg, *pos)
            else:
                cond = self.opt_if()
                after = self.opt_after()
                law = BasicLaw(first, cond, after, *pos)
        if self.tok.kind == "EOF":
            raise self.error("unexpected end of law")
        if not self.at("."):
            raise self.error(f"unexpected {self.tok.text!r} in law; expected '.'")
        self.advance()
        return law

    def opt_if(self) -> Formula:
        if self.at("if"):
            self.advance()
            return self.formula()
        return TRUE_F

    def opt_after(self) -> Optional[Formula]:
        if self.at("after"):
            self.advance()
            return self.formula()
        return None

    # -- queries

    def parse_query_body(self, start: Token) -> Query:
        label = None
        maxstep = None
        items: list[tuple[Union[int, str], Formula]] = []
        seen_bound = False
        if self.at("."):
            self.advance()
            return Query(label, maxstep, (), start.line, start.column)
        while True:
            t = self.tok
            if self.at("label") and self.peek().text == "::":
                self.advance()
                self.advance()
                lt = self.advance()
                if lt.kind not in ("IDENT", "INT", "VAR"):
                    raise self.error("expected a query label", lt)
                label = lt.text
            elif self.at("maxstep") and self.peek().text == "::":
                self.advance()
                self.advance()
                if seen_bound:
                    raise self.error("query has more than one maxstep bound", t)
                maxstep = self.signed_int()
                if maxstep < 0:
                    raise self.error("maxstep bound must be non-negative", t)
                seen_bound = True
            elif self.at("maxstep") and self.peek().text == ":":
                self.advance()
                self.advance()
                if self.tok.kind == "INT" and self.peek().text in (".", ";"):
                    n = self.tok.text
                    raise self.error(
                        f"'maxstep: {n}' is not a step formula; to bound the horizon write 'maxstep :: {n}'", t
                    )
                items.append((MAXSTEP, self.formula()))
            elif t.kind == "INT":
                step = int(self.advance().text)
                self.expect(":", "':' after the step index")
                items.append((step, self.formula()))
            else:
                found = "end of input" if t.kind == "EOF" else repr(t.text)
                raise self.error(f"malformed query item: expected 'label ::', 'maxstep ::' or 'step: formula', found {found}")
            if self.at("."):
                self.advance()
                break
            if self.at(";"):
                self.advance()
                if self.at("."):
                    self.advance()
                    break
                continue
            if self.tok.kind == "EOF":
                raise self.error("unexpected end of query")
            raise self.error(f"unexpected {self.tok.text!r} in query; expected ';' or '.'")
        return Query(label, maxstep, tuple(items), start.line, start.column)

    # -- formulas

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.at("->"):
            self.advance()
            return Implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.at("|"):
            self.advance()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.negation()
        while self.at("&"):
            self.advance()
            left = And(left, self.negation())
        return left

    def negation(self) -> Formula:
        if self.at("~"):
            self.advance()
            return Not(self.negation())
        return self.comparison()

    def comparison(self) -> Formula:
        t = self.tok
        if self.tok.kind == "EOF":
            raise self.error("unexpected end of law")
        left = self.term()
        if self.tok.kind == "OP" and self.tok.text in CMP_OPS:
            op = self.advance().text
            right = self.term()
            if isinstance(left, _ParenFormula) or isinstance(right, _ParenFormula):
                raise self.error("comparison between formulas", t)
            return Cmp(op, left, right)
        if isinstance(left, _ParenFormula):
            return left.formula
        # "-" in front of a bare atom is logical negation
        if isinstance(left, UnOp) and left.op == "-":
            inner = left.operand
            if isinstance(inner, _ParenFormula):
                return Not(inner.formula)
            if isinstance(inner, (Sym, Var)):
                return Not(_as_formula(inner))
        if isinstance(left, Sym) and not left.args and left.name in ("true", "false"):
            return Bool(left.name == "true")
        if isinstance(left, Int):
            raise self.error(f"integer {left.value} used as a formula", t)
        return Lit(left)

    def term(self):
        left = self.product()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            right = self.product()
            self._no_formula(left, right)
            left = BinOp(op, left, right)
        return left

    def product(self):
        left = self.unary_term()
        while self.at("*") or self.at("//") or (self.tok.kind == "IDENT" and self.tok.text == "mod"):
            op = self.advance().text
            right = self.unary_term()
            self._no_formula(left, right)
            left = BinOp(op, left, right)
        return left

    def unary_term(self):
        if self.at("-"):
            self.advance()
            return UnOp("-", self.unary_term())
        if self.tok.kind == "IDENT" and self.tok.text == "abs" and self.peek().text != "::":
            self.advance()
            operand = self.unary_term()
            self._no_formula(operand)
            return UnOp("abs", operand)
        return self.primary()

    def _no_formula(self, *terms) -> None:
        for t in terms:
            if isinstance(t, _ParenFormula):
                raise self.error("formula used where an arithmetic term is expected")

    def primary(self):
        t = self.tok
        if t.kind == "INT":
            self.advance()
            return Int(int(t.text))
        if t.kind == "VAR":
            self.advance()
            return Var(t.text)
        if t.kind == "IDENT":
            if t.text in LAW_KEYWORDS:
                raise self.error(f"unexpected keyword {t.text!r}")
            self.advance()
            if self.at("("):
                self.advance()
                args = [self.arg_term()]
                while self.at(","):
                    self.advance()
                    args.append(self.arg_term())
                self.expect(")", "')' closing the argument list")
                return Sym(t.text, tuple(args))
            return Sym(t.text)
        if self.at("("):
            self.advance()
            inner = self.formula()
            self.expect(")", "')'")
            if isinstance(inner, Lit):
                return inner.term
            return _ParenFormula(inner)
        if t.kind == "EOF":
            raise self.error("unexpected end of law")
        raise self.error(f"unexpected {t.text!r}")

    def arg_term(self) -> Term:
        t = self.term()
        if isinstance(t, _ParenFormula):
            raise self.error("formula used as an argument")
        return t


def _as_formula(t) -> Formula:
    return Lit(t)


def _expand_var_range(t1: Token, t2: Token, parser: _Parser) -> list[str]:
    m1 = re.fullmatch(r"(.*?)(\d+)", t1.text)
    m2 = re.fullmatch(r"(.*?)(\d+)", t2.text)
    if not m1 or not m2 or m1.group(1) != m2.group(1) or int(m1.group(2)) > int(m2.group(2)):
        raise parser.error(f"bad variable range {t1.text}..{t2.text}", t1)
    return [f"{m1.group(1)}{k}" for k in range(int(m1.group(2)), int(m2.group(2)) + 1)]


def _merge_sort(sorts: list[SortDecl], s: SortDecl) -> None:
    for i, old in enumerate(sorts):
        if old.name == s.name:
            sups = old.supersorts + tuple(x for x in s.supersorts if x not in old.supersorts)
            sorts[i] = SortDecl(old.name, sups, old.line, old.column)
            return
    sorts.append(s)


# ------------------------------------------------------------ public API


def parse_program(src: Union[SourceProgram, str]) -> tuple[Optional[Program], list[Diagnostic]]:
    """Parse BC+ text.  Returns ``(program, diagnostics)``; program is None when any error was found."""
    if isinstance(src, str):
        src = SourceProgram(src)
    tokens, diags = tokenize(src.text, src.origin)
    p = _Parser(tokens, src.origin)
    program = p.parse_program()
    diags = sorted(diags + p.diags, key=lambda d: (d.line, d.column))
    if any(d.severity == "error" for d in diags):
        return None, diags
    return program, diags


def parse_query(src: Union[SourceProgram, str]) -> tuple[Optional[Query], list[Diagnostic]]:
    """Parse a single ``:- query`` block (the leading ``:- query`` may be omitted)."""
    if isinstance(src, str):
        src = SourceProgram(src)
    text = src.text
    if not re.match(r"\s*(%[^\n]*\n\s*)*:-\s*query\b", text):
        text = ":- query " + text
    program, diags = parse_program(SourceProgram(text, src.origin))
    if program is None:
        return None, diags
    if len(program.queries) != 1 or program.laws or program.constants:
        return None, diags + [Diagnostic("error", "expected exactly one query block", 1, 1, src.origin)]
    return program.queries[0], diags


def load_program(text: str, origin: str = "<input>") -> Program:
    program, diags = parse_program(SourceProgram(text, origin))
    if program is None:
        raise ParseFailure(diags)
    return program


# ------------------------------------------------------------- rendering

_PREC = {"->": 1, "|": 2, "&": 3, "~": 4, "cmp": 5, "+": 6, "-": 6, "*": 7, "//": 7, "mod": 7, "un": 8}


def render_term(t: Term, parent: int = 0, right: bool = False) -> str:
    if isinstance(t, Int):
        return str(t.value)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Sym):
        if not t.args:
            return t.name
        return f"{t.name}({', '.join(render_term(a) for a in t.args)})"
    if isinstance(t, UnOp):
        if t.op == "abs":
            return f"abs({render_term(t.operand)})"
        return "-" + render_term(t.operand, _PREC["un"])
    if isinstance(t, BinOp):
        p = _PREC[t.op]
        s = f"{render_term(t.left, p)} {t.op} {render_term(t.right, p, True)}"
        if p < parent or (p == parent and right):
            return f"({s})"
        return s
    raise TypeError(t)


def render_formula(f: Formula, parent: int = 0, right: bool = False) -> str:
    if isinstance(f, Bool):
        return "true" if f.value else "false"
    if isinstance(f, Lit):
        return render_term(f.term)
    if isinstance(f, Cmp):
        s = f"{render_term(f.left, _PREC['cmp'])} {f.op} {render_term(f.right, _PREC['cmp'])}"
        return f"({s})" if parent > _PREC["cmp"] else s
    if isinstance(f, Not):
        return "~" + render_formula(f.operand, _PREC["~"])
    if isinstance(f, (And, Or, Implies)):
        op = {And: "&", Or: "|", Implies: "->"}[type(f)]
        p = _PREC[op]
        if op == "->":  # right associative
            s = f"{render_formula(f.left, p, True)} -> {render_formula(f.right, p)}"
            paren = p < parent or (p == parent and right)
        else:
            s = f"{render_formula(f.left, p)} {op} {render_formula(f.right, p, True)}"
            paren = p < parent or (p == parent and right)
        return f"({s})" if paren else s
    raise TypeError(f)


def _render_cond(cond: Formula) -> str:
    return "" if cond == TRUE_F else f" if {render_formula(cond)}"


def render_law(law: Law) -> str:
    r = render_formula
    if isinstance(law, BasicLaw):
        after = "" if law.after is None else f" after {r(law.after)}"
        return f"{r(law.head)}{_render_cond(law.cond)}{after}."
    if isinstance(law, Causes):
        return f"{r(law.action)} causes {r(law.head)}{_render_cond(law.cond)}."
    if isinstance(law, Impossible):
        return f"impossible {r(law.formula)}."
    if isinstance(law, Nonexecutable):
        return f"nonexecutable {r(law.actions)}{_render_cond(law.cond)}."
    if isinstance(law, Default):
        after = "" if law.after is None else f" after {r(law.after)}"
        return f"default {r(law.head)}{_render_cond(law.cond)}{after}."
    if isinstance(law, Always):
        return f"always {r(law.formula)}."
    if isinstance(law, Increment):
        word = "decrements" if law.negative else "increments"
        return f"{r(law.action)} {word} {render_term(law.constant)} by {render_term(law.amount)}{_render_cond(law.cond)}."
    raise TypeError(law)


def render_query(q: Query) -> str:
    items = []
    if q.label is not None:
        items.append(f"label :: {q.label}")
    if q.maxstep is not None:
        items.append(f"maxstep :: {q.maxstep}")
    for step, f in q.items:
        items.append(f"{step}: {render_formula(f)}")
    if not items:
        return ":- query."
    return ":- query\n    " + ";\n    ".join(items) + "."


def _render_object_value(v) -> str:
    if isinstance(v, Range):
        return f"{v.lo}..{v.hi}"
    if isinstance(v, Int):
        return str(v.value)
    return render_term(v)


def _group(items, key):
    groups: list[tuple[object, list]] = []
    for it in items:
        k = key(it)
        if groups and groups[-1][0] == k:
            groups[-1][1].append(it)
        else:
            groups.append((k, [it]))
    return groups


def render_constant_kind(c: ConstantDecl) -> str:
    if c.kind == "exogenousAction":
        return "exogenousAction"
    if c.kind == "attribute":
        parent = c.parent + (f"({', '.join(c.parent_arg_sorts)})" if c.parent_arg_sorts else "")
        return f"attribute({c.value_sort}) of {parent}"
    return f"{c.kind}({c.value_sort})"


def render_program(p: Program) -> str:
    """Surface text that parses back to a structurally equal program."""
    out: list[str] = []
    if p.sorts:
        items = []
        for s in p.sorts:
            if not s.supersorts:
                items.append(s.name)
            for sup in s.supersorts:
                items.append(f"{sup} >> {s.name}")
        out.append(":- sorts\n    " + ";\n    ".join(items) + ".")
    if p.objects:
        items = [
            f"{', '.join(_render_object_value(o.value) for o in grp)} :: {sort}"
            for sort, grp in _group(p.objects, lambda o: o.sort)
        ]
        out.append(":- objects\n    " + ";\n    ".join(items) + ".")
    if p.variables:
        items = [f"{', '.join(v.name for v in grp)} :: {sort}" for sort, grp in _group(p.variables, lambda v: v.sort)]
        out.append(":- variables\n    " + ";\n    ".join(items) + ".")
    if p.constants:
        items = []
        for c in p.constants:
            head = c.name + (f"({', '.join(c.arg_sorts)})" if c.arg_sorts else "")
            items.append(f"{head} :: {render_constant_kind(c)}")
        out.append(":- constants\n    " + ";\n    ".join(items) + ".")
    if p.laws:
        out.append("\n".join(render_law(law) for law in p.laws))
    for q in p.queries:
        out.append(render_query(q))
    return "\n\n".join(out) + ("\n" if out else "")
