"""Concrete syntax: parser and pretty-printer.

Grammar (``+`` is left-associative and binds loosest; binder bodies and
``else`` branches extend as far right as possible)::

    expr    ::= 'fun' FUNID '(' vars ')' '->' expr
              | 'letrec' FUNID '(' vars ')' '=' expr 'in' expr
              | 'let' VAR '=' expr 'in' expr
              | 'case' expr 'of' pat 'then' expr 'else' expr
              | sum
    sum     ::= operand ('+' operand)*
    operand ::= INT | VAR | FUNID | '[' ']' | '[' expr '|' expr ']'
              | 'apply' operand '(' exprs ')' | '(' expr ')' | '□'
              | fun/letrec/let/case (only as the last operand)
    pat     ::= INT | VAR | '[' ']' | '[' pat '|' pat ']'

``%`` starts a comment that runs to the end of the line.  Frame stacks are
written innermost frame first, frames separated by ``;``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import (
    HOLE, NIL, Add, Apply, Case, Cons, Expr, Fun, FunId, Hole, Let, Letrec, Lit,
    Nil, Pattern, PCons, PLit, PNil, PVar, Var, contains_hole, is_linear, is_value,
    pattern_vars,
)

KEYWORDS = {"fun", "letrec", "let", "in", "apply", "case", "of", "then", "else"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|%[^\n]*)
  | (?P<funid>[a-z][A-Za-z0-9_]*/[0-9]+)
  | (?P<kw>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z][A-Za-z0-9_]*)
  | (?P<int>-?[0-9]+)
  | (?P<arrow>->)
  | (?P<punct>[\[\]|(),=+;])
  | (?P<hole>□)
""", re.VERBOSE)


class ParseError(Exception):
    def __init__(self, line: int, col: int, expected, message: str):
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        self.message = message
        super().__init__(f"{line}:{col}: {message}")

    def to_json(self) -> dict:
        return {"line": self.line, "col": self.col,
                "expected": sorted(self.expected), "message": self.message}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Token]:
    out: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(line, pos - line_start + 1, (), f"unexpected character {src[pos]!r}")
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "kw" and text not in KEYWORDS:
                raise ParseError(line, pos - line_start + 1, ("keyword", "function identifier"),
                                 f"unknown word {text!r} (function identifiers need /arity)")
            out.append(Token(text if kind in ("kw", "punct", "arrow") else kind,
                             text, line, pos - line_start + 1))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = m.start() + text.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def fail(self, expected, message: str | None = None):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(t.line, t.col, expected,
                         message or f"expected {' or '.join(sorted(expected))}, found {found}")

    def eat(self, kind: str) -> Token:
        if self.tok.kind != kind:
            self.fail({kind})
        t = self.tok
        self.i += 1
        return t

    def at(self, *kinds) -> bool:
        return self.tok.kind in kinds

    # -- expressions

    def expr(self) -> Expr:
        k = self.tok.kind
        if k == "fun":
            return self.fun()
        if k == "letrec":
            return self.letrec()
        if k == "let":
            return self.let()
        if k == "case":
            return self.case()
        return self.sum()

    def sum(self) -> Expr:
        e = self.operand()
        while self.at("+"):
            self.i += 1
            e = Add(e, self.operand())
        return e

    def operand(self) -> Expr:
        t = self.tok
        k = t.kind
        if k in ("fun", "letrec", "let", "case"):
            return self.expr()
        if k == "int":
            self.i += 1
            return Lit(int(t.text))
        if k == "var":
            self.i += 1
            return Var(t.text)
        if k == "funid":
            self.i += 1
            return _funid(t)
        if k == "hole":
            self.i += 1
            return HOLE
        if k == "[":
            self.i += 1
            if self.at("]"):
                self.i += 1
                return NIL
            head = self.expr()
            self.eat("|")
            tail = self.expr()
            self.eat("]")
            return Cons(head, tail)
        if k == "(":
            self.i += 1
            e = self.expr()
            self.eat(")")
            return e
        if k == "apply":
            self.i += 1
            fn = self.operand()
            self.eat("(")
            args = []
            if not self.at(")"):
                args.append(self.expr())
                while self.at(","):
                    self.i += 1
                    args.append(self.expr())
            self.eat(")")
            return Apply(fn, tuple(args))
        self.fail({"expression"}, None if k != "eof" else "unexpected end of input, expected an expression")

    def header(self) -> tuple[str, tuple[str, ...]]:
        t = self.eat("funid")
        f = _funid(t)
        self.eat("(")
        params: list[str] = []
        if not self.at(")"):
            params.append(self.eat("var").text)
            while self.at(","):
                self.i += 1
                params.append(self.eat("var").text)
        self.eat(")")
        if len(params) != f.arity:
            raise ParseError(t.line, t.col, (),
                             f"{t.text} declares arity {f.arity} but has {len(params)} parameter(s)")
        if len(set(params)) != len(params):
            raise ParseError(t.line, t.col, (), f"duplicate parameter in {t.text}")
        return f.name, tuple(params)

    def fun(self) -> Expr:
        self.eat("fun")
        name, params = self.header()
        self.eat("->")
        return Fun(name, params, self.expr())

    def letrec(self) -> Expr:
        self.eat("letrec")
        name, params = self.header()
        self.eat("=")
        fbody = self.expr()
        self.eat("in")
        return Letrec(name, params, fbody, self.expr())

    def let(self) -> Expr:
        self.eat("let")
        x = self.eat("var").text
        self.eat("=")
        bound = self.expr()
        self.eat("in")
        return Let(x, bound, self.expr())

    def case(self) -> Expr:
        self.eat("case")
        scrut = self.expr()
        self.eat("of")
        t = self.tok
        pat = self.pattern()
        if not is_linear(pat):
            raise ParseError(t.line, t.col, (), "pattern variables must be distinct")
        self.eat("then")
        then = self.expr()
        self.eat("else")
        return Case(scrut, pat, then, self.expr())

    def pattern(self) -> Pattern:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return PLit(int(t.text))
        if t.kind == "var":
            self.i += 1
            return PVar(t.text)
        if t.kind == "[":
            self.i += 1
            if self.at("]"):
                self.i += 1
                return PNil()
            head = self.pattern()
            self.eat("|")
            tail = self.pattern()
            self.eat("]")
            return PCons(head, tail)
        self.fail({"pattern"})


def _funid(t: Token) -> FunId:
    name, _, arity = t.text.partition("/")
    return FunId(name, int(arity))


def parse_expr(src: str, *, allow_hole: bool = False) -> Expr:
    p = _Parser(src)
    e = p.expr()
    if not p.at("eof"):
        p.fail({"end of input"})
    if not allow_hole and contains_hole(e):
        raise ParseError(1, 1, (), "□ is only allowed in frames and contexts")
    return e


def parse_pattern(src: str) -> Pattern:
    p = _Parser(src)
    pat = p.pattern()
    if not p.at("eof"):
        p.fail({"end of input"})
    return pat


def parse_context(src: str) -> Expr:
    e = parse_expr(src, allow_hole=True)
    if contains_hole(e) != 1:
        raise ParseError(1, 1, ("□",), "a context needs exactly one □")
    return e


def parse_framestack(src: str) -> tuple:
    """Parse ``F1 ; F2 ; ...`` (innermost frame first) into a frame tuple."""
    from .machine import frame_of_context

    frames = []
    p = _Parser(src)
    if p.at("eof"):
        return ()
    while True:
        t = p.tok
        e = p.expr()
        holes = contains_hole(e)
        if holes != 1:
            raise ParseError(t.line, t.col, ("□",), f"a frame needs exactly one □, found {holes}")
        f = frame_of_context(e)
        if f is None:
            raise ParseError(t.line, t.col, (), "□ is not in a frame position")
        frames.append(f)
        if p.at("eof"):
            break
        p.eat(";")
    return tuple(frames)


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------

_BINDING_FORMS = (Fun, Letrec, Let, Case)


def pretty(e: Expr) -> str:
    return _pp(e)


def _pp(e: Expr) -> str:
    if isinstance(e, Lit):
        return str(e.value)
    if isinstance(e, (Var, FunId)):
        return str(e)
    if isinstance(e, Nil):
        return "[]"
    if isinstance(e, Hole):
        return "□"
    if isinstance(e, Cons):
        return f"[{_pp(e.head)}|{_pp(e.tail)}]"
    if isinstance(e, Add):
        left = _pp(e.lhs)
        if isinstance(e.lhs, _BINDING_FORMS):
            left = f"({left})"
        right = _pp(e.rhs)
        if isinstance(e.rhs, (Add, *_BINDING_FORMS)):
            right = f"({right})"
        return f"{left} + {right}"
    if isinstance(e, Apply):
        fn = _pp(e.fn)
        if not isinstance(e.fn, (Lit, Var, FunId, Nil, Cons, Hole)):
            fn = f"({fn})"
        return f"apply {fn}({', '.join(_pp(a) for a in e.args)})"
    if isinstance(e, Fun):
        return f"fun {e.name}/{len(e.params)}({', '.join(e.params)}) -> {_pp(e.body)}"
    if isinstance(e, Letrec):
        return (f"letrec {e.name}/{len(e.params)}({', '.join(e.params)}) = "
                f"{_pp(e.fbody)} in {_pp(e.cont)}")
    if isinstance(e, Let):
        return f"let {e.var} = {_pp(e.bound)} in {_pp(e.body)}"
    if isinstance(e, Case):
        return (f"case {_pp(e.scrutinee)} of {pretty_pattern(e.pat)} "
                f"then {_pp(e.then)} else {_pp(e.else_)}")
    raise TypeError(f"not an expression: {e!r}")


def pretty_pattern(p: Pattern) -> str:
    if isinstance(p, PLit):
        return str(p.value)
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, PNil):
        return "[]"
    return f"[{pretty_pattern(p.head)}|{pretty_pattern(p.tail)}]"


def pretty_frame(f) -> str:
    from .machine import plug_frame

    return pretty(plug_frame(f, HOLE))


def pretty_stack(k) -> str:
    return " ; ".join(pretty_frame(f) for f in k)
