"""Tokenizer and expression parsing shared by all textual input formats.

Model, automaton, invariant and certificate files all embed the same
little language of affine expressions and comparison atoms:

    expr  :=  term (('+' | '-') term)*
    term  :=  unary (('*' | '/') unary)*
    unary :=  '-' unary | NUMBER | IDENT | '(' expr ')'
    atom  :=  expr REL expr          REL in { <=, <, >=, >, =, == }
            | 'mode' ('==' | '!=') IDENT
    conj  :=  'true' | atom ('and' atom)*

Expressions must stay affine in variables: products are allowed only when
at most one factor mentions a variable (parameters may multiply freely),
and division only by a nonzero numeric constant.  Numerals, including
decimals like 0.1, are read as exact rationals.

Errors carry line and column positions pointing into the source file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .expr import Atom, LinForm, Rel, rat

_TOKEN_RE = re.compile(
    r"""
      (?P<num>\d+(?:\.\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op><=|>=|==|!=|->|[+\-*/()<>=,:;{}\[\]'|])
    | (?P<ws>[ \t]+)
    | (?P<bad>.)
    """,
    re.VERBOSE,
)

_REL_OF = {
    "<=": Rel.LE,
    "<": Rel.LT,
    ">=": Rel.GE,
    ">": Rel.GT,
    "=": Rel.EQ,
    "==": Rel.EQ,
}


class SourceError(ValueError):
    """Parse or validation error anchored to a file position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # num | ident | op | eof
    text: str
    line: int
    col: int


@dataclass(frozen=True)
class ModeTest:
    """Guard atom over the finite mode component: mode ==/!= name."""

    mode: str
    equal: bool

    def holds(self, mode: str) -> bool:
        return (mode == self.mode) if self.equal else (mode != self.mode)


def tokenize(text: str, line: int = 1, col_base: int = 1) -> list[Token]:
    tokens: list[Token] = []
    cur_line, cur_col = line, col_base
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        s = m.group()
        if kind == "bad":
            raise SourceError(f"unexpected character {s!r}", cur_line, cur_col)
        if kind != "ws":
            tokens.append(Token(kind, s, cur_line, cur_col))
        if "\n" in s:
            cur_line += s.count("\n")
            cur_col = len(s) - s.rfind("\n")
        else:
            cur_col += len(s)
    tokens.append(Token("eof", "", cur_line, cur_col))
    return tokens


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    def peek(self) -> Token:
        return self._tokens[self._pos]

    def advance(self) -> Token:
        tok = self._tokens[self._pos]
        if tok.kind != "eof":
            self._pos += 1
        return tok

    def at_end(self) -> bool:
        return self.peek().kind == "eof"

    def match(self, text: str) -> bool:
        if self.peek().text == text and self.peek().kind != "eof":
            self._pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text or tok.kind == "eof":
            shown = tok.text or "end of input"
            raise SourceError(f"expected {text!r}, found {shown!r}", tok.line, tok.col)
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            shown = tok.text or "end of input"
            raise SourceError(f"expected {what}, found {shown!r}", tok.line, tok.col)
        return self.advance()

    def error(self, message: str) -> SourceError:
        tok = self.peek()
        return SourceError(message, tok.line, tok.col)


# resolve(name) maps an identifier to its LinForm meaning (a variable or a
# parameter), or returns None for unknown names.
Resolver = Callable[[str], "LinForm | None"]


def parse_number(ts: TokenStream) -> Fraction:
    """A signed numeric literal, allowing n, n.m and n/m."""
    sign = Fraction(1)
    while ts.peek().text == "-":
        ts.advance()
        sign = -sign
    tok = ts.peek()
    if tok.kind != "num":
        raise ts.error(f"expected number, found {tok.text!r}")
    ts.advance()
    value = rat(tok.text)
    if ts.match("/"):
        den = ts.peek()
        if den.kind != "num":
            raise ts.error("expected denominator")
        ts.advance()
        value /= rat(den.text)
    return sign * value


def parse_expression(ts: TokenStream, resolve: Resolver) -> LinForm:
    def parse_unary() -> LinForm:
        tok = ts.peek()
        if tok.text == "-":
            ts.advance()
            return -parse_unary()
        if tok.text == "(":
            ts.advance()
            inner = parse_sum()
            ts.expect(")")
            return inner
        if tok.kind == "num":
            ts.advance()
            return LinForm.constant(rat(tok.text))
        if tok.kind == "ident":
            meaning = resolve(tok.text)
            if meaning is None:
                raise SourceError(f"unknown name {tok.text!r}", tok.line, tok.col)
            ts.advance()
            return meaning
        raise ts.error(f"expected expression, found {tok.text or 'end of input'!r}")

    def parse_term() -> LinForm:
        acc = parse_unary()
        while True:
            tok = ts.peek()
            if tok.text == "*":
                ts.advance()
                rhs = parse_unary()
                if not acc.variables():
                    acc = rhs.mul_poly(acc.const)
                elif not rhs.variables():
                    acc = acc.mul_poly(rhs.const)
                else:
                    raise SourceError(
                        "product of two variable-dependent expressions is not affine",
                        tok.line,
                        tok.col,
                    )
            elif tok.text == "/":
                ts.advance()
                rhs = parse_unary()
                if rhs.variables() or not rhs.const.is_constant():
                    raise SourceError(
                        "division only by numeric constants", tok.line, tok.col
                    )
                c = rhs.const.constant_value()
                if c == 0:
                    raise SourceError("division by zero", tok.line, tok.col)
                acc = acc.scale(Fraction(1) / c)
            else:
                return acc

    def parse_sum() -> LinForm:
        acc = parse_term()
        while True:
            if ts.match("+"):
                acc = acc + parse_term()
            elif ts.match("-"):
                acc = acc - parse_term()
            else:
                return acc

    return parse_sum()


def parse_atom(
    ts: TokenStream, resolve: Resolver, modes: tuple[str, ...] | None = None
) -> Atom | ModeTest:
    """One comparison atom; 'mode ==/!= name' when modes are given."""
    tok = ts.peek()
    if modes is not None and tok.kind == "ident" and tok.text == "mode":
        ts.advance()
        op = ts.peek()
        if op.text not in ("==", "!=", "="):
            raise ts.error("expected '==' or '!=' after 'mode'")
        ts.advance()
        name = ts.expect_ident("mode name")
        if name.text not in modes:
            raise SourceError(f"unknown mode {name.text!r}", name.line, name.col)
        return ModeTest(name.text, equal=op.text != "!=")
    lhs = parse_expression(ts, resolve)
    op = ts.peek()
    rel = _REL_OF.get(op.text)
    if rel is None:
        raise ts.error("expected comparison operator")
    ts.advance()
    rhs = parse_expression(ts, resolve)
    return Atom(lhs - rhs, rel)


def parse_conjunction(
    ts: TokenStream, resolve: Resolver, modes: tuple[str, ...] | None = None
) -> tuple[list[Atom], list[ModeTest]]:
    """'true' or a nonempty 'and'-separated list of atoms."""
    tok = ts.peek()
    if tok.kind == "ident" and tok.text == "true":
        ts.advance()
        return [], []
    atoms: list[Atom] = []
    tests: list[ModeTest] = []
    while True:
        item = parse_atom(ts, resolve, modes)
        if isinstance(item, ModeTest):
            tests.append(item)
        else:
            atoms.append(item)
        if not (ts.peek().kind == "ident" and ts.peek().text == "and"):
            return atoms, tests
        ts.advance()


def strip_comment(line: str) -> str:
    cut = line.find("#")
    return line if cut < 0 else line[:cut]


def logical_lines(text: str) -> list[tuple[int, str]]:
    """Non-blank lines with comments removed, keyed by 1-based line number."""
    out = []
    for i, raw in enumerate(text.splitlines(), start=1):
        body = strip_comment(raw).rstrip()
        if body.strip():
            out.append((i, body))
    return out
