"""Recursive-descent parser for the task-specification language.

Surface syntax (negation allowed anywhere, converted to NNF on the way out)::

    ma  ::= ma '|' ma | ma '&' ma | '(' ma ')' | 'A' INT '(' stl ')'
    stl ::= stl '|' stl | stl '&' stl | stl ('U'|'R') '[' NUM ',' NUM ']' stl
          | '!' stl | ('F'|'G') '[' NUM ',' NUM ']' stl | '(' stl ')'
          | IDENT | 'true' | 'false'

Binding strength, tightest first: ``!``/``F``/``G`` prefixes, ``U``/``R``
(left-associative), ``&``, ``|``. ``F``, ``G``, ``U`` and ``R`` are only
operators when directly followed by ``[``, so regions may use those names.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Mapping, Optional

from .formula import (
    AgentAtom,
    Always,
    Atom,
    Eventually,
    FalseF,
    Formula,
    Not,
    Release,
    TrueF,
    Until,
    conj,
    disj,
    ma_conj,
    ma_disj,
    to_nnf,
)


class SpecError(ValueError):
    """Invalid specification text; carries a 1-based line/column when known."""

    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}, column {col}: {message}"
        super().__init__(message)


@dataclass
class _Tok:
    kind: str  # 'word', 'num', 'sym', 'eof'
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<word>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym>[()\[\],&|!])"
)

_AGENT_RE = re.compile(r"A(\d+)$")


def tokenize(text: str) -> List[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SpecError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            chunk = m.group()
            nl = chunk.count("\n")
            if nl:
                line += nl
                line_start = pos + chunk.rindex("\n") + 1
        else:
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str, regions: Optional[Mapping], num_agents: Optional[int]):
        self.toks = tokenize(text)
        self.i = 0
        self.regions = regions
        self.num_agents = num_agents

    # token helpers
    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.peek()
        raise SpecError(msg, tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        tok = self.peek()
        if tok.text != text or tok.kind == "eof":
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            self.error(f"expected {text!r}, found {found}")
        return self.advance()

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "sym" and tok.text == text

    def is_op(self, names) -> bool:
        tok = self.peek()
        return tok.kind == "word" and tok.text in names and self.peek(1).text == "["

    def finish(self):
        if self.peek().kind != "eof":
            self.error(f"unexpected {self.peek().text!r} after end of formula")

    # multi-agent level
    def ma_or(self):
        items = [self.ma_and()]
        while self.at("|"):
            self.advance()
            items.append(self.ma_and())
        return ma_disj(*items)

    def ma_and(self):
        items = [self.ma_prim()]
        while self.at("&"):
            self.advance()
            items.append(self.ma_prim())
        return ma_conj(*items)

    def ma_prim(self):
        tok = self.peek()
        if self.at("("):
            self.advance()
            f = self.ma_or()
            self.expect(")")
            return f
        m = _AGENT_RE.match(tok.text) if tok.kind == "word" else None
        if m is None or self.peek(1).text != "(":
            self.error("expected an agent formula such as A1(...)")
        agent = int(m.group(1))
        if self.num_agents is not None and not 1 <= agent <= self.num_agents:
            self.error(f"agent index {agent} out of range 1..{self.num_agents}", tok)
        if agent < 1:
            self.error("agent indices start at 1", tok)
        self.advance()
        self.expect("(")
        phi = self.stl_or()
        self.expect(")")
        return AgentAtom(agent, to_nnf(phi))

    # single-agent level
    def stl_or(self) -> Formula:
        items = [self.stl_and()]
        while self.at("|"):
            self.advance()
            items.append(self.stl_and())
        return disj(*items)

    def stl_and(self) -> Formula:
        items = [self.stl_binary()]
        while self.at("&"):
            self.advance()
            items.append(self.stl_binary())
        return conj(*items)

    def stl_binary(self) -> Formula:
        left = self.stl_unary()
        while self.is_op(("U", "R")):
            op = self.advance().text
            a, b = self.interval()
            right = self.stl_unary()
            left = (Until if op == "U" else Release)(a, b, left, right)
        return left

    def interval(self):
        start = self.expect("[")
        a = self.number()
        self.expect(",")
        b = self.number()
        self.expect("]")
        if a > b:
            self.error(f"interval [{a:g}, {b:g}] has a > b", start)
        return a, b

    def number(self) -> float:
        tok = self.peek()
        if tok.kind != "num":
            self.error("expected a number")
        self.advance()
        return float(tok.text)

    def stl_unary(self) -> Formula:
        tok = self.peek()
        if self.at("!"):
            self.advance()
            return Not(self.stl_unary())
        if self.is_op(("F", "G")):
            op = self.advance().text
            a, b = self.interval()
            child = self.stl_unary()
            return (Eventually if op == "F" else Always)(a, b, child)
        if self.at("("):
            self.advance()
            f = self.stl_or()
            self.expect(")")
            return f
        if tok.kind == "word":
            self.advance()
            if tok.text == "true":
                return TrueF()
            if tok.text == "false":
                return FalseF()
            if self.regions is not None and tok.text not in self.regions:
                self.error(f"unknown region {tok.text!r}", tok)
            return Atom(tok.text)
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        self.error(f"expected a formula, found {found}")


def parse_spec(text: str, regions: Optional[Mapping] = None, num_agents: Optional[int] = None):
    """Parse a multi-agent specification; the result is in NNF.

    ``regions`` (any mapping keyed by region name) and ``num_agents`` enable
    name and agent-range validation when given.
    """
    p = _Parser(text, regions, num_agents)
    out = p.ma_or()
    p.finish()
    return out


def parse_stl(text: str, regions: Optional[Mapping] = None, nnf: bool = True) -> Formula:
    """Parse a single-agent formula (no ``A<i>(...)`` wrapper)."""
    p = _Parser(text, regions, None)
    out = p.stl_or()
    p.finish()
    return to_nnf(out) if nnf else out
