"""Recursive-descent parser for the ASCII entailment language.

    entailment := sheap "|-" [ sheap { "," sheap } ]
    sheap      := [ "Ex" ident+ "." ] [ pure "&" ] spatial
    pure       := patom { "&" patom }
    patom      := term ("="|"!="|"<"|"<="|">"|">=") term | "true" | "false"
    spatial    := satom { "*" satom }
    satom      := "Emp" | term "->" "(" term {"," term} ")" | "Arr(" term "," term ")"
                | "ls(" term "," term ")" | "dll(" term "," term "," term "," term ")"
    term       := factor { "+" factor } ;  factor := ident | natural
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError
from .syntax import (
    EMP, FALSE, TRUE, Arr, Const, Dll, Entailment, Eq, Le, Ls, Lt, Neq,
    PointsTo, Sum, SymbolicHeap, Var, conj,
)

KEYWORDS = {"Ex", "Emp", "Arr", "ls", "dll", "true", "false"}

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<num>\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>\|-|->|!=|<=|>=|[=<>&*+,.()])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            if kind == "ident" and chunk in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        for i, ch in enumerate(chunk):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


_COMPARISONS = {"=", "!=", "<", "<=", ">", ">="}


class _Parser:
    def __init__(self, text: str, pt: int | None):
        self.toks = tokenize(text)
        self.i = 0
        self.pt = pt
        self.saw_list = False
        self.arity = None

    # token helpers
    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.cur
        found = tok.text or "end of input"
        raise ParseError(f"{msg}, found {found!r}", tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.cur.text == text and self.cur.kind in ("op", "kw")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        tok = self.cur
        self.i += 1
        return tok

    # grammar
    def entailment(self) -> Entailment:
        lhs = self.sheap()
        self.expect("|-")
        rhs = []
        if self.cur.kind != "eof":
            rhs.append(self.sheap())
            while self.at(","):
                self.i += 1
                rhs.append(self.sheap())
        if self.cur.kind != "eof":
            self.error("expected ',' or end of input")
        return Entailment(lhs, tuple(rhs))

    def sheap(self) -> SymbolicHeap:
        binders: list[str] = []
        if self.at("Ex"):
            self.i += 1
            while self.cur.kind == "ident":
                binders.append(self.cur.text)
                self.i += 1
            if not binders:
                self.error("expected a variable after 'Ex'")
            self.expect(".")
            if len(set(binders)) != len(binders):
                self.error("repeated variable in 'Ex' binder list", self.toks[self.i - 1])
        pure = []
        while True:
            item = self.item()
            if isinstance(item, tuple):
                spatial = item
                break
            pure.append(item)
            self.expect("&")
        return SymbolicHeap(tuple(binders), conj(*pure), spatial)

    def item(self):
        """Either a pure atom or a whole spatial formula (returned as a tuple)."""
        tok = self.cur
        if tok.kind == "kw" and tok.text in ("true", "false"):
            self.i += 1
            return TRUE if tok.text == "true" else FALSE
        if tok.kind == "kw" and tok.text in ("Emp", "Arr", "ls", "dll"):
            return self.spatial()
        left = self.term()
        if self.cur.kind == "op" and self.cur.text in _COMPARISONS:
            op = self.cur.text
            self.i += 1
            right = self.term()
            return _comparison(op, left, right)
        if self.at("->"):
            return self.spatial(first=self.points_to(left))
        self.error("expected a comparison or '->'")

    def spatial(self, first=None) -> tuple:
        atoms = [first if first is not None else self.satom()]
        while self.at("*"):
            self.i += 1
            atoms.append(self.satom())
        return tuple(atoms)

    def satom(self):
        tok = self.cur
        if tok.kind == "kw":
            if tok.text == "Emp":
                self.i += 1
                return EMP
            if tok.text in ("Arr", "ls", "dll"):
                self.i += 1
                self.expect("(")
                args = [self.term()]
                while self.at(","):
                    self.i += 1
                    args.append(self.term())
                self.expect(")")
                want = 4 if tok.text == "dll" else 2
                if len(args) != want:
                    self.error(f"{tok.text} takes {want} arguments, got {len(args)}", tok)
                if tok.text == "Arr":
                    return Arr(*args)
                self.saw_list = True
                self.check_arity(2, tok, "list predicates need points-to arity 2")
                return Ls(*args) if tok.text == "ls" else Dll(*args)
        return self.points_to(self.term())

    def points_to(self, addr) -> PointsTo:
        arrow = self.expect("->")
        self.expect("(")
        values = [self.term()]
        while self.at(","):
            self.i += 1
            values.append(self.term())
        self.expect(")")
        self.check_arity(len(values), arrow, "points-to arity mismatch")
        return PointsTo(addr, tuple(values))

    def check_arity(self, n: int, tok: Token, msg: str) -> None:
        expected = self.pt if self.pt is not None else self.arity
        if expected is not None and n != expected:
            raise ParseError(f"{msg}: expected {expected}, got {n}", tok.line, tok.col)
        self.arity = n

    def term(self):
        out = self.factor()
        while self.at("+"):
            self.i += 1
            out = Sum(out, self.factor())
        return out

    def factor(self):
        tok = self.cur
        if tok.kind == "num":
            self.i += 1
            return Const(int(tok.text))
        if tok.kind == "ident":
            self.i += 1
            return Var(tok.text)
        self.error("expected a variable or a natural number")


def _comparison(op, left, right):
    if op == "=":
        return Eq(left, right)
    if op == "!=":
        return Neq(left, right)
    if op == "<":
        return Lt(left, right)
    if op == "<=":
        return Le(left, right)
    if op == ">":
        return Lt(right, left)
    return Le(right, left)


def parse_entailment(text: str, pt: int | None = None) -> Entailment:
    """Parse one entailment.

    With ``pt`` given, every points-to must have exactly that many values;
    otherwise all points-to atoms must merely agree with each other.  List
    predicates force an arity of 2 either way.
    """
    p = _Parser(text, pt)
    return p.entailment()


def parse_heap(text: str, pt: int | None = None) -> SymbolicHeap:
    p = _Parser(text, pt)
    h = p.sheap()
    if p.cur.kind != "eof":
        p.error("expected end of input")
    return h
