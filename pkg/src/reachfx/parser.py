"""Lexer and recursive-descent parser for the surface language.

Terms::

    expr   := 'val' IDENT [':' qtype] '=' assign ';' expr | assign [';' [expr]]
    assign := unary [':=' assign]
    unary  := 'ref' ['[' qtype ']'] unary | '!' unary | 'free' unary | 'move' unary | app
    app    := atom (atom | '[' qtype ']')*
    atom   := 'unit' | INT | IDENT | '@' INT | '(' expr ')'
            | 'fun' IDENT '(' IDENT ':' qtype ')' [qual] ['->' [effect] [qtype]] '{' expr '}'
            | 'tfun' IDENT '[' IDENT '^' IDENT '<:' qtype ']' [qual] '{' expr '}'

Types::

    qtype  := type ['^' qual]
    qual   := '{' [qatom (',' qatom)*] '}'        qatom := IDENT | '@' INT | '*'
    type   := 'Unit' | 'Int' | 'Top' | 'Ref' '[' qtype ']' | IDENT | '(' type ')'
            | IDENT '(' IDENT ':' qtype ')' '->' [effect] qtype
            | 'forall' IDENT '[' IDENT '^' IDENT '<:' qtype ']' '->' [effect] qtype
    effect := '<' [('u' | 'k') ':' qual (',' ...)*] '>'

``//`` starts a line comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .syntax import (
    EMPTY, PURE, Abs, All, App, Assign, Deref, Effect, Free, Fun, IntLit, IntT, Let,
    Loc, LocLit, Move, QType, Qualifier, Ref, RefNew, Span, TAbs, TApp, Term, TopT,
    TVar, UnitLit, UnitT, Var,
)

KEYWORDS = {"val", "fun", "tfun", "ref", "free", "move", "unit",
            "Unit", "Int", "Top", "Ref", "forall"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<int>-?\d+)
  | (?P<loc>@\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>:=|->|<:|[()\[\]{}^,;:!*<>=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # 'int' | 'loc' | 'ident' | 'kw' | 'sym' | 'eof'
    text: str
    span: Span


class ParseError(Exception):
    def __init__(self, span: Span, expected, found: str):
        self.span = span
        self.expected = sorted(set(expected))
        self.found = found
        super().__init__(f"{span}: expected {' or '.join(self.expected)}, found {found!r}")


def tokenize(text: str) -> list:
    tokens, line, col, pos = [], 1, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(Span(line, col), ["token"], text[pos])
        kind, lexeme = m.lastgroup, m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind == "ident" and lexeme in KEYWORDS:
                kind = "kw"
            if kind not in ("ws", "comment"):
                tokens.append(Token(kind, lexeme, Span(line, col)))
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, col)))
    return tokens


_ATOM_START_KW = {"unit", "fun", "tfun"}


class _Parser:
    def __init__(self, tokens: list):
        self.toks = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "kw") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error([repr(text)])
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.error(["identifier"])
        return self.advance()

    def error(self, expected):
        t = self.tok
        raise ParseError(t.span, expected, t.text or "end of input")

    # -- terms -----------------------------------------------------------

    def program(self) -> Term:
        if self.tok.kind == "eof":
            self.error(["term"])
        t = self.expr()
        if self.tok.kind != "eof":
            self.error(["end of input"])
        return t

    def expr(self) -> Term:
        start = self.tok.span
        if self.at("val"):
            self.advance()
            name = self.ident().text
            annot = None
            if self.at(":"):
                self.advance()
                annot = self.qtype()
            self.expect("=")
            rhs = self.assign()
            self.expect(";")
            return Let(name, rhs, self.expr(), annot, span=start)
        first = self.assign()
        if self.at(";"):
            self.advance()
            if self.tok.kind == "eof" or self.at(")") or self.at("}"):
                return first
            return Let("_", first, self.expr(), span=start)
        return first

    def assign(self) -> Term:
        start = self.tok.span
        target = self.unary()
        if self.at(":="):
            self.advance()
            return Assign(target, self.assign(), span=start)
        return target

    def unary(self) -> Term:
        start = self.tok.span
        if self.at("ref"):
            self.advance()
            referent = None
            if self.at("["):
                self.advance()
                referent = self.qtype()
                self.expect("]")
            return RefNew(self.unary(), referent, span=start)
        if self.at("!"):
            self.advance()
            return Deref(self.unary(), span=start)
        if self.at("free"):
            self.advance()
            return Free(self.unary(), span=start)
        if self.at("move"):
            self.advance()
            return Move(self.unary(), span=start)
        return self.app()

    def starts_atom(self) -> bool:
        t = self.tok
        return (t.kind in ("int", "loc", "ident")
                or (t.kind == "kw" and t.text in _ATOM_START_KW)
                or (t.kind == "sym" and t.text == "("))

    def app(self) -> Term:
        start = self.tok.span
        t = self.atom()
        while True:
            if self.starts_atom():
                t = App(t, self.atom(), span=start)
            elif self.at("["):
                self.advance()
                arg = self.qtype()
                self.expect("]")
                t = TApp(t, arg, span=start)
            else:
                return t

    def atom(self) -> Term:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return IntLit(int(t.text), span=t.span)
        if t.kind == "loc":
            self.advance()
            return LocLit(Loc(int(t.text[1:])), span=t.span)
        if t.kind == "ident":
            self.advance()
            return Var(t.text, span=t.span)
        if self.at("unit"):
            self.advance()
            return UnitLit(span=t.span)
        if self.at("("):
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if self.at("fun"):
            return self.fun()
        if self.at("tfun"):
            return self.tfun()
        self.error(["term"])

    def fun(self) -> Abs:
        start = self.expect("fun").span
        f = self.ident().text
        self.expect("(")
        x = self.ident().text
        self.expect(":")
        domain = self.qtype()
        self.expect(")")
        capture = self.qual() if self.at("^") else None
        latent = result = None
        if self.at("->"):
            self.advance()
            if self.at("<"):
                latent = self.effect()
            if not self.at("{"):
                result = self.qtype()
        body = self.block()
        return Abs(f, x, domain, body, latent, result, capture, span=start)

    def tfun(self) -> TAbs:
        start = self.expect("tfun").span
        f = self.ident().text
        X, x, bound = self.tbinder()
        capture = self.qual() if self.at("^") else None
        return TAbs(f, X, x, bound, self.block(), capture, span=start)

    def tbinder(self):
        self.expect("[")
        X = self.ident().text
        self.expect("^")
        x = self.ident().text
        self.expect("<:")
        bound = self.qtype()
        self.expect("]")
        return X, x, bound

    def block(self) -> Term:
        self.expect("{")
        body = self.expr()
        self.expect("}")
        return body

    # -- types -----------------------------------------------------------

    def qtype(self) -> QType:
        ty = self.type_()
        return QType(ty, self.qual() if self.at("^") else EMPTY)

    def qual(self) -> Qualifier:
        self.expect("^")
        return self.qual_set()

    def qual_set(self) -> Qualifier:
        self.expect("{")
        atoms, fresh = set(), False
        while not self.at("}"):
            t = self.tok
            if self.at("*"):
                fresh = True
                self.advance()
            elif t.kind == "ident":
                atoms.add(self.advance().text)
            elif t.kind == "loc":
                atoms.add(Loc(int(self.advance().text[1:])))
            else:
                self.error(["identifier", "location", "'*'"])
            if not self.at("}"):
                self.expect(",")
        self.advance()
        return Qualifier(frozenset(atoms), fresh)

    def effect(self) -> Effect:
        self.expect("<")
        use, kill = frozenset(), frozenset()
        while not self.at(">"):
            label = self.ident()
            if label.text not in ("u", "k"):
                raise ParseError(label.span, ["'u'", "'k'"], label.text)
            self.expect(":")
            q = self.qual_set()
            if q.fresh:
                raise ParseError(label.span, ["effect qualifier without '*'"], "*")
            if label.text == "u":
                use = q.atoms
            else:
                kill = q.atoms
            if not self.at(">"):
                self.expect(",")
        self.advance()
        return Effect(use, kill)

    def arrow_tail(self):
        self.expect("->")
        latent = self.effect() if self.at("<") else PURE
        return latent, self.qtype()

    def type_(self):
        t = self.tok
        if self.at("Unit"):
            self.advance()
            return UnitT()
        if self.at("Int"):
            self.advance()
            return IntT()
        if self.at("Top"):
            self.advance()
            return TopT()
        if self.at("Ref"):
            self.advance()
            self.expect("[")
            q = self.qtype()
            self.expect("]")
            return Ref(q.ty, q.qual)
        if self.at("forall"):
            self.advance()
            f = self.ident().text
            X, x, bound = self.tbinder()
            latent, body = self.arrow_tail()
            return All(f, X, x, bound, latent, body)
        if self.at("("):
            self.advance()
            ty = self.type_()
            self.expect(")")
            return ty
        if t.kind == "ident":
            self.advance()
            if not self.at("("):
                return TVar(t.text)
            self.advance()
            x = self.ident().text
            self.expect(":")
            domain = self.qtype()
            self.expect(")")
            latent, codomain = self.arrow_tail()
            return Fun(t.text, x, domain, latent, codomain)
        self.error(["type"])


def parse(text: str) -> Term:
    return _Parser(tokenize(text)).program()


def parse_qtype(text: str) -> QType:
    p = _Parser(tokenize(text))
    q = p.qtype()
    if p.tok.kind != "eof":
        p.error(["end of input"])
    return q


@dataclass(frozen=True)
class SourceProgram:
    path: Optional[Path]
    text: str
    term: Term


def load(path) -> SourceProgram:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return SourceProgram(path, text, parse(text))
