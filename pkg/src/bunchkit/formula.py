"""Propositional BI formulas: syntax tree, parser, printer and size.

Concrete syntax (ASCII):

    atom      [a-z][a-z0-9_]*   (except the keywords below)
    top       additive truth
    bot       falsum
    emp       multiplicative unit
    /\\  \\/  *     conjunction, disjunction, separating conjunction
    ->  --*        implication, magic wand (``-*`` is accepted as well)

``/\\``, ``\\/`` and ``*`` bind tighter than ``->`` and ``--*``.  Chains of a
single tight connective associate to the left, chains of a single loose
connective associate to the right.  Two different connectives of the same
binding strength cannot be mixed without parentheses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache


class Formula:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True, slots=True)
class Top(Formula):
    pass


@dataclass(frozen=True, slots=True)
class Bot(Formula):
    pass


@dataclass(frozen=True, slots=True)
class MTop(Formula):
    pass


@dataclass(frozen=True, slots=True)
class And(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True, slots=True)
class Or(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True, slots=True)
class Imp(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True, slots=True)
class Star(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True, slots=True)
class Wand(Formula):
    l: Formula
    r: Formula


TOP, BOT, MTOP = Top(), Bot(), MTop()
BINARY = (And, Or, Star, Imp, Wand)
TIGHT = {And: "/\\", Or: "\\/", Star: "*"}
LOOSE = {Imp: "->", Wand: "--*"}
SYMBOL = {**TIGHT, **LOOSE}
KEYWORDS = {"top": TOP, "bot": BOT, "emp": MTOP}
ATOM_RE = re.compile(r"[a-z][a-z0-9_]*\Z")


class ParseError(ValueError):
    """Raised on malformed input; ``offset`` is a 0-based byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.message = message
        self.offset = offset


class AmbiguityError(ParseError):
    pass


def atom(name: str) -> Atom:
    if not ATOM_RE.match(name) or name in KEYWORDS:
        raise ValueError(f"not an atom name: {name!r}")
    return Atom(name)


# -- tokens -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<sym>--\*|-\*|->|/\\|\\/|\|-|[*;,()])|(?P<word>[a-z][a-z0-9_]*))"
)
_OPS = {"/\\": And, "\\/": Or, "*": Star, "->": Imp, "--*": Wand, "-*": Wand}


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # "sym", "word" or "eof"
    text: str
    offset: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    byte = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            byte += len(text[pos].encode())
            pos += 1
        if pos == len(text):
            tokens.append(Token("eof", "", byte))
            return tokens
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", byte)
        kind = "sym" if m.group("sym") else "word"
        tok = m.group(kind)
        tokens.append(Token(kind, tok, byte))
        byte += len(tok.encode())
        pos = m.end()


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind == "eof":
            raise ParseError(f"expected {text!r}, found {self.describe()}", self.tok.offset)
        return self.advance()

    def describe(self) -> str:
        return "end of input" if self.tok.kind == "eof" else repr(self.tok.text)

    def formula(self) -> Formula:
        return self._chain(loose=True)

    def _chain(self, loose: bool) -> Formula:
        group = (Imp, Wand) if loose else (And, Or, Star)
        operands = [self._chain(False) if loose else self._primary()]
        ops: list[tuple[type, Token]] = []
        while self.tok.kind == "sym" and _OPS.get(self.tok.text) in group:
            tok = self.advance()
            cls = _OPS[tok.text]
            if ops and ops[0][0] is not cls:
                raise AmbiguityError(
                    f"{SYMBOL[ops[0][0]]!r} and {SYMBOL[cls]!r} mixed without parentheses",
                    tok.offset,
                )
            ops.append((cls, tok))
            operands.append(self._chain(False) if loose else self._primary())
        if not ops:
            return operands[0]
        cls = ops[0][0]
        if loose:
            result = operands[-1]
            for left in reversed(operands[:-1]):
                result = cls(left, result)
        else:
            result = operands[0]
            for right in operands[1:]:
                result = cls(result, right)
        return result

    def _primary(self) -> Formula:
        tok = self.tok
        if tok.kind == "word":
            self.advance()
            return KEYWORDS.get(tok.text) or Atom(tok.text)
        if tok.text == "(" and tok.kind == "sym":
            self.advance()
            f = self.formula()
            self.expect(")")
            return f
        raise ParseError(f"expected a formula, found {self.describe()}", tok.offset)

    def end(self) -> None:
        if self.tok.kind != "eof":
            raise ParseError(f"unexpected {self.describe()}", self.tok.offset)


def parse_formula(text: str) -> Formula:
    p = _Parser(text)
    f = p.formula()
    p.end()
    return f


# -- printing ---------------------------------------------------------------

@lru_cache(maxsize=None)
def print_formula(f: Formula) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Top):
        return "top"
    if isinstance(f, Bot):
        return "bot"
    if isinstance(f, MTop):
        return "emp"
    cls = type(f)
    left, right = print_formula(f.l), print_formula(f.r)
    if cls in TIGHT:
        if isinstance(f.l, BINARY) and type(f.l) is not cls:
            left = f"({left})"
        if isinstance(f.r, BINARY):
            right = f"({right})"
    else:
        if type(f.l) in LOOSE:
            left = f"({left})"
        if type(f.r) in LOOSE and type(f.r) is not cls:
            right = f"({right})"
    return f"{left} {SYMBOL[cls]} {right}"


def formula_size(f: Formula) -> int:
    if isinstance(f, BINARY):
        return formula_size(f.l) + formula_size(f.r) + 1
    return 1


def subformulas(f: Formula):
    """All subformula occurrences, root first."""
    yield f
    if isinstance(f, BINARY):
        yield from subformulas(f.l)
        yield from subformulas(f.r)


def atoms_of(f: Formula) -> set[str]:
    return {g.name for g in subformulas(f) if isinstance(g, Atom)}


def parse_sequent(text: str):
    """Parse ``<bunch> |- <formula>`` into a normalized Sequent."""
    from .bunch import parse_sequent_tokens

    return parse_sequent_tokens(_Parser(text))
