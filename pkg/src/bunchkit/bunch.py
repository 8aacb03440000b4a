"""Bunches (antecedent trees) in associative-commutative canonical form.

A bunch is a formula leaf, an additive layer (``;``) or a multiplicative
layer (``,``).  Canonical bunches never nest a layer directly inside a layer
of the same kind, never have a layer with fewer than two children, and keep
children sorted by :func:`Bunch.key`.  Equal bunches therefore have equal
representations, and ``==`` on canonical bunches is AC-equality.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from operator import attrgetter
from typing import Iterable, Iterator, Union

from .formula import Formula, MTop, ParseError, parse_formula, print_formula

ADD, MULT = ";", ","


class Bunch:
    __slots__ = ("key", "_hash")

    def __eq__(self, other):
        return isinstance(other, Bunch) and self.key == other.key

    def __lt__(self, other):
        return self.key < other.key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"<{type(self).__name__} {print_bunch(self)}>"

    def __str__(self):
        return print_bunch(self)


class Leaf(Bunch):
    __slots__ = ("f",)

    def __init__(self, f: Formula):
        self.f = f
        self.key = (0, print_formula(f))
        self._hash = hash(self.key)


class Layer(Bunch):
    """Shared behaviour of additive and multiplicative layers."""

    __slots__ = ("children", "canonical")
    kind = 0
    sep = ""

    def __init__(self, children: tuple):
        self.children = children
        self.canonical = False
        self.key = (self.kind, tuple(c.key for c in children))
        self._hash = hash((self.kind, tuple(c._hash for c in children)))


class Add(Layer):
    __slots__ = ()
    kind = 1
    sep = ADD


class Mult(Layer):
    __slots__ = ()
    kind = 2
    sep = MULT


RawBunch = Union[Bunch, Formula]

EMP = Leaf(MTop())


def _as_bunch(x: RawBunch) -> Bunch:
    # bunches built by add/mult are canonical already; raw layers are not
    if isinstance(x, Formula):
        return Leaf(x)
    if isinstance(x, Layer) and not getattr(x, "canonical", False):
        return normalize(x)
    return x


_sort_key = attrgetter("key")


def _layer(cls, items: Iterable[RawBunch]) -> Bunch:
    flat = []
    for item in items:
        b = _as_bunch(item)
        if isinstance(b, cls):
            flat.extend(b.children)
        else:
            flat.append(b)
    if not flat:
        raise ValueError("a bunch cannot be empty")
    if len(flat) == 1:
        return flat[0]
    out = cls(tuple(sorted(flat, key=_sort_key)))
    out.canonical = True
    return out


def add(*items: RawBunch) -> Bunch:
    """Additive combination ``a ; b ; ...`` in canonical form."""
    return _layer(Add, items)


def mult(*items: RawBunch) -> Bunch:
    """Multiplicative combination ``a , b , ...`` in canonical form."""
    return _layer(Mult, items)


def normalize(raw: RawBunch) -> Bunch:
    """Flatten, collapse one-child layers and sort; idempotent."""
    if isinstance(raw, Formula):
        return Leaf(raw)
    if isinstance(raw, Leaf):
        return raw
    if isinstance(raw, Layer):
        return _layer(type(raw), [normalize(c) for c in raw.children])
    raise TypeError(f"cannot normalize {raw!r}")


def raw_layer(cls, children) -> Layer:
    """Build a layer without normalizing (for tests and oracles)."""
    return cls(tuple(children))


def ac_equal(a: Bunch, b: Bunch) -> bool:
    return normalize(a) == normalize(b)


def print_bunch(b: Bunch) -> str:
    if isinstance(b, Leaf):
        return print_formula(b.f)
    parts = []
    for c in b.children:
        s = print_bunch(c)
        parts.append(f"({s})" if isinstance(c, Layer) else s)
    return f"{b.sep} ".join(parts)


def leaves(b: Bunch) -> Counter:
    """Multiset of formula leaves."""
    out = Counter()
    stack = [b]
    while stack:
        x = stack.pop()
        if isinstance(x, Leaf):
            out[x.f] += 1
        else:
            stack.extend(x.children)
    return out


@lru_cache(maxsize=100_000)
def leaf_count(b: Bunch) -> int:
    if isinstance(b, Leaf):
        return 1
    return sum(leaf_count(c) for c in b.children)


def subbunches(b: Bunch) -> Iterator[Bunch]:
    """Every node of the tree (no partial selections), root first."""
    yield b
    if isinstance(b, Layer):
        for c in b.children:
            yield from subbunches(c)


# -- positions --------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Position:
    """A path of child indices, optionally ending in a partial selection.

    ``select`` names a sub-multiset (two or more, but not all, children) of
    the layer reached by ``path``.  Partial selections of additive layers are
    what the search enumerates; multiplicative ones are accepted wherever a
    context hole sits inside a ``,`` layer (cut, LBI splitting rules).
    """

    path: tuple = ()
    select: tuple | None = None

    def to_json(self) -> list:
        out = list(self.path)
        if self.select is not None:
            out.append(list(self.select))
        return out

    @classmethod
    def from_json(cls, data) -> "Position":
        if not isinstance(data, list):
            raise ValueError("position must be a list")
        if data and isinstance(data[-1], list):
            sel = tuple(data[-1])
            if not all(isinstance(i, int) for i in sel):
                raise ValueError("bad selection")
            return cls(tuple(data[:-1]), sel)
        if not all(isinstance(i, int) for i in data):
            raise ValueError("bad path")
        return cls(tuple(data))

    def child(self, i: int) -> "Position":
        return Position(self.path + (i,))


ROOT = Position()


class PositionError(ValueError):
    pass


def _node_at(b: Bunch, path: tuple) -> Bunch:
    for i in path:
        if not isinstance(b, Layer) or not 0 <= i < len(b.children):
            raise PositionError(f"invalid path {path}")
        b = b.children[i]
    return b


def valid_position(b: Bunch, pos: Position) -> bool:
    try:
        node = _node_at(b, pos.path)
    except PositionError:
        return False
    if pos.select is None:
        return True
    sel = pos.select
    return (
        isinstance(node, Layer)
        and 2 <= len(sel) < len(node.children)
        and len(set(sel)) == len(sel)
        and list(sel) == sorted(sel)
        and all(0 <= i < len(node.children) for i in sel)
    )


def sub_at(b: Bunch, pos: Position) -> Bunch:
    if pos.select is None:
        try:
            return _node_at(b, pos.path)
        except PositionError:
            raise PositionError(f"invalid position {pos.to_json()} in {b}") from None
    if not valid_position(b, pos):
        raise PositionError(f"invalid position {pos.to_json()} in {b}")
    node = _node_at(b, pos.path)
    out = type(node)(tuple(node.children[i] for i in pos.select))
    out.canonical = True
    return out


def replace_at(b: Bunch, pos: Position, sub: Bunch | None) -> Bunch:
    """Plug ``sub`` (or nothing, when None) into the hole at ``pos``."""
    if not valid_position(b, pos):
        raise PositionError(f"invalid position {pos.to_json()} in {b}")
    out = _replace(b, pos.path, pos.select, sub)
    if out is None:
        raise PositionError("deleting the whole bunch leaves nothing")
    return out


def _replace(node: Bunch, path: tuple, select, sub):
    if not path:
        if select is None:
            return sub
        rest = [c for i, c in enumerate(node.children) if i not in select]
        if sub is not None:
            rest.append(sub)
        return _layer(type(node), rest)
    i = path[0]
    new_child = _replace(node.children[i], path[1:], select, sub)
    rest = list(node.children[:i]) + list(node.children[i + 1:])
    if new_child is not None:
        rest.append(new_child)
    return _layer(type(node), rest)


def _distinct_indices(children: tuple) -> list[int]:
    return [i for i, c in enumerate(children) if i == 0 or c != children[i - 1]]


def sub_selections(children: tuple, sizes: range) -> Iterator[tuple]:
    """Index tuples of distinct sub-multisets of sorted ``children``."""
    groups: list[list[int]] = []
    for i, c in enumerate(children):
        if groups and children[groups[-1][0]] == c:
            groups[-1].append(i)
        else:
            groups.append([i])

    def rec(g: int, acc: list[int]):
        if g == len(groups):
            if len(acc) in sizes:
                yield tuple(sorted(acc))
            return
        for k in range(len(groups[g]) + 1):
            yield from rec(g + 1, acc + groups[g][:k])

    seen = sorted(rec(0, []), key=lambda t: (len(t), t))
    yield from seen


@lru_cache(maxsize=100_000)
def positions(b: Bunch, partial_mult: bool = False) -> tuple:
    """Every sub-bunch occurrence, up to swapping equal siblings.

    Partial selections are produced for additive layers (and also for
    multiplicative ones when ``partial_mult`` is set).
    """
    out: list[Position] = []

    def walk(node: Bunch, path: tuple):
        out.append(Position(path))
        if not isinstance(node, Layer):
            return
        n = len(node.children)
        if isinstance(node, Add) or partial_mult:
            for sel in sub_selections(node.children, range(2, n)):
                out.append(Position(path, sel))
        for i in _distinct_indices(node.children):
            walk(node.children[i], path + (i,))

    walk(b, ())
    return tuple(out)


@lru_cache(maxsize=100_000)
def leaf_occurrences(b: Bunch) -> tuple:
    """``(position, leaf)`` for every leaf position, in :func:`positions` order."""
    out = []
    for pos in positions(b):
        if pos.select is None:
            node = _node_at(b, pos.path)
            if isinstance(node, Leaf):
                out.append((pos, node))
    return tuple(out)


def parent_path(pos: Position) -> tuple | None:
    if pos.select is not None:
        return pos.path
    return pos.path[:-1] if pos.path else None


# -- sequents ---------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Sequent:
    antecedent: Bunch
    consequent: Formula

    def __str__(self):
        return print_sequent(self)


def sequent(antecedent: RawBunch, consequent: Formula) -> Sequent:
    return Sequent(_as_bunch(antecedent), consequent)


def print_sequent(s: Sequent) -> str:
    return f"{print_bunch(s.antecedent)} |- {print_formula(s.consequent)}"


def parse_bunch(text: str) -> Bunch:
    from .formula import _Parser

    p = _Parser(text)
    b = _bunch(p)
    p.end()
    return b


def parse_sequent_tokens(p) -> Sequent:
    b = _bunch(p)
    p.expect("|-")
    f = p.formula()
    p.end()
    return Sequent(b, f)


def _bunch(p) -> Bunch:
    items = [_item(p)]
    sep = None
    while p.tok.kind == "sym" and p.tok.text in (ADD, MULT):
        tok = p.advance()
        if sep is not None and tok.text != sep:
            raise ParseError(f"{sep!r} and {tok.text!r} mixed without parentheses", tok.offset)
        sep = tok.text
        items.append(_item(p))
    if sep is None:
        return items[0]
    return add(*items) if sep == ADD else mult(*items)


def _item(p) -> Bunch:
    start = p.i
    try:
        f = p.formula()
        if p.tok.text in (ADD, MULT, ")", "|-") or p.tok.kind == "eof":
            return Leaf(f)
        raise ParseError(f"unexpected {p.describe()}", p.tok.offset)
    except ParseError as err:
        first = err
        first_at = p.i
    p.i = start
    if p.tok.text != "(":
        raise first
    p.advance()
    try:
        b = _bunch(p)
        p.expect(")")
        return b
    except ParseError as err:
        raise err if p.i >= first_at else first


__all__ = [
    "Bunch", "Leaf", "Add", "Mult", "Layer", "EMP", "Position", "ROOT", "Sequent",
    "add", "mult", "normalize", "ac_equal", "print_bunch", "parse_bunch", "leaves",
    "leaf_count", "positions", "sub_at", "replace_at", "valid_position", "sequent",
    "print_sequent", "parse_formula", "subbunches", "PositionError",
]
