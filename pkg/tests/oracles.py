"""Brute-force reference implementations used to cross-check the library.

Everything here works by naive closure over single rewriting steps on
canonical bunches, using only the canonical constructors ``add``/``mult``.
None of it calls the relation code it is compared against.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

from bunchkit.bunch import EMP, Add, Layer, Leaf, Mult, add, mult
from bunchkit.formula import Atom, MTop, Top

P, Q = Leaf(Atom("p")), Leaf(Atom("q"))
HOLE = Leaf(Atom("hole_"))


def join(cls, items):
    return add(*items) if cls is Add else mult(*items)


@lru_cache(maxsize=None)
def bunches_with(n: int, alphabet: tuple = (P, Q, EMP)) -> frozenset:
    """Every canonical bunch with exactly ``n`` leaves from ``alphabet``."""
    if n == 1:
        return frozenset(alphabet)
    out = set()
    for k in range(1, n):
        for a in bunches_with(k, alphabet):
            for b in bunches_with(n - k, alphabet):
                out.add(add(a, b))
                out.add(mult(a, b))
    return frozenset(out)


def universe(max_leaves: int, alphabet: tuple = (P, Q, EMP)) -> list:
    out = set()
    for n in range(1, max_leaves + 1):
        out |= bunches_with(n, alphabet)
    return sorted(out)


def size(b) -> int:
    return 1 if isinstance(b, Leaf) else sum(size(c) for c in b.children)


def proper_subsets(items: tuple, min_size: int = 1):
    """Index tuples of every non-empty proper subset (duplicates included)."""
    n = len(items)
    for k in range(min_size, n):
        yield from combinations(range(n), k)


def rewrite_children(b, rewrite):
    """One ``rewrite`` step applied at any node: the step's results for the
    node itself, plus the results of stepping inside one child."""
    out = set(rewrite(b))
    if isinstance(b, Layer):
        kids = b.children
        for i, c in enumerate(kids):
            rest = kids[:i] + kids[i + 1:]
            for c2 in rewrite_children(c, rewrite):
                out.add(join(type(b), rest + (c2,)))
    return out


def closure(start, step) -> frozenset:
    seen = {start}
    todo = [start]
    while todo:
        x = todo.pop()
        for y in step(x):
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return frozenset(seen)


# -- additive deletion -------------------------------------------------------

def _drop_additive(b):
    """Replace an additive layer by a non-empty proper part of it."""
    if not isinstance(b, Add):
        return []
    return [add(*(b.children[i] for i in keep)) for keep in proper_subsets(b.children)]


@lru_cache(maxsize=None)
def prune_oracle(b) -> frozenset:
    """All ``a`` with ``a`` obtained from ``b`` by deleting additive parts."""
    return closure(b, lambda x: rewrite_children(x, _drop_additive))


# -- padding -----------------------------------------------------------------

def _pads(budget: int):
    yield EMP
    for n in range(1, budget):
        for y in bunches_with(n):
            yield add(EMP, y)


def _insert_padding(b, max_leaves: int):
    """``X`` becomes ``X, (emp; Y)`` for any node or part of a layer."""
    room = max_leaves - size(b)
    if room < 1:
        return set()
    pads = list(_pads(room))

    def at(node):
        out = {mult(node, pad) for pad in pads}
        if isinstance(node, Layer):
            kids = node.children
            for sel in proper_subsets(kids, 2):
                part = join(type(node), [kids[i] for i in sel])
                rest = [kids[i] for i in range(len(kids)) if i not in sel]
                out |= {join(type(node), rest + [mult(part, pad)]) for pad in pads}
        return out

    return {x for x in rewrite_children(b, at) if size(x) <= max_leaves}


@lru_cache(maxsize=None)
def padding_oracle(b, max_leaves: int) -> frozenset:
    """Every essence of ``b`` with at most ``max_leaves`` leaves."""
    return closure(b, lambda x: _insert_padding(x, max_leaves))


# -- representing candidates -----------------------------------------------

def _hat_steps(b):
    # Γ1 from Γ1;Γ2 at the top, and Γ1,Γ2 from Γ1,(Γ2;Γ3) on the top spine
    out = list(_drop_additive(b))
    if isinstance(b, Mult):
        kids = b.children
        for i, c in enumerate(kids):
            rest = kids[:i] + kids[i + 1:]
            for smaller in _drop_additive(c):
                out.append(mult(*rest, smaller))
    return out


def hat_oracle(b) -> frozenset:
    return closure(b, _hat_steps)


def pair_key(x, y) -> tuple:
    return tuple(sorted([x.key, y.key]))


def pairs_of(members) -> set:
    """Unit pairs and two-group splits of the top ``,`` layer of each member."""
    out = set()
    for s in members:
        out.add(pair_key(s, EMP))
        if isinstance(s, Mult):
            kids = s.children
            for sel in proper_subsets(kids):
                rest = [kids[i] for i in range(len(kids)) if i not in sel]
                out.add(pair_key(mult(*(kids[i] for i in sel)), mult(*rest)))
    return out


def rep_candidates_oracle(b) -> set:
    return pairs_of(hat_oracle(b))


def candidates_oracle(b) -> set:
    return pairs_of(prune_oracle(b))


# -- contexts ------------------------------------------------------------------

def occurrences_oracle(b) -> set:
    """``(X, C[hole], from_mult_part)`` for every way to write ``b`` as C[X]."""
    out = {(b, HOLE, False)}
    if isinstance(b, Layer):
        kids = b.children
        cls = type(b)
        for sel in proper_subsets(kids, 2):
            rest = [kids[i] for i in range(len(kids)) if i not in sel]
            out.add((join(cls, [kids[i] for i in sel]), join(cls, rest + [HOLE]), cls is Mult))
        for i, c in enumerate(kids):
            rest = list(kids[:i] + kids[i + 1:])
            for x, ctx, flag in occurrences_oracle(c):
                out.add((x, join(cls, rest + [ctx]), flag))
    return out


def plug_raw(b, path: tuple, select, sub):
    """Plug without canonicalizing, then normalize once at the end."""
    from bunchkit.bunch import normalize, raw_layer

    def go(node, path):
        if not path:
            if select is None:
                return sub
            kids = [c for i, c in enumerate(node.children) if i not in select]
            return raw_layer(type(node), kids + [sub])
        kids = list(node.children)
        kids[path[0]] = go(kids[path[0]], path[1:])
        return raw_layer(type(node), kids)

    return normalize(go(b, path))


# -- LBI shrinking steps -----------------------------------------------------

TOP = Leaf(Top())
UNIT_EMP = Leaf(MTop())


def shrink_oracle(b, rules: tuple) -> frozenset:
    """Closure of single WkL / EqAnt1Down / EqAnt2Down steps."""

    def step(node):
        out = []
        if isinstance(node, Add):
            kids = node.children
            for keep in proper_subsets(kids):
                kept = [kids[i] for i in keep]
                dropped = [kids[i] for i in range(len(kids)) if i not in keep]
                if "WkL" in rules or ("EqAnt1Down" in rules and dropped == [TOP]):
                    out.append(add(*kept))
        if isinstance(node, Mult) and "EqAnt2Down" in rules:
            kids = node.children
            for i, c in enumerate(kids):
                if c == UNIT_EMP:
                    out.append(mult(*(kids[:i] + kids[i + 1:])))
        return out

    return closure(b, lambda x: rewrite_children(x, step))
