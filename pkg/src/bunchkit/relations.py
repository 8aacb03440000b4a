"""Structural relations between bunches.

* padding stripping: the inverse of inserting ``(emp ; X)`` next to a
  sub-bunch inside a ``,`` layer (an essence of ``b`` is any bunch that strips
  back to ``b``);
* ``preceq``: deletion of additive material anywhere in a bunch;
* candidates: resource splits used by the multiplicative rules, either the
  full set (membership test only) or the search-sufficient representatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .bunch import EMP, Add, Bunch, Leaf, Mult, add, mult, sub_selections


def is_padding(b: Bunch) -> bool:
    """``emp`` itself, or an additive layer with a direct ``emp`` leaf."""
    return b == EMP or (isinstance(b, Add) and EMP in b.children)


@lru_cache(maxsize=200_000)
def strip_padding_cores(b: Bunch) -> frozenset:
    """All bunches reachable from ``b`` by deleting padding from ``,`` layers."""
    if isinstance(b, Leaf):
        return frozenset([b])
    child_sets = [strip_padding_cores(c) for c in b.children]
    if isinstance(b, Add):
        return frozenset(add(*combo) for combo in product(*child_sets))
    options = []
    for cs in child_sets:
        opts = list(cs)
        if any(is_padding(x) for x in cs):
            opts.append(None)
        options.append(opts)
    out = set()
    for combo in product(*options):
        kept = [x for x in combo if x is not None]
        if kept:
            out.add(mult(*kept))
    return frozenset(out)


def is_essence_of(e: Bunch, b: Bunch) -> bool:
    """True when ``e`` is ``b`` with (possibly nested) padding inserted."""
    return b in strip_padding_cores(e)


def exposes(core: Bunch, f) -> bool:
    """``core`` is the leaf ``f`` or an additive layer with an ``f`` leaf."""
    leaf = Leaf(f)
    return core == leaf or (isinstance(core, Add) and leaf in core.children)


@lru_cache(maxsize=200_000)
def exposing_cores(b: Bunch, f) -> tuple:
    return tuple(sorted(c for c in strip_padding_cores(b) if exposes(c, f)))


# -- additive deletion ------------------------------------------------------

@lru_cache(maxsize=200_000)
def prune_closure(b: Bunch) -> frozenset:
    """``{a : preceq(a, b)}``."""
    if isinstance(b, Leaf):
        return frozenset([b])
    child_sets = [prune_closure(c) for c in b.children]
    if isinstance(b, Mult):
        return frozenset(mult(*combo) for combo in product(*child_sets))
    out = set()
    for sel in sub_selections(b.children, range(1, len(b.children) + 1)):
        for combo in product(*(child_sets[i] for i in sel)):
            out.add(add(*combo))
    return frozenset(out)


@lru_cache(maxsize=200_000)
def preceq(a: Bunch, b: Bunch) -> bool:
    """``a`` is obtained from ``b`` by deleting additive material."""
    if a == b:
        return True
    if isinstance(b, Leaf):
        return False
    if isinstance(b, Mult):
        # a pruned ';' child may itself become a ',' group and flatten into a
        return isinstance(a, Mult) and _grouping(a.children, b.children)
    if isinstance(a, Add):
        return len(a.children) <= len(b.children) and _matching(a.children, b.children, preceq)
    return any(preceq(a, c) for c in b.children)


def _matching(small, big, rel) -> bool:
    """Injective assignment of each of ``small`` to a related member of ``big``."""
    used = [False] * len(big)

    def go(i):
        if i == len(small):
            return True
        for j, target in enumerate(big):
            if not used[j] and rel(small[i], target):
                used[j] = True
                if go(i + 1):
                    return True
                used[j] = False
        return False

    return go(0)


def _grouping(small: tuple, big: tuple) -> bool:
    """Split ``small`` into one non-empty group per member of ``big``, each
    group ``preceq`` its member."""
    if not big:
        return not small
    c, rest = big[0], big[1:]
    for sel in sub_selections(small, range(1, len(small) - len(rest) + 1)):
        group = mult(*(small[i] for i in sel))
        if preceq(group, c):
            left = tuple(x for i, x in enumerate(small) if i not in sel)
            if _grouping(left, rest):
                return True
    return False


# -- candidates -------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class CandidatePair:
    """An unordered resource split; a unit pair has ``right == EMP``."""

    left: Bunch
    right: Bunch

    @staticmethod
    def of(x: Bunch, y: Bunch) -> "CandidatePair":
        if x == EMP and y != EMP:
            x, y = y, x
        elif y != EMP and y.key < x.key:
            x, y = y, x
        return CandidatePair(x, y)

    def assignments(self):
        """Both (Re_i, Re_j) orders, without repeating a symmetric pair."""
        yield self.left, self.right
        if self.left != self.right:
            yield self.right, self.left


def _component_options(c: Bunch) -> frozenset:
    """Multisets of spine components a single component can be pruned into."""
    return _component_options_cached(c)


@lru_cache(maxsize=200_000)
def _component_options_cached(c: Bunch) -> frozenset:
    out = {(c,)}
    if isinstance(c, Add):
        for sel in sub_selections(c.children, range(1, len(c.children))):
            out |= _spine_options(add(*(c.children[i] for i in sel)))
    return frozenset(out)


def _spine_options(x: Bunch) -> set:
    if isinstance(x, Mult):
        out = set()
        for combo in product(*(_component_options(c) for c in x.children)):
            out.add(tuple(sorted((y for part in combo for y in part), key=lambda b: b.key)))
        return out
    return set(_component_options(x))


@lru_cache(maxsize=100_000)
def rep_closure(g: Bunch) -> frozenset:
    """The hat-preceq closure: prune the top ``;`` layer, then hereditarily
    prune the ``;`` tops of the components of the top ``,`` spine."""
    tops = [g]
    if isinstance(g, Add):
        tops = [add(*(g.children[i] for i in sel))
                for sel in sub_selections(g.children, range(1, len(g.children) + 1))]
    out = set()
    for t in tops:
        if isinstance(t, Mult):
            out |= {mult(*parts) for parts in _spine_options(t)}
        else:
            out.add(t)
    return frozenset(out)


def _splits(m: Mult):
    """Two-group partitions of a ``,`` layer, up to swapping the groups."""
    kids = m.children
    n = len(kids)
    seen = set()
    for sel in sub_selections(kids, range(1, n)):
        rest = [i for i in range(n) if i not in sel]
        pair = CandidatePair.of(mult(*(kids[i] for i in sel)), mult(*(kids[i] for i in rest)))
        if pair not in seen:
            seen.add(pair)
            yield pair


@lru_cache(maxsize=100_000)
def rep_candidates(g: Bunch) -> tuple:
    """Representing candidate pairs of ``g`` in a deterministic order."""
    out = set()
    for s in rep_closure(g):
        out.add(CandidatePair.of(s, EMP))
        if isinstance(s, Mult):
            out.update(_splits(s))
    return tuple(sorted(out, key=lambda p: (p.left.key, p.right.key)))


def is_candidate_pair(pair: CandidatePair, g: Bunch) -> bool:
    """Membership in the full candidate set of ``g``."""
    x, y = pair.left, pair.right
    if y == EMP and preceq(x, g):
        return True
    if x == EMP and preceq(y, g):
        return True
    return preceq(mult(x, y), g)


@lru_cache(maxsize=20_000)
def all_candidates(g: Bunch) -> tuple:
    """Every candidate pair of ``g`` (exponential; used by transformers)."""
    out = set()
    for s in prune_closure(g):
        out.add(CandidatePair.of(s, EMP))
        if isinstance(s, Mult):
            out.update(_splits(s))
    return tuple(sorted(out, key=lambda p: (p.left.key, p.right.key)))
