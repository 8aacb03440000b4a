"""The reference calculus LBI: explicit weakening, contraction and unit laws.

Derivations share :class:`bunchkit.lbiz.Derivation` and
:class:`bunchkit.lbiz.Witness`.  Conventions for the witness fields:

* logical left rules: ``position`` is the principal leaf; ``ImpL``/``WandL``
  put the side bunch Γ1 in ``gamma_prime``;
* ``StarR``: ``candidate`` is ``(Γ1, Γ2)``;
* ``WkL``: ``position`` is the deleted Γ2; ``CtrL``: the duplicated Γ1;
* ``EqAnt1Up``/``EqAnt2Up`` (premise gains ``;top`` / ``,emp`` next to the
  occurrence at ``position``); ``EqAnt1Down``/``EqAnt2Down`` (premise drops
  the unit leaf at ``position``);
* ``Cut``: ``position`` is the Γ1 occurrence in the conclusion.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable

from .bunch import (
    EMP, ROOT, Add, Bunch, Layer, Leaf, Mult, Position, Sequent, add, leaf_count, mult,
    positions, replace_at, sub_at, sub_selections, subbunches,
)
from .formula import TOP, And, Bot, Imp, MTop, Or, Star, Top, Wand, subformulas
from .lbiz import (
    INVERTIBLE, CheckReport, Derivation, Instance, Proved, StepError, Unknown, Witness, _arity, _need,
    _premise_is, _principal_leaf, _remove_multiset, _sub, check_cut_step, iter_nodes,
)

LBI_RULES = (
    "Id", "Cut", "BotL", "TopR", "MTopR", "AndL", "OrL", "ImpL", "StarL", "WandL",
    "AndR", "OrR1", "OrR2", "ImpR", "StarR", "WandR", "WkL", "CtrL",
    "EqAnt1Up", "EqAnt1Down", "EqAnt2Up", "EqAnt2Down",
)
STRUCTURAL = ("WkL", "CtrL", "EqAnt1Up", "EqAnt1Down", "EqAnt2Up", "EqAnt2Down")
TOP_LEAF = Leaf(TOP)


def _family(rule: str) -> str:
    return "OrR" if rule in ("OrR1", "OrR2") else rule


def _components(b: Bunch, cls) -> list:
    return list(b.children) if isinstance(b, cls) else [b]


def _parent(ant: Bunch, pos: Position):
    """(parent layer, its position) of a full-node position, or (None, None)."""
    if pos.select is not None or not pos.path:
        return None, None
    ppos = Position(pos.path[:-1])
    return sub_at(ant, ppos), ppos


# -- premises of the context rules -------------------------------------------

def imp_left(ant: Bunch, pos: Position, gamma1: Bunch):
    """``Γ(Γ1; F->G)``: returns (Γ1 ⊢ F antecedent, Γ(Γ1; G)) or None."""
    parent, _ = _parent(ant, pos)
    leaf = sub_at(ant, pos)
    if not isinstance(parent, Add) or not isinstance(leaf, Leaf) or not isinstance(leaf.f, Imp):
        return None
    rest = list(parent.children)
    rest.remove(leaf)
    if _remove_multiset(rest, _components(gamma1, Add)) is None:
        return None
    return gamma1, replace_at(ant, pos, Leaf(leaf.f.r))


def wand_left(ant: Bunch, pos: Position, gamma1: Bunch):
    """``Γ(Γ1, F--*G)``: returns the right premise antecedent Γ(G) or None."""
    parent, ppos = _parent(ant, pos)
    leaf = sub_at(ant, pos)
    if not isinstance(parent, Mult) or not isinstance(leaf, Leaf) or not isinstance(leaf.f, Wand):
        return None
    rest = list(parent.children)
    rest.remove(leaf)
    rest = _remove_multiset(rest, _components(gamma1, Mult))
    if rest is None:
        return None
    return replace_at(ant, ppos, mult(*rest, Leaf(leaf.f.r)))


def contract(ant: Bunch, pos: Position) -> Bunch:
    x = sub_at(ant, pos)
    return replace_at(ant, pos, add(x, x))


def unit_up(ant: Bunch, pos: Position, unit: Leaf) -> Bunch:
    join = add if unit == TOP_LEAF else mult
    return replace_at(ant, pos, join(sub_at(ant, pos), unit))


def unit_down(ant: Bunch, pos: Position, unit: Leaf):
    """Drop the unit leaf at ``pos`` from its layer, or None if not applicable."""
    cls = Add if unit == TOP_LEAF else Mult
    parent, _ = _parent(ant, pos)
    if not isinstance(parent, cls) or sub_at(ant, pos) != unit:
        return None
    return replace_at(ant, pos, None)


def _deletable(ant: Bunch, pos: Position) -> bool:
    """A WkL target: a strict part of an additive layer."""
    if pos.select is not None:
        return isinstance(sub_at(ant, Position(pos.path)), Add)
    parent, _ = _parent(ant, pos)
    return isinstance(parent, Add)


# -- checker ---------------------------------------------------------------

def check_step(d: Derivation) -> None:
    rule, s, w = d.rule, d.conclusion, d.witness
    ant, h = s.antecedent, s.consequent
    _need(rule in LBI_RULES, f"unknown LBI rule {rule!r}")
    if rule == "Cut":
        _need(d.witness.gamma_prime is None, "LBI Cut has no shared part")
        d2 = Derivation("Cut", s, w, d.premises)
        return check_cut_step(d2)
    if rule == "Id":
        _arity(d, 0)
        _need(ant == Leaf(h), "Id needs the antecedent to be exactly the consequent")
    elif rule == "MTopR":
        _arity(d, 0)
        _need(ant == EMP and isinstance(h, MTop), "MTopR is exactly emp |- emp")
    elif rule == "TopR":
        _arity(d, 0)
        _need(isinstance(h, Top), "TopR needs consequent top")
    elif rule == "BotL":
        _arity(d, 0)
        _principal_leaf(d, Bot)
    elif rule in ("AndL", "StarL"):
        _arity(d, 1)
        f = _principal_leaf(d, And if rule == "AndL" else Star)
        join = add if rule == "AndL" else mult
        _premise_is(d, 0, Sequent(replace_at(ant, w.position, join(f.l, f.r)), h))
    elif rule == "OrL":
        _arity(d, 2)
        f = _principal_leaf(d, Or)
        _premise_is(d, 0, Sequent(replace_at(ant, w.position, Leaf(f.l)), h))
        _premise_is(d, 1, Sequent(replace_at(ant, w.position, Leaf(f.r)), h))
    elif rule == "AndR":
        _arity(d, 2)
        _need(isinstance(h, And), "AndR needs a conjunction")
        _premise_is(d, 0, Sequent(ant, h.l))
        _premise_is(d, 1, Sequent(ant, h.r))
    elif rule in ("OrR1", "OrR2"):
        _arity(d, 1)
        _need(isinstance(h, Or), f"{rule} needs a disjunction")
        _premise_is(d, 0, Sequent(ant, h.l if rule == "OrR1" else h.r))
    elif rule == "ImpR":
        _arity(d, 1)
        _need(isinstance(h, Imp), "ImpR needs an implication")
        _premise_is(d, 0, Sequent(add(ant, h.l), h.r))
    elif rule == "WandR":
        _arity(d, 1)
        _need(isinstance(h, Wand), "WandR needs a wand")
        _premise_is(d, 0, Sequent(mult(ant, h.l), h.r))
    elif rule == "StarR":
        _arity(d, 2)
        _need(isinstance(h, Star), "StarR needs a separating conjunction")
        _need(w.candidate is not None and None not in w.candidate, "missing split")
        g1, g2 = w.candidate
        _need(mult(g1, g2) == ant, "the split does not recombine to the antecedent")
        _premise_is(d, 0, Sequent(g1, h.l))
        _premise_is(d, 1, Sequent(g2, h.r))
    elif rule == "ImpL":
        _arity(d, 2)
        f = _principal_leaf(d, Imp)
        _need(w.gamma_prime is not None, "missing Γ1")
        out = imp_left(ant, w.position, w.gamma_prime)
        _need(out is not None, "Γ1 is not an additive sibling of the implication")
        _premise_is(d, 0, Sequent(out[0], f.l))
        _premise_is(d, 1, Sequent(out[1], h))
    elif rule == "WandL":
        _arity(d, 2)
        f = _principal_leaf(d, Wand)
        _need(w.gamma_prime is not None, "missing Γ1")
        out = wand_left(ant, w.position, w.gamma_prime)
        _need(out is not None, "Γ1 is not a multiplicative sibling of the wand")
        _premise_is(d, 0, Sequent(w.gamma_prime, f.l))
        _premise_is(d, 1, Sequent(out, h))
    elif rule == "WkL":
        _arity(d, 1)
        _sub(ant, w.position)
        _need(_deletable(ant, w.position), "WkL only deletes part of an additive layer")
        _premise_is(d, 0, Sequent(replace_at(ant, w.position, None), h))
    elif rule == "CtrL":
        _arity(d, 1)
        _sub(ant, w.position)
        _premise_is(d, 0, Sequent(contract(ant, w.position), h))
    elif rule in ("EqAnt1Up", "EqAnt2Up"):
        _arity(d, 1)
        _sub(ant, w.position)
        unit = TOP_LEAF if rule == "EqAnt1Up" else EMP
        _premise_is(d, 0, Sequent(unit_up(ant, w.position, unit), h))
    elif rule in ("EqAnt1Down", "EqAnt2Down"):
        _arity(d, 1)
        _sub(ant, w.position)
        unit = TOP_LEAF if rule == "EqAnt1Down" else EMP
        out = unit_down(ant, w.position, unit)
        _need(out is not None, f"no removable {unit} at the position")
        _premise_is(d, 0, Sequent(out, h))


def check_derivation(d: Derivation) -> CheckReport:
    for path, node in iter_nodes(d):
        try:
            check_step(node)
        except StepError as err:
            return CheckReport(False, path, str(err))
        except ValueError as err:
            return CheckReport(False, path, f"malformed step: {err}")
    return CheckReport(True)


# -- backward expansion ----------------------------------------------------

@dataclass(frozen=True)
class Caps:
    max_struct_growth: int = 8
    contractible: frozenset = frozenset()  # empty: any sub-bunch may be duplicated


def closure_bunches(s: Sequent) -> frozenset:
    """Sub-bunches of the goal (with additive partial selections) and its
    subformula leaves; the search only duplicates these with CtrL."""
    out = {sub_at(s.antecedent, p) for p in positions(s.antecedent, partial_mult=True)}
    for b in subbunches(s.antecedent):
        if isinstance(b, Leaf):
            out.update(Leaf(f) for f in subformulas(b.f))
    out.update(Leaf(f) for f in subformulas(s.consequent))
    return frozenset(out)


def _leaves_where(ant: Bunch, cls) -> list:
    out = []
    for pos in positions(ant):
        if pos.select is None:
            node = sub_at(ant, pos)
            if isinstance(node, Leaf) and isinstance(node.f, cls):
                out.append(pos)
    return out


def _sibling_choices(parent: Layer, leaf: Bunch, join) -> list:
    from .bunch import sub_selections

    rest = list(parent.children)
    rest.remove(leaf)
    rest = tuple(rest)
    return [join(*(rest[i] for i in sel)) for sel in sub_selections(rest, range(1, len(rest) + 1))]


def lbi_expand(s: Sequent, enabled: Iterable[str] | None = None, caps: Caps = Caps()) -> list[Instance]:
    """Backward instances of every enabled rule (Cut is never generated)."""
    on = set(LBI_RULES if enabled is None else enabled) - {"Cut"}
    ant, h = s.antecedent, s.consequent
    out: list[Instance] = []
    seen = set()

    def emit(rule, witness, premises=()):
        if rule not in on:
            return
        key = tuple(premises) if rule in STRUCTURAL else (rule, tuple(premises))
        if key in seen:
            return
        seen.add(key)
        out.append(Instance(rule, witness, tuple(premises)))

    def grows(b: Bunch) -> bool:
        return leaf_count(b) <= caps.max_struct_growth

    if ant == Leaf(h):
        emit("Id", Witness())
    if ant == EMP and isinstance(h, MTop):
        emit("MTopR", Witness())
    if isinstance(h, Top):
        emit("TopR", Witness())
    for pos in _leaves_where(ant, Bot)[:1]:
        emit("BotL", Witness(pos))

    for pos in _leaves_where(ant, And):
        f = sub_at(ant, pos).f
        emit("AndL", Witness(pos), [Sequent(replace_at(ant, pos, add(f.l, f.r)), h)])
    for pos in _leaves_where(ant, Star):
        f = sub_at(ant, pos).f
        emit("StarL", Witness(pos), [Sequent(replace_at(ant, pos, mult(f.l, f.r)), h)])
    if isinstance(h, Imp):
        emit("ImpR", Witness(), [Sequent(add(ant, h.l), h.r)])
    if isinstance(h, Wand):
        emit("WandR", Witness(), [Sequent(mult(ant, h.l), h.r)])
    for pos in _leaves_where(ant, Or):
        f = sub_at(ant, pos).f
        emit("OrL", Witness(pos), [Sequent(replace_at(ant, pos, Leaf(f.l)), h),
                                   Sequent(replace_at(ant, pos, Leaf(f.r)), h)])
    if isinstance(h, And):
        emit("AndR", Witness(), [Sequent(ant, h.l), Sequent(ant, h.r)])

    if isinstance(h, Or):
        emit("OrR1", Witness(), [Sequent(ant, h.l)])
        emit("OrR2", Witness(), [Sequent(ant, h.r)])
    for pos in _leaves_where(ant, Imp):
        parent, _ = _parent(ant, pos)
        if isinstance(parent, Add):
            leaf = sub_at(ant, pos)
            for g1 in _sibling_choices(parent, leaf, add):
                left, right = imp_left(ant, pos, g1)
                emit("ImpL", Witness(pos, gamma_prime=g1),
                     [Sequent(left, leaf.f.l), Sequent(right, h)])
    for pos in _leaves_where(ant, Wand):
        parent, _ = _parent(ant, pos)
        if isinstance(parent, Mult):
            leaf = sub_at(ant, pos)
            for g1 in _sibling_choices(parent, leaf, mult):
                emit("WandL", Witness(pos, gamma_prime=g1),
                     [Sequent(g1, leaf.f.l), Sequent(wand_left(ant, pos, g1), h)])
    if isinstance(h, Star) and isinstance(ant, Mult):
        from .relations import _splits

        for pair in _splits(ant):
            for g1, g2 in pair.assignments():
                emit("StarR", Witness(candidate=(g1, g2)), [Sequent(g1, h.l), Sequent(g2, h.r)])

    # structural rules that shrink the antecedent
    all_pos = positions(ant)
    # one search step may apply several shrinking structural rules; the
    # derivation spells them out one node each (see shrink_chain)
    shrinking = tuple(r for r in SHRINKING if r in on)
    if shrinking:
        reach = shrink_set(ant, shrinking) - {ant}
        for smaller in sorted(reach, key=lambda b: (leaf_count(b), b.key)):
            out.append(Instance(SHRINK, Witness(), (Sequent(smaller, h),)))

    # structural rules that grow it, within the cap: a unit is only added
    # where a context rule needs a side bunch that is missing
    up = []
    if isinstance(h, Star) and not isinstance(ant, Mult):
        up.append(("EqAnt2Up", ROOT, EMP))
    for pos in _leaves_where(ant, Wand):
        if not isinstance(_parent(ant, pos)[0], Mult):
            up.append(("EqAnt2Up", pos, EMP))
    for pos in _leaves_where(ant, Imp):
        if not isinstance(_parent(ant, pos)[0], Add):
            up.append(("EqAnt1Up", pos, TOP_LEAF))
    for rule, pos, unit in up:
        bigger = unit_up(ant, pos, unit)
        if grows(bigger):
            emit(rule, Witness(pos), [Sequent(bigger, h)])
    for pos in all_pos:
        x = sub_at(ant, pos)
        if caps.contractible and x not in caps.contractible:
            continue
        bigger = contract(ant, pos)
        if grows(bigger):
            emit("CtrL", Witness(pos), [Sequent(bigger, h)])
    return out


SHRINKING = ("WkL", "EqAnt1Down", "EqAnt2Down")
SHRINK = "shrink"  # search-only macro step, never appears in a derivation


@lru_cache(maxsize=50_000)
def _shrink_steps(ant: Bunch, rules: tuple) -> tuple:
    """(smaller antecedent, rule, position) for one shrinking step."""
    out = {}
    for pos in positions(ant):
        for rule in rules:
            if rule == "WkL":
                smaller = replace_at(ant, pos, None) if _deletable(ant, pos) else None
            elif pos.select is None:
                unit = TOP_LEAF if rule == "EqAnt1Down" else EMP
                smaller = unit_down(ant, pos, unit)
            else:
                smaller = None
            if smaller is not None and smaller not in out:
                out[smaller] = (smaller, rule, pos)
    return tuple(out.values())


@lru_cache(maxsize=50_000)
def shrink_set(b: Bunch, rules: tuple) -> frozenset:
    """Antecedents reachable from ``b`` by the shrinking rules (``b`` included).

    Steps in disjoint subtrees commute, so the set is built compositionally:
    shrink each child, then let an additive layer drop children (WkL, or
    EqAnt1Down for ``top``) and a multiplicative one drop ``emp`` results.
    """
    if isinstance(b, Leaf):
        return frozenset([b])
    options = [shrink_set(c, rules) for c in b.children]
    out = set()
    if isinstance(b, Add) and "WkL" in rules:
        for keep in sub_selections(b.children, range(1, len(b.children) + 1)):
            for combo in product(*(options[i] for i in keep)):
                out.add(add(*combo))
        return frozenset(out)
    for combo in product(*options):
        if isinstance(b, Add):
            for keep in _unit_drops(combo, TOP_LEAF, "EqAnt1Down" in rules):
                out.add(add(*(combo[i] for i in keep)))
        else:
            for keep in _unit_drops(combo, EMP, "EqAnt2Down" in rules):
                out.add(mult(*(combo[i] for i in keep)))
    return frozenset(out)


def _unit_drops(combo: tuple, unit: Bunch, allowed: bool):
    """Index tuples keeping every non-unit member and any number of units."""
    units = [i for i, c in enumerate(combo) if c == unit]
    rest = [i for i, c in enumerate(combo) if c != unit]
    if not allowed or not units:
        return [tuple(range(len(combo)))]
    out = []
    for k in range(len(units) + 1):
        keep = sorted(rest + units[:k])
        if keep:
            out.append(tuple(keep))
    return out


def shrink_chain(s: Sequent, top: Derivation, rules: tuple) -> Derivation:
    """Single structural nodes from ``s`` down to ``top``'s conclusion."""
    target = top.conclusion.antecedent
    steps = []
    ant = s.antecedent
    while ant != target:
        for nxt, rule, pos in _shrink_steps(ant, rules):
            if target in shrink_set(nxt, rules):
                break
        else:
            raise ValueError("target is not reachable by shrinking")
        steps.append((ant, rule, pos))
        ant = nxt
    d = top
    for big, rule, pos in reversed(steps):
        d = Derivation(rule, Sequent(big, s.consequent), Witness(pos), (d,))
    return d


# -- bounded search --------------------------------------------------------

class _Budget(Exception):
    pass


class LbiProver:
    """Iterative-deepening search; failures are remembered per remaining depth.

    Without a loop check the depth bound alone keeps the search finite, and a
    failure at remaining depth ``r`` is exact, so it can be reused.
    """

    def __init__(self, max_depth=12, max_nodes=20_000, enabled=None, max_struct_growth=None):
        self.max_depth = max_depth
        self.max_nodes = max_nodes
        self.enabled = frozenset(LBI_RULES if enabled is None else enabled)
        self.max_struct_growth = max_struct_growth
        self.nodes = 0
        self.failed: dict = {}
        self.proved: dict = {}
        self._expanded: dict = {}
        self.shrinking = tuple(r for r in SHRINKING if r in self.enabled)

    def run(self, s: Sequent):
        growth = self.max_struct_growth
        if growth is None:
            growth = 2 * leaf_count(s.antecedent) + 2
        self.caps = Caps(growth, closure_bunches(s))
        try:
            for limit in range(1, self.max_depth + 1):
                d, _ = self._search(s, limit)
                if d is not None:
                    return Proved(d)
        except _Budget:
            pass
        return Unknown()

    def _instances(self, s):
        got = self._expanded.get(s)
        if got is None:
            got = lbi_expand(s, self.enabled, self.caps)
            invertible = [i for i in got if i.rule in INVERTIBLE]
            axioms = [i for i in got if not len(i)]
            if axioms:
                got = axioms[:1]
            elif invertible:
                got = invertible[:1]
            self._expanded[s] = got
        return got

    def _search(self, s: Sequent, remaining: int):
        """(derivation or None, whether the depth bound cut anything off)."""
        if s in self.proved:
            return self.proved[s], False
        if self.failed.get(s, 0) >= remaining:
            return None, self.failed[s] != _FOREVER
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise _Budget
        bounded = False
        for inst in self._instances(s):
            if not len(inst):
                d = Derivation(inst.rule, s, inst.witness)
                self.proved[s] = d
                return d, False
            if remaining <= 1:
                bounded = True
                break
            subs = []
            for p in inst.premises:
                d, cut = self._search(p, remaining - 1)
                bounded = bounded or cut
                if d is None:
                    break
                subs.append(d)
            else:
                if inst.rule == SHRINK:
                    d = shrink_chain(s, subs[0], self.shrinking)
                else:
                    d = Derivation(inst.rule, s, inst.witness, tuple(subs))
                self.proved[s] = d
                return d, False
        # a failure the bound never touched holds at every depth
        self.failed[s] = max(self.failed.get(s, 0), remaining) if bounded else _FOREVER
        return None, bounded


_FOREVER = 1 << 30


def lbi_prove(s: Sequent, max_depth: int = 12, max_nodes: int = 20_000,
              disabled: Iterable[str] = (), max_struct_growth: int | None = None):
    """Proved(derivation) | Unknown(budget_exhausted); never Refuted."""
    disabled = set(disabled)
    enabled = [r for r in LBI_RULES if r not in disabled and _family(r) not in disabled]
    return LbiProver(max_depth, max_nodes, enabled, max_struct_growth).run(s)


__all__ = ["LBI_RULES", "lbi_expand", "lbi_prove", "check_derivation", "check_step", "LbiProver", "Caps"]
