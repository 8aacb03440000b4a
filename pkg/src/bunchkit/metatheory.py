"""Proof transformations on LBIZ derivations, cut elimination and corpora.

Every admissible-rule transformer is one rewrite engine, :func:`lift`.  Given
a derivation of ``o`` and a target ``n`` with ``related(o, n)``, it rebuilds
the derivation bottom-up.  A target that closes by an axiom becomes that
axiom.  If a premise is already related to the target, the engine recurses
into that premise.  Otherwise it applies the same rule to the target, with
premises related to the old ones.  The output is never deeper than the input,
because every step either keeps a rule or drops one.

``related`` composes the depth-preserving operations: weakening, padding
insertion (EA2), contraction, the left and right inversions, and erasure of
``;top`` and ``,emp``.

Cut elimination works on derivations whose cut occurrences are marked with
fresh atoms.  It cuts every marked copy at once, so copies that ImpL and WandL
duplicate into one premise need no separate treatment.  The left premise is
permuted first, and while that happens there is only ever one marked copy.
The (rank, level) pair of each recursive call is recorded and strictly
decreases lexicographically.
"""

from __future__ import annotations

import json
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import count

from .bunch import (
    EMP, ROOT, Add, Bunch, Layer, Leaf, Mult, Position, PositionError, Sequent, add, leaf_count,
    mult, positions, print_sequent, replace_at, sub_at, sub_selections, valid_position,
)
from .formula import (
    BOT, MTOP, TOP, And, Atom, Formula, Imp, Or, Star, Wand, formula_size, print_formula,
)
from .lbiz import (
    AXIOMS, Derivation, Proved, Refuted, Witness, check_derivation, derivation_depth,
    find_instance, iter_nodes, prove, rule_instances,
)
from .relations import all_candidates, exposing_cores

TOP_LEAF = Leaf(TOP)


class TransformError(ValueError):
    """A transformer was applied outside its precondition, or got stuck."""


# -- the embedding relation ------------------------------------------------

@lru_cache(maxsize=200_000)
def erasable(x: Bunch) -> bool:
    """``Γ(Δ)`` derivable implies ``Γ(Δ, x)`` derivable without extra depth."""
    if x == EMP:
        return True
    if isinstance(x, Add):
        return any(erasable(c) for c in x.children)
    if isinstance(x, Mult):
        return all(erasable(c) for c in x.children)
    return False


@lru_cache(maxsize=500_000)
def embeds(o: Bunch, n: Bunch) -> bool:
    """``Γ(o) ⊢ H`` derivable implies ``Γ(n) ⊢ H`` derivable at no greater depth."""
    if o == n or o == TOP_LEAF:
        return True
    if isinstance(o, Leaf):
        f = o.f
        if isinstance(f, And) and embeds(add(f.l, f.r), n):
            return True
        if isinstance(f, Star) and embeds(mult(f.l, f.r), n):
            return True
        if isinstance(f, Or) and (embeds(Leaf(f.l), n) or embeds(Leaf(f.r), n)):
            return True
    elif isinstance(o, Add):
        kids = [c for c in o.children if c != TOP_LEAF]
        if not kids:
            return True
        # each additive part lands somewhere in n; duplicates contract
        return all(embeds(c, n) for c in kids)
    else:
        kids = [c for c in o.children if c != EMP]
        if len(kids) < len(o.children):
            return embeds(mult(*kids) if kids else EMP, n)
    if isinstance(n, Add):
        return any(embeds(o, c) for c in n.children)
    if isinstance(n, Mult):
        if isinstance(o, Mult):
            return _partition(o.children, n.children)
        rest_ok = [all(erasable(x) for j, x in enumerate(n.children) if j != i)
                   for i in range(len(n.children))]
        if any(ok and embeds(o, c) for ok, c in zip(rest_ok, n.children)):
            return True
        return o == EMP and all(erasable(x) for x in n.children)
    return False


def _partition(os: tuple, ns: tuple) -> bool:
    """Pair groups of ``os`` with groups of ``ns`` (one side a single child);
    children of ``ns`` left over must be erasable."""

    @lru_cache(maxsize=None)
    def go(ro: tuple, rn: tuple) -> bool:
        if not rn:
            return not ro
        j, rest = rn[0], rn[1:]
        c = ns[j]
        if erasable(c) and go(ro, rest):
            return True
        items = tuple(os[i] for i in ro)
        for sel in sub_selections(items, range(1, len(items) + 1)):
            if embeds(mult(*(items[k] for k in sel)), c):
                if go(tuple(i for k, i in enumerate(ro) if k not in sel), rest):
                    return True
        others = tuple(ns[k] for k in rest)
        for sel in sub_selections(others, range(1, len(others) + 1)):
            group = mult(c, *(others[k] for k in sel))
            left_n = tuple(k for t, k in enumerate(rest) if t not in sel)
            for t, i in enumerate(ro):
                if (t == 0 or os[i] != os[ro[t - 1]]) and embeds(os[i], group):
                    if go(ro[:t] + ro[t + 1:], left_n):
                        return True
        return False

    return go(tuple(range(len(os))), tuple(range(len(ns))))


def related(o: Sequent, n: Sequent) -> bool:
    """``o`` derivable implies ``n`` derivable at no greater depth (sufficient test)."""
    h = o.consequent
    if h == n.consequent and embeds(o.antecedent, n.antecedent):
        return True
    if isinstance(h, And) and n.consequent in (h.l, h.r):
        return embeds(o.antecedent, n.antecedent)
    if isinstance(h, Imp) and n.consequent == h.r:
        return embeds(add(o.antecedent, h.l), n.antecedent)
    if isinstance(h, Wand) and n.consequent == h.r:
        return embeds(mult(o.antecedent, h.l), n.antecedent)
    return False


# -- the rewrite engine ----------------------------------------------------

def axiom_at(s: Sequent) -> Derivation | None:
    for rule in ("Id", "MTopR", "TopR", "BotL"):
        for inst in rule_instances(s, rule):
            return Derivation(rule, s, inst.witness)
    return None


def lift(d: Derivation, target: Sequent) -> Derivation:
    """Rebuild ``d`` as a derivation of ``target``, which must be related to
    ``d``'s conclusion.  Depth never grows."""
    if d.conclusion == target:
        return d
    ax = axiom_at(target)
    if ax is not None:
        return ax
    for p in d.premises:
        if related(p.conclusion, target):
            return lift(p, target)
    if d.rule in AXIOMS:
        raise TransformError(f"{d.rule} axiom does not carry over to {print_sequent(target)}")
    olds = [p.conclusion for p in d.premises]
    last = None
    for inst in rule_instances(target, d.rule):
        news = inst.premises
        if all(related(a, b) for a, b in zip(olds, news)):
            try:
                subs = tuple(lift(p, b) for p, b in zip(d.premises, news))
            except TransformError as err:
                last = err
                continue
            return Derivation(d.rule, target, inst.witness, subs)
    raise last or TransformError(
        f"no {d.rule} instance of {print_sequent(target)} matches {print_sequent(d.conclusion)}")


def _at(d: Derivation, pos: Position) -> Bunch:
    ant = d.conclusion.antecedent
    if not valid_position(ant, pos):
        raise TransformError(f"invalid position {pos.to_json()}")
    return sub_at(ant, pos)


def _retarget(d: Derivation, ant: Bunch, consequent: Formula | None = None) -> Derivation:
    target = Sequent(ant, d.conclusion.consequent if consequent is None else consequent)
    if not related(d.conclusion, target):
        raise TransformError("target is not reachable by admissible steps")
    return lift(d, target)


def weaken_derivation(d: Derivation, pos: Position, g2: Bunch) -> Derivation:
    """``Γ(Γ1) ⊢ F`` into ``Γ(Γ1; Γ2) ⊢ F``."""
    g1 = _at(d, pos)
    return _retarget(d, replace_at(d.conclusion.antecedent, pos, add(g1, g2)))


def ea2_derivation(d: Derivation, pos: Position, pad: Bunch | None = None) -> Derivation:
    """``Γ(Γ1) ⊢ F`` into ``Γ(Γ1, (emp; pad)) ⊢ F`` (just ``emp`` without a pad)."""
    g1 = _at(d, pos)
    unit = EMP if pad is None else add(EMP, pad)
    return _retarget(d, replace_at(d.conclusion.antecedent, pos, mult(g1, unit)))


INVERSIONS = ("and_left", "or_left", "star_left", "top_erase", "emp_erase",
              "and_right", "imp_right", "wand_right")


def invert_derivation(d: Derivation, kind: str, pos: Position = ROOT) -> tuple:
    """Depth-preserving inversions; two results for ``or_left``/``and_right``.

    Left kinds take the position of the principal leaf (or of the unit leaf
    to erase); right kinds ignore ``pos``.
    """
    s = d.conclusion
    ant, h = s.antecedent, s.consequent
    if kind in ("and_right", "imp_right", "wand_right"):
        want = {"and_right": And, "imp_right": Imp, "wand_right": Wand}[kind]
        if not isinstance(h, want):
            raise TransformError(f"{kind} needs a consequent of that shape")
        if kind == "and_right":
            return (lift(d, Sequent(ant, h.l)), lift(d, Sequent(ant, h.r)))
        join = add if kind == "imp_right" else mult
        return (lift(d, Sequent(join(ant, h.l), h.r)),)
    node = _at(d, pos)
    if kind in ("top_erase", "emp_erase"):
        unit, cls = (TOP_LEAF, Add) if kind == "top_erase" else (EMP, Mult)
        parent = sub_at(ant, Position(pos.path[:-1])) if pos.path and pos.select is None else None
        if node != unit or not isinstance(parent, cls):
            raise TransformError(f"{kind} needs a {unit} leaf inside a '{cls.sep}' layer")
        return (lift(d, Sequent(replace_at(ant, pos, None), h)),)
    want = {"and_left": And, "or_left": Or, "star_left": Star}.get(kind)
    if want is None:
        raise TransformError(f"unknown inversion {kind!r}")
    if not isinstance(node, Leaf) or not isinstance(node.f, want):
        raise TransformError(f"{kind} needs a {want.__name__} leaf at the position")
    f = node.f
    if kind == "or_left":
        return (lift(d, Sequent(replace_at(ant, pos, Leaf(f.l)), h)),
                lift(d, Sequent(replace_at(ant, pos, Leaf(f.r)), h)))
    join = add if kind == "and_left" else mult
    return (lift(d, Sequent(replace_at(ant, pos, join(f.l, f.r)), h)),)


EQANT_DIRECTIONS = ("EqAnt1Up", "EqAnt1Down", "EqAnt2Up", "EqAnt2Down")


def eqant_derivation(d: Derivation, direction: str, pos: Position) -> Derivation:
    """Admissibility of the four LBI unit rules, named as in :mod:`bunchkit.lbi`.

    ``d`` derives the rule's premise; the result derives its conclusion.
    For the ``Up`` directions ``pos`` is the unit leaf that goes away, for the
    ``Down`` directions it is the Γ1 that receives the unit.
    """
    if direction == "EqAnt1Up":
        return invert_derivation(d, "top_erase", pos)[0]
    if direction == "EqAnt2Up":
        return invert_derivation(d, "emp_erase", pos)[0]
    if direction == "EqAnt1Down":
        return weaken_derivation(d, pos, TOP_LEAF)
    if direction == "EqAnt2Down":
        return ea2_derivation(d, pos, None)
    raise TransformError(f"unknown EqAnt direction {direction!r}")


def _halves(children: tuple):
    """The multiset ``m`` with ``children == m + m``, or None."""
    if len(children) % 2:
        return None
    half = list(children[::2])
    return half if list(children[1::2]) == half else None


def contract_derivation(d: Derivation, pos: Position) -> Derivation:
    """``Γ(Γa; Γa) ⊢ F`` into ``Γ(Γa) ⊢ F``; ``pos`` covers exactly the pair."""
    ant = d.conclusion.antecedent
    node = _at(d, pos)
    if not isinstance(node, Add):
        raise TransformError("contraction needs an additive pair")
    half = _halves(node.children)
    if half is None:
        raise TransformError("the selected siblings are not two equal halves")
    return _retarget(d, replace_at(ant, pos, add(*half)))


# -- cut elimination -------------------------------------------------------

@dataclass(frozen=True)
class CutMeasures:
    level: int
    rank: int


def cut_measures(node: Derivation) -> CutMeasures:
    """Level and rank of a Cut/CutCS node."""
    if node.rule not in ("Cut", "CutCS") or len(node.premises) != 2:
        raise TransformError("not a cut node")
    left, right = node.premises
    return CutMeasures(derivation_depth(left) + derivation_depth(right),
                       formula_size(left.conclusion.consequent))


class CutError(TransformError):
    pass


def _substitute(b: Bunch, mapping: dict) -> Bunch:
    if isinstance(b, Leaf):
        f = b.f
        if isinstance(f, Atom) and f.name in mapping:
            x = mapping[f.name]
            return Leaf(x) if isinstance(x, Formula) else x
        return b
    kids = [_substitute(c, mapping) for c in b.children]
    return add(*kids) if isinstance(b, Add) else mult(*kids)


def _subst(s: Sequent, mapping: dict) -> Sequent:
    return Sequent(_substitute(s.antecedent, mapping), s.consequent)


def _marker_positions(b: Bunch, name: str) -> list:
    out = []
    for pos in positions(b):
        if pos.select is None:
            node = sub_at(b, pos)
            if isinstance(node, Leaf) and isinstance(node.f, Atom) and node.f.name == name:
                out.append(pos)
    return out


_LEFT_RULES = ("AndL", "OrL", "StarL", "ImpL", "WandL")
_MAIN_PREMISES = {"AndL": (0,), "OrL": (0, 1), "StarL": (0,), "ImpL": (1,), "WandL": (1,)}


@dataclass
class CutStep:
    """One recursive call of the eliminator (for instrumentation)."""

    id: int
    parent: int | None
    rank: int
    level: int
    case: str = ""


@dataclass
class CutEliminator:
    steps: list = field(default_factory=list)
    _ids: count = field(default_factory=count)
    _names: count = field(default_factory=lambda: count(1))

    def fresh(self) -> str:
        return f"#{next(self._names)}"

    def run(self, d: Derivation) -> Derivation:
        prem = tuple(self.run(p) for p in d.premises)
        if d.rule == "Cut":
            return self._cut(prem[0], prem[1], d.conclusion, shared=False)
        if d.rule == "CutCS":
            return self._cut(prem[0], prem[1], d.conclusion, shared=True)
        if all(a is b for a, b in zip(prem, d.premises)):
            return d
        return Derivation(d.rule, d.conclusion, d.witness, prem)

    def _cut(self, left: Derivation, right: Derivation, concl: Sequent, shared: bool):
        f = left.conclusion.consequent
        g1 = left.conclusion.antecedent
        ant = right.conclusion.antecedent
        m = self.fresh()
        for q in _formula_leaves(ant, f):
            plugged = replace_at(ant, q, g1)
            if not shared and plugged != concl.antecedent:
                continue
            if shared and not embeds(plugged, concl.antecedent):
                continue
            sx = Sequent(replace_at(ant, q, Leaf(Atom(m))), right.conclusion.consequent)
            out = self.mcut(left, right, sx, m, None)
            # the shared variant leaves Γ1 twice; contraction merges the copies
            return lift(out, concl) if shared else out
        raise CutError(f"no occurrence of {print_formula(f)} matches the cut conclusion")

    def _record(self, parent, rank, level, case):
        step = CutStep(next(self._ids), parent, rank, level, case)
        self.steps.append(step)
        return step.id

    def mcut(self, left: Derivation, right: Derivation, sx: Sequent, m: str, parent):
        """Derive ``sx`` with every ``m`` leaf replaced by ``left``'s antecedent.

        ``right`` derives ``sx`` with ``m`` read as the cut formula.
        """
        f = left.conclusion.consequent
        g1 = left.conclusion.antecedent
        marks = _marker_positions(sx.antecedent, m)
        if not marks:
            return right
        me = self._record(parent, formula_size(f), derivation_depth(left) + derivation_depth(right), "")
        target = _subst(sx, {m: g1})
        ax = axiom_at(target)
        if ax is not None:
            self.steps[-1].case = "axiom"
            return ax
        if left.rule in ("Id", "MTopR", "TopR"):
            self.steps[me].case = "left-axiom"
            return lift(right, target)
        if left.rule in _LEFT_RULES:
            self.steps[me].case = "left-permute"
            if len(marks) != 1:
                raise CutError("left permutation with a duplicated cut occurrence")
            main = _MAIN_PREMISES[left.rule]
            subs = []
            for i, q in enumerate(left.premises):
                subs.append(self.mcut(q, right, sx, m, me) if i in main else q)
            inst = find_instance(target, left.rule, [s.conclusion for s in subs])
            if inst is None:
                raise CutError(f"cannot replay {left.rule} below the cut")
            return Derivation(left.rule, target, inst.witness, tuple(subs))
        # left ends in the right rule for f: permute the right premise upwards
        unmark = {m: f}
        olds = tuple(p.conclusion for p in right.premises)
        for inst in rule_instances(sx, right.rule):
            marked = inst.premises
            if tuple(_subst(p, unmark) for p in marked) != olds:
                continue
            self.steps[me].case = "right-permute"
            subs = tuple(self.mcut(left, p, px, m, me) for p, px in zip(right.premises, marked))
            found = find_instance(target, right.rule, [s.conclusion for s in subs])
            if found is not None:
                return Derivation(right.rule, target, found.witness, subs)
        self.steps[me].case = f"principal {right.rule}"
        return self._principal(left, right, sx, m, marks, target, me)

    def _principal(self, left, right, sx, m, marks, target, me):
        f = left.conclusion.consequent
        g1 = left.conclusion.antecedent
        ant, h = sx.antecedent, sx.consequent
        rule = right.rule
        olds = tuple(p.conclusion for p in right.premises)
        a, b = self.fresh(), self.fresh()
        la, lb = Leaf(Atom(a)), Leaf(Atom(b))
        full = {m: f, a: getattr(f, "l", None), b: getattr(f, "r", None)}

        def matches(marked):
            return tuple(_subst(p, full) for p in marked) == olds

        def recut(p, px):
            # remove the other copies of the cut formula from a premise
            return self.mcut(left, p, _subst(px, {a: full[a], b: full[b]}), m, me)

        if rule in ("AndL", "StarL", "OrL"):
            for q in marks:
                if rule == "OrL":
                    marked = (Sequent(replace_at(ant, q, la), h), Sequent(replace_at(ant, q, lb), h))
                else:
                    join = add if rule == "AndL" else mult
                    marked = (Sequent(replace_at(ant, q, join(la, lb)), h),)
                if not matches(marked):
                    continue
                if rule == "OrL":
                    if left.rule not in ("OrR1", "OrR2"):
                        break
                    i = 0 if left.rule == "OrR1" else 1
                    d = recut(right.premises[i], marked[i])
                    t = _subst(marked[i], {m: g1})
                    name = a if i == 0 else b
                    t = _subst(t, {b if i == 0 else a: full[b if i == 0 else a]})
                    return self.mcut(left.premises[0], d, t, name, me)
                if left.rule != ("AndR" if rule == "AndL" else "StarR"):
                    break
                d = recut(right.premises[0], marked[0])
                t = _subst(marked[0], {m: g1})
                d = self.mcut(left.premises[0], d, _subst(t, {b: full[b]}), a, me)
                t = _subst(t, {a: left.premises[0].conclusion.antecedent})
                d = self.mcut(left.premises[1], d, t, b, me)
                return lift(d, target)
        elif rule in ("ImpL", "WandL"):
            want = "ImpR" if rule == "ImpL" else "WandR"
            if left.rule == want:
                for marked in self._principal_context(sx, rule, m, f, b):
                    if not matches(marked):
                        continue
                    d0 = recut(right.premises[0], marked[0])
                    d1 = recut(right.premises[1], marked[1])
                    t1 = _subst(marked[1], {m: g1})
                    join = add if rule == "ImpL" else mult
                    inner = left.premises[0]
                    rx = Sequent(join(g1, la), f.r)
                    e = self.mcut(d0, inner, rx, a, me)
                    g = self.mcut(e, d1, t1, b, me)
                    return lift(g, target)
        raise CutError(f"no reduction for {left.rule} against {rule} on {print_formula(f)}")

    def _principal_context(self, sx, rule, m, f, b):
        """Marked premises of ``rule`` with a marked leaf as principal."""
        ant, h = sx.antecedent, sx.consequent
        atom = Atom(m)
        gb = Atom(b)
        for pos in positions(ant, partial_mult=True):
            delta = sub_at(ant, pos)
            if not exposing_cores(delta, atom):
                continue
            if rule == "ImpL":
                yield (Sequent(delta, f.l), Sequent(replace_at(ant, pos, add(Leaf(gb), delta)), h))
                continue
            from .lbiz import _groups, _root_siblings, wand_premises

            yield wand_premises(sx, pos, None, EMP, None, f.l, gb)
            for gp in _groups(_root_siblings(ant, pos) or ()):
                for pair in all_candidates(gp):
                    for re_i, re_j in pair.assignments():
                        try:
                            yield wand_premises(sx, pos, gp, re_i, re_j, f.l, gb)
                        except ValueError:
                            continue


def _formula_leaves(b: Bunch, f: Formula) -> list:
    out = []
    for pos in positions(b):
        if pos.select is None and sub_at(b, pos) == Leaf(f):
            out.append(pos)
    return out


def eliminate_cuts(d: Derivation, eliminator: CutEliminator | None = None) -> Derivation:
    """A cut-free derivation of the same conclusion."""
    return (eliminator or CutEliminator()).run(d)


def has_cut(d: Derivation) -> bool:
    return any(n.rule in ("Cut", "CutCS") for _, n in iter_nodes(d))


def measures_decrease(steps: list) -> bool:
    """Every recursive call has a lexicographically smaller (rank, level)."""
    by_id = {s.id: s for s in steps}
    for s in steps:
        if s.parent is not None:
            p = by_id[s.parent]
            if (s.rank, s.level) >= (p.rank, p.level):
                return False
    return True


# -- corpora ---------------------------------------------------------------

_BINARY = (And, Or, Imp, Star, Wand)


def random_formula(rng: random.Random, size: int, atoms) -> Formula:
    if size <= 2:
        if rng.random() < 0.75:
            return Atom(rng.choice(atoms))
        return rng.choice([TOP, BOT, MTOP])
    cls = rng.choice(_BINARY)
    left = rng.randint(1, size - 2)
    return cls(random_formula(rng, left, atoms), random_formula(rng, size - 1 - left, atoms))


def random_bunch(rng: random.Random, leaves: int, atoms, size: int) -> Bunch:
    if leaves == 1:
        return Leaf(random_formula(rng, rng.randint(1, size), atoms))
    k = rng.randint(1, leaves - 1)
    join = add if rng.random() < 0.5 else mult
    return join(random_bunch(rng, k, atoms, size), random_bunch(rng, leaves - k, atoms, size))


def sample_sequents(seed: int, count: int = 100, max_formula_size: int = 5,
                    atoms=("p", "q", "r"), max_leaves: int = 3) -> list[Sequent]:
    """Deterministic random sequents (same seed, same list)."""
    rng = random.Random(seed)
    atoms = list(atoms)
    out = []
    for _ in range(count):
        ant = random_bunch(rng, rng.randint(1, max_leaves), atoms, max_formula_size)
        out.append(Sequent(ant, random_formula(rng, rng.randint(1, max_formula_size), atoms)))
    return out


def worker_count() -> int:
    """Worker processes for corpus runs; ``BUNCHKIT_THREADS`` caps it."""
    raw = os.environ.get("BUNCHKIT_THREADS", "")
    cap = int(raw) if raw.isdigit() and int(raw) > 0 else os.cpu_count() or 1
    return max(1, min(cap, os.cpu_count() or 1))


def parallel_map(fn, items: list) -> list:
    """``map`` over worker processes, results in input order."""
    workers = worker_count()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _equivalence_row(job) -> dict:
    from .lbi import check_derivation as lbi_check, lbi_prove

    s, (lbiz_nodes, lbiz_depth, lbi_nodes, lbi_depth) = job
    a = prove(s, max_depth=lbiz_depth, max_nodes=lbiz_nodes)
    b = lbi_prove(s, max_depth=lbi_depth, max_nodes=lbi_nodes)
    ok = True
    if isinstance(a, Proved) and not check_derivation(a.derivation):
        ok = False
    if isinstance(b, Proved) and not lbi_check(b.derivation):
        ok = False
    if {type(a), type(b)} == {Proved, Refuted}:
        ok = False
    row = {"sequent": print_sequent(s), "lbiz": a.status, "lbi": b.status}
    if isinstance(a, Refuted):
        row["lbiz_mode"] = a.mode
    if isinstance(a, Proved):
        row["lbiz_depth"] = a.depth
    row["ok"] = ok
    return row


def run_equivalence(corpus, lbiz_nodes: int = 3000, lbiz_depth: int = 24,
                    lbi_nodes: int = 500, lbi_depth: int = 10) -> list[dict]:
    """Both provers on every sequent.  ``ok`` is False when one calculus
    proves what the other refutes, or when a proof fails its checker; an
    LBI ``unknown`` is recorded, never a failure."""
    budgets = (lbiz_nodes, lbiz_depth, lbi_nodes, lbi_depth)
    return parallel_map(_equivalence_row, [(s, budgets) for s in corpus])


def proved_corpus(seed: int, want: int, max_formula_size: int = 5, atoms=("p", "q", "r"),
                  max_nodes: int = 2000) -> list[Derivation]:
    """Derivations of random sequents the prover settles as Proved."""
    out = []
    batch = 0
    while len(out) < want:
        for s in sample_sequents(seed * 1000 + batch, 100, max_formula_size, atoms):
            r = prove(s, max_nodes=max_nodes)
            if isinstance(r, Proved):
                out.append(r.derivation)
                if len(out) == want:
                    break
        batch += 1
    return out


def forward_derivations(seed: int, base: list, count: int) -> list[Derivation]:
    """Derivations built by applying rules forwards to ``base`` ones."""
    rng = random.Random(seed)
    pool = list(base)
    out = []
    tries = 0
    while len(out) < count and tries < count * 20:
        tries += 1
        d1, d2 = rng.choice(pool), rng.choice(pool)
        pick = rng.randrange(6)
        try:
            new = _forward_step(pick, d1, d2, rng)
        except (TransformError, PositionError, ValueError):
            new = None
        if new is not None and leaf_count(new.conclusion.antecedent) <= 8 and check_derivation(new):
            out.append(new)
            pool.append(new)
    return out


def _forward_step(pick, d1, d2, rng):
    s1, s2 = d1.conclusion, d2.conclusion
    if pick == 0:
        s = Sequent(mult(s1.antecedent, s2.antecedent), Star(s1.consequent, s2.consequent))
        return Derivation("StarR", s, Witness(candidate=(s1.antecedent, s2.antecedent)), (d1, d2))
    if pick == 1:
        extra = random_formula(rng, 3, ["p", "q"])
        s = Sequent(s1.antecedent, Or(s1.consequent, extra))
        return Derivation("OrR1", s, Witness(), (d1,))
    if pick == 2:
        # Γ;A ⊢ B gives Γ ⊢ A -> B, Γ,A ⊢ B gives Γ ⊢ A --* B
        ant = s1.antecedent
        if not isinstance(ant, Layer):
            return None
        leaves = [c for c in ant.children if isinstance(c, Leaf)]
        if not leaves:
            return None
        a = rng.choice(leaves)
        kids = list(ant.children)
        kids.remove(a)
        rest = add(*kids) if isinstance(ant, Add) else mult(*kids)
        cls, rule = (Imp, "ImpR") if isinstance(ant, Add) else (Wand, "WandR")
        return Derivation(rule, Sequent(rest, cls(a.f, s1.consequent)), Witness(), (d1,))
    if pick == 3:
        # two leaves of one layer fuse into a conjunction
        ant = s1.antecedent
        for pos in positions(ant):
            node = sub_at(ant, pos)
            if isinstance(node, Layer) and pos.select is None:
                leaves = [c for c in node.children if isinstance(c, Leaf)]
                if len(leaves) >= 2:
                    x, y = leaves[0], leaves[1]
                    kids = list(node.children)
                    kids.remove(x)
                    kids.remove(y)
                    cls, rule = (And, "AndL") if isinstance(node, Add) else (Star, "StarL")
                    fused = Leaf(cls(x.f, y.f))
                    join = add if isinstance(node, Add) else mult
                    new_node = join(*kids, fused) if kids else fused
                    concl = Sequent(replace_at(ant, pos, new_node), s1.consequent)
                    inst = find_instance(concl, rule, [s1])
                    if inst is None:
                        return None
                    return Derivation(rule, concl, inst.witness, (d1,))
        return None
    if pick == 4:
        # ImpL: Δ;(A -> B) ⊢ A and Γ(B; Δ;(A -> B)) ⊢ H
        a, b = s1.consequent, random_formula(rng, 1, ["p", "q", "r"])
        leaves = [p for p in positions(s2.antecedent)
                  if p.select is None and sub_at(s2.antecedent, p) == Leaf(b)]
        if not leaves:
            return None
        delta = add(s1.antecedent, Imp(a, b))
        left = weaken_derivation(d1, ROOT, Leaf(Imp(a, b)))
        q = leaves[0]
        right = weaken_derivation(d2, q, delta)
        concl = Sequent(replace_at(s2.antecedent, q, delta), s2.consequent)
        inst = find_instance(concl, "ImpL", [left.conclusion, right.conclusion])
        if inst is None:
            return None
        return Derivation("ImpL", concl, inst.witness, (left, right))
    if pick == 5:
        # WandL with the unit split: Γ' ⊢ A and Γ((emp, B); (Γ', A --* B)) ⊢ H
        a = s1.consequent
        leaves = [p for p in positions(s2.antecedent) if p.select is None
                  and isinstance(sub_at(s2.antecedent, p), Leaf)]
        if not leaves:
            return None
        q = rng.choice(leaves)
        b = sub_at(s2.antecedent, q).f
        wand = Leaf(Wand(a, b))
        gp = s1.antecedent
        right = ea2_derivation(d2, q, None)
        q2 = _unit_partner(right.conclusion.antecedent, b)
        if q2 is None:
            return None
        right = weaken_derivation(right, q2, mult(gp, wand))
        concl = Sequent(replace_at(s2.antecedent, q, mult(gp, wand)), s2.consequent)
        inst = find_instance(concl, "WandL", [s1, right.conclusion])
        if inst is None:
            return None
        return Derivation("WandL", concl, inst.witness, (d1, right))
    return None


def _unit_partner(b: Bunch, f: Formula):
    target = mult(Leaf(f), EMP)
    for pos in positions(b):
        if sub_at(b, pos) == target:
            return pos
    return None


# -- suites ----------------------------------------------------------------

def transformer_cases(d: Derivation, rng: random.Random):
    """(name, thunk) pairs for every transformer applicable to ``d``."""
    s = d.conclusion
    ant = s.antecedent
    cases = []
    poss = [p for p in positions(ant)]
    pos = rng.choice(poss)
    extra = Leaf(rng.choice([Atom("p"), Atom("q"), TOP, Imp(Atom("p"), Atom("q"))]))
    cases.append(("weaken", lambda: weaken_derivation(d, pos, extra)))
    cases.append(("ea2", lambda: ea2_derivation(d, pos, extra)))
    cases.append(("ea2-empty", lambda: ea2_derivation(d, pos, None)))
    cases.append(("eqant-EqAnt1Down", lambda: eqant_derivation(d, "EqAnt1Down", pos)))
    cases.append(("eqant-EqAnt2Down", lambda: eqant_derivation(d, "EqAnt2Down", pos)))
    for q in poss:
        if q.select is not None:
            continue
        node = sub_at(ant, q)
        if isinstance(node, Leaf):
            kind = {And: "and_left", Or: "or_left", Star: "star_left"}.get(type(node.f))
            if kind:
                cases.append((f"invert-{kind}", lambda q=q, kind=kind: invert_derivation(d, kind, q)))
            parent = sub_at(ant, Position(q.path[:-1])) if q.path else None
            if node == TOP_LEAF and isinstance(parent, Add):
                cases.append(("eqant-EqAnt1Up", lambda q=q: (eqant_derivation(d, "EqAnt1Up", q),)))
            if node == EMP and isinstance(parent, Mult):
                cases.append(("eqant-EqAnt2Up", lambda q=q: (eqant_derivation(d, "EqAnt2Up", q),)))
    kind = {And: "and_right", Imp: "imp_right", Wand: "wand_right"}.get(type(s.consequent))
    if kind:
        cases.append((f"invert-{kind}", lambda: invert_derivation(d, kind)))

    def contract_case():
        # duplicate a sub-bunch by weakening, then contract the pair
        node = sub_at(ant, pos)
        doubled = weaken_derivation(d, pos, node)
        dant = doubled.conclusion.antecedent
        for q in positions(dant):
            x = sub_at(dant, q)
            if isinstance(x, Add) and _halves(x.children) is not None and add(*_halves(x.children)) == node:
                return (doubled, contract_derivation(doubled, q))
        raise TransformError("duplicate not found")

    cases.append(("contract", contract_case))
    return cases


def run_admissibility(derivations, seed: int = 0) -> list[dict]:
    """Apply every applicable transformer; each output must check and not
    be deeper than its input."""
    rng = random.Random(seed)
    rows = []
    for d in derivations:
        depth = derivation_depth(d)
        for name, thunk in transformer_cases(d, rng):
            row = {"sequent": print_sequent(d.conclusion), "transformer": name, "depth": depth}
            try:
                out = thunk()
            except TransformError as err:
                row.update(ok=False, error=str(err))
                rows.append(row)
                continue
            outs = out if isinstance(out, tuple) else (out,)
            depths = [derivation_depth(o) for o in outs]
            checked = all(check_derivation(o) for o in outs)
            row.update(out_depth=max(depths), ok=checked and max(depths) <= depth)
            rows.append(row)
    return rows


def cut_node(left: Derivation, right: Derivation, q: Position) -> Derivation:
    """``Cut`` of ``left`` into the formula leaf at ``q`` of ``right``."""
    ant = right.conclusion.antecedent
    concl = Sequent(replace_at(ant, q, left.conclusion.antecedent), right.conclusion.consequent)
    cut = Leaf(left.conclusion.consequent)
    for pos in positions(concl.antecedent, partial_mult=True):
        if (sub_at(concl.antecedent, pos) == left.conclusion.antecedent
                and replace_at(concl.antecedent, pos, cut) == ant):
            return Derivation("Cut", concl, Witness(pos), (left, right))
    raise TransformError("cut occurrence not found")


def cutcs_node(left: Derivation, right: Derivation, q: Position, shared: Bunch) -> Derivation:
    """``CutCS``: ``q`` selects ``F; shared`` in ``right``'s antecedent."""
    ant = right.conclusion.antecedent
    g = left.conclusion.antecedent
    concl = Sequent(replace_at(ant, q, g), right.conclusion.consequent)
    part = add(left.conclusion.consequent, shared)
    for pos in positions(concl.antecedent, partial_mult=True):
        if sub_at(concl.antecedent, pos) == g and replace_at(concl.antecedent, pos, part) == ant:
            return Derivation("CutCS", concl, Witness(pos, gamma_prime=shared), (left, right))
    raise TransformError("cut occurrence not found")


def _parts(f: Formula) -> list:
    out = [f]
    if hasattr(f, "l"):
        out += _parts(f.l) + _parts(f.r)
    return out


def cut_corpus(seed: int, count: int, pool: list, atoms=("p", "q", "r"),
               max_nodes: int = 1500) -> list[Derivation]:
    """Derivations with Cut and CutCS nodes (some nested).

    Left premises come from ``pool``; right premises are proofs of random
    sequents that use the cut formula, so principal reductions are common.
    """
    rng = random.Random(seed)
    atoms = list(atoms)
    lefts = [d for d in pool if not isinstance(d.conclusion.consequent, Atom)] or list(pool)
    shared_lefts = [d for d in lefts if isinstance(d.conclusion.antecedent, Add)]
    out: list[Derivation] = []
    tries = 0
    while len(out) < count and tries < count * 50:
        tries += 1
        nested = out and rng.random() < 0.2
        left = rng.choice(out) if nested else rng.choice(lefts)
        shared = None
        if not nested and shared_lefts and rng.random() < 0.25:
            left = rng.choice(shared_lefts)
            shared = rng.choice(left.conclusion.antecedent.children)
        f = left.conclusion.consequent
        hole = Leaf(f) if shared is None else add(f, shared)
        extra = random_formula(rng, rng.randint(1, 3), atoms)
        join = rng.choice([add, mult])
        ant = join(hole, extra) if rng.random() < 0.8 else hole
        goal = rng.choice(_parts(f) + _parts(extra) + [random_formula(rng, 3, atoms)])
        r = prove(Sequent(ant, goal), max_nodes=max_nodes)
        if not isinstance(r, Proved):
            continue
        right = r.derivation
        try:
            if shared is None:
                q = next(p for p in positions(ant) if p.select is None and sub_at(ant, p) == Leaf(f))
                d = cut_node(left, right, q)
            else:
                q = next(p for p in positions(ant) if sub_at(ant, p) == hole)
                d = cutcs_node(left, right, q, shared)
        except (StopIteration, TransformError):
            continue
        if leaf_count(d.conclusion.antecedent) <= 10 and check_derivation(d, allow_cut=True):
            out.append(d)
    return out


def run_cutelim(cut_derivations) -> list[dict]:
    rows = []
    for d in cut_derivations:
        elim = CutEliminator()
        row = {"sequent": print_sequent(d.conclusion), "depth": derivation_depth(d)}
        try:
            out = elim.run(d)
        except TransformError as err:
            row.update(ok=False, error=str(err))
            rows.append(row)
            continue
        ok = (not has_cut(out) and out.conclusion == d.conclusion and bool(check_derivation(out))
              and measures_decrease(elim.steps))
        row.update(ok=ok, out_depth=derivation_depth(out), steps=len(elim.steps))
        rows.append(row)
    return rows


def dumps_report(rows) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
