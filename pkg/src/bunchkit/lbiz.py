"""The structural-rule-free calculus: rule instances, checker and prover.

Weakening, contraction and the unit laws are not rules here.  They are
absorbed by three devices from :mod:`bunchkit.relations`: padding stripping
in the axioms and in the two left implication rules, the shared essence in
``ImpL``/``WandL`` (an implicit contraction), and candidate splits in
``StarR``/``WandL`` (implicit weakening).
"""

from __future__ import annotations

import json
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Iterable

from .bunch import (
    EMP, ROOT, Add, Bunch, Leaf, Mult, Position, PositionError, Sequent, add, mult,
    leaf_occurrences, parse_bunch, positions, print_bunch, print_sequent, replace_at, sub_at, valid_position,
)
from .formula import (
    And, Atom, Bot, Formula, Imp, MTop, Or, ParseError, Star, Top, Wand, parse_sequent,
)
from .relations import (
    CandidatePair, exposes, exposing_cores, is_candidate_pair, is_essence_of, rep_candidates,
    strip_padding_cores,
)

RULES = (
    "Id", "BotL", "TopR", "MTopR", "AndL", "AndR", "OrL", "OrR1", "OrR2",
    "ImpL", "ImpR", "StarL", "StarR", "WandL", "WandR",
)
CUT_RULES = ("Cut", "CutCS")
AXIOMS = {"Id", "BotL", "TopR", "MTopR"}
INVERTIBLE = ("AndL", "StarL", "ImpR", "WandR", "OrL", "AndR")


def rule_family(rule: str) -> str:
    return "OrR" if rule in ("OrR1", "OrR2") else rule


# -- derivations ------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    """Choices a rule schema leaves open.

    ``candidate`` is ``(Re_i, Re_j)`` in assignment order; ``Re_j`` is None
    when it is empty.  The LBI calculus reuses the same fields (see
    :mod:`bunchkit.lbi`).
    """

    position: Position = ROOT
    essence_core: Bunch | None = None
    candidate: tuple | None = None
    gamma_prime: Bunch | None = None

    def to_json(self) -> dict:
        out: dict = {"position": self.position.to_json()}
        if self.essence_core is not None:
            out["essence_core"] = print_bunch(self.essence_core)
        if self.candidate is not None:
            out["candidate"] = [_opt_bunch(b) for b in self.candidate]
        if self.gamma_prime is not None:
            out["gamma_prime"] = print_bunch(self.gamma_prime)
        return out

    @classmethod
    def from_json(cls, data) -> "Witness":
        if not isinstance(data, dict):
            raise ValueError("witness must be an object")
        pos = Position.from_json(data.get("position", []))
        core = data.get("essence_core")
        cand = data.get("candidate")
        gp = data.get("gamma_prime")
        if cand is not None:
            if not isinstance(cand, list) or len(cand) != 2:
                raise ValueError("candidate must be a pair")
            cand = tuple(None if c is None else parse_bunch(c) for c in cand)
        return cls(
            pos,
            parse_bunch(core) if core is not None else None,
            cand,
            parse_bunch(gp) if gp is not None else None,
        )


def _opt_bunch(b):
    return None if b is None else print_bunch(b)


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: Sequent
    witness: Witness = field(default_factory=Witness)
    premises: tuple = ()

    def __str__(self):
        return format_text(self)


def derivation_depth(d: Derivation) -> int:
    if not d.premises:
        return 1
    return 1 + max(derivation_depth(p) for p in d.premises)


def derivation_size(d: Derivation) -> int:
    return 1 + sum(derivation_size(p) for p in d.premises)


def iter_nodes(d: Derivation, path: tuple = ()):
    yield path, d
    for i, p in enumerate(d.premises):
        yield from iter_nodes(p, path + (i,))


def to_json(d: Derivation, calculus: str | None = "lbiz") -> dict:
    out = {
        "rule": d.rule,
        "conclusion": print_sequent(d.conclusion),
        "witness": d.witness.to_json(),
        "premises": [to_json(p, None) for p in d.premises],
    }
    if calculus is not None:
        out = {"calculus": calculus, **out}
    return out


def from_json(data) -> Derivation:
    if not isinstance(data, dict):
        raise ValueError("derivation node must be an object")
    try:
        rule = data["rule"]
        concl = parse_sequent(data["conclusion"])
        premises = data.get("premises", [])
    except KeyError as err:
        raise ValueError(f"missing field {err}") from None
    except ParseError as err:
        raise ValueError(f"bad conclusion: {err}") from None
    if not isinstance(rule, str) or not isinstance(premises, list):
        raise ValueError("malformed derivation node")
    try:
        witness = Witness.from_json(data.get("witness", {}))
    except ParseError as err:
        raise ValueError(f"bad witness: {err}") from None
    return Derivation(rule, concl, witness, tuple(from_json(p) for p in premises))


def dumps(d: Derivation, calculus: str = "lbiz") -> str:
    return json.dumps(to_json(d, calculus), indent=2, ensure_ascii=False)


def format_text(d: Derivation, indent: int = 0) -> str:
    lines = []

    def walk(node, level):
        lines.append(f"{'  ' * level}{print_sequent(node.conclusion)}    [{node.rule}]")
        for p in node.premises:
            walk(p, level + 1)

    walk(d, indent)
    return "\n".join(lines)


_TEX = {
    "/\\": r"\wedge", "\\/": r"\vee", "->": r"\supset", "--*": r"\mathrel{-\!\!*}",
    "|-": r"\vdash", "top": r"\top", "bot": r"\bot", "emp": r"\top^{*}",
}


def _tex_sequent(s: Sequent) -> str:
    import re

    text = print_sequent(s)
    out = re.sub(r"--\*|/\\|\\/|->|\|-|\btop\b|\bbot\b|\bemp\b", lambda m: _TEX[m.group()] + " ", text)
    return re.sub(" +", " ", out)


def format_tex(d: Derivation) -> str:
    """bussproofs markup, one line per inference."""
    lines = []

    def walk(node):
        for p in node.premises:
            walk(p)
        label = rf"\RightLabel{{${node.rule}$}}"
        concl = f"${_tex_sequent(node.conclusion).strip()}$"
        if not node.premises:
            lines.append(rf"\AxiomC{{}} {label} \UnaryInfC{{{concl}}}")
        elif len(node.premises) == 1:
            lines.append(rf"{label} \UnaryInfC{{{concl}}}")
        else:
            lines.append(rf"{label} \BinaryInfC{{{concl}}}")

    walk(d)
    lines.append(r"\DisplayProof")
    return "\n".join(lines)


# -- rule instances ---------------------------------------------------------

class Instance:
    """A backward rule application.  A premise may be given as a zero-argument
    callable; it is built on first use (the search often never needs it)."""

    __slots__ = ("rule", "witness", "_premises")

    def __init__(self, rule: str, witness: Witness, premises: tuple):
        self.rule = rule
        self.witness = witness
        self._premises = list(premises)

    def __len__(self):
        return len(self._premises)

    def premise(self, i: int) -> Sequent:
        p = self._premises[i]
        if callable(p):
            p = self._premises[i] = p()
        return p

    @property
    def premises(self) -> tuple:
        return tuple(self.premise(i) for i in range(len(self._premises)))

    def __repr__(self):
        return f"Instance({self.rule}, {self.witness})"


def _leaf_positions(b: Bunch, pred) -> list[Position]:
    return [pos for pos, leaf in leaf_occurrences(b) if pred(leaf.f)]


def essence_roots(b: Bunch, f: Formula, full: bool = False) -> list[tuple[Position, Bunch]]:
    """Positions whose occurrence strips to a core exposing ``f``.

    By default only roots that are maximal within their additive layer are
    kept: a root sitting directly in an additive layer that is itself a root
    yields the same right premise and a weaker left premise.  ``full`` keeps
    every root, partial selections included.
    """
    found = []
    for pos in positions(b):
        if not full and pos.select is not None:
            continue
        cores = exposing_cores(sub_at(b, pos), f)
        if cores:
            found.append((pos, cores[0]))
    if full:
        return found
    roots = {pos.path for pos, _ in found if pos.select is None}
    out = []
    for pos, core in found:
        parent = pos.path[:-1]
        if pos.path and parent in roots and isinstance(sub_at(b, Position(parent)), Add):
            continue
        out.append((pos, core))
    return out


def imp_premises(concl: Sequent, pos: Position, f: Formula, g: Formula):
    delta = sub_at(concl.antecedent, pos)
    return (
        Sequent(delta, f),
        Sequent(replace_at(concl.antecedent, pos, add(Leaf(g), delta)), concl.consequent),
    )


def _components(b: Bunch) -> list[Bunch]:
    return list(b.children) if isinstance(b, Mult) else [b]


def _remove_multiset(items: list, remove: list):
    items = list(items)
    for x in remove:
        try:
            items.remove(x)
        except ValueError:
            return None
    return items


def wand_premises(concl: Sequent, pos: Position, gamma_prime: Bunch | None,
                  re_i: Bunch, re_j: Bunch | None, f: Formula, g: Formula):
    """Premises of ``WandL``; raises ValueError when the shape does not fit.

    ``pos`` is a child of a ``,`` layer or a partial selection of one; Γ̃' is
    taken from the remaining children of that layer.
    """
    ant = concl.antecedent
    delta = sub_at(ant, pos)
    left = Sequent(re_i, f)
    if gamma_prime is None:
        if re_j is not None:
            raise ValueError("empty gamma' requires an empty Re_j")
        right = replace_at(ant, pos, add(Leaf(g), delta))
        return left, Sequent(right, concl.consequent)
    if re_j is None:
        raise ValueError("non-empty gamma' requires Re_j")
    if pos.select is not None:
        parent_pos, taken = Position(pos.path), set(pos.select)
    elif pos.path:
        parent_pos, taken = Position(pos.path[:-1]), {pos.path[-1]}
    else:
        raise ValueError("essence root must sit in a ',' layer")
    layer = sub_at(ant, parent_pos)
    if not isinstance(layer, Mult):
        raise ValueError("essence root must sit in a ',' layer")
    rest = [c for i, c in enumerate(layer.children) if i not in taken]
    rest = _remove_multiset(rest, _components(gamma_prime))
    if rest is None:
        raise ValueError("gamma' is not among the siblings of the essence root")
    joined = add(mult(re_j, Leaf(g)), mult(gamma_prime, delta))
    new_layer = mult(*rest, joined) if rest else joined
    return left, Sequent(replace_at(ant, parent_pos, new_layer), concl.consequent)


def _sibling_groups(layer: Mult, index: int):
    """Distinct non-empty sub-multisets of the siblings of child ``index``."""
    from .bunch import sub_selections

    rest = layer.children[:index] + layer.children[index + 1:]
    for sel in sub_selections(rest, range(1, len(rest) + 1)):
        yield mult(*(rest[i] for i in sel))


def expand(s: Sequent, full_roots: bool = False, disabled: Iterable[str] = ()) -> list[Instance]:
    """All backward rule instances for ``s`` in search order."""
    return _expand(s, full_roots, disabled, committed=False)


def _expand(s: Sequent, full_roots: bool, disabled: Iterable[str], committed: bool) -> list[Instance]:
    # committed: the search takes the first axiom or invertible instance
    # alone, so stop as soon as one exists
    disabled = set(disabled)
    ant, h = s.antecedent, s.consequent
    out: list[Instance] = []

    def emit(rule, witness, premises=()):
        if rule_family(rule) not in disabled and rule not in disabled:
            out.append(Instance(rule, witness, tuple(premises)))

    # axioms
    if isinstance(h, Atom):
        cores = exposing_cores(ant, h)
        if cores:
            emit("Id", Witness(ROOT, cores[0]))
    if isinstance(h, MTop):
        cores = exposing_cores(ant, h)
        if cores:
            emit("MTopR", Witness(ROOT, cores[0]))
    if isinstance(h, Top):
        emit("TopR", Witness())
    for pos in _leaf_positions(ant, lambda f: isinstance(f, Bot))[:1]:
        emit("BotL", Witness(pos))
    if committed and out:
        return out[:1]

    # invertible single-premise rules
    for pos in _leaf_positions(ant, lambda f: isinstance(f, And)):
        f = sub_at(ant, pos).f
        emit("AndL", Witness(pos), [Sequent(replace_at(ant, pos, add(f.l, f.r)), h)])
    for pos in _leaf_positions(ant, lambda f: isinstance(f, Star)):
        f = sub_at(ant, pos).f
        emit("StarL", Witness(pos), [Sequent(replace_at(ant, pos, mult(f.l, f.r)), h)])
    if isinstance(h, Imp):
        emit("ImpR", Witness(), [Sequent(add(ant, h.l), h.r)])
    if isinstance(h, Wand):
        emit("WandR", Witness(), [Sequent(mult(ant, h.l), h.r)])

    # invertible branching rules
    for pos in _leaf_positions(ant, lambda f: isinstance(f, Or)):
        f = sub_at(ant, pos).f
        emit("OrL", Witness(pos), [Sequent(replace_at(ant, pos, Leaf(f.l)), h),
                                   Sequent(replace_at(ant, pos, Leaf(f.r)), h)])
    if isinstance(h, And):
        emit("AndR", Witness(), [Sequent(ant, h.l), Sequent(ant, h.r)])
    if committed and out:
        return out[:1]

    # non-invertible rules
    if isinstance(h, Or):
        emit("OrR1", Witness(), [Sequent(ant, h.l)])
        emit("OrR2", Witness(), [Sequent(ant, h.r)])
    for f in _principal_formulas(ant, Imp):
        for pos, core in essence_roots(ant, f, full_roots):
            emit("ImpL", Witness(pos, core), imp_premises(s, pos, f.l, f.r))
    for f in _principal_formulas(ant, Wand):
        for pos, core in essence_roots(ant, f, full_roots):
            _wand_instances(s, pos, core, f, emit)
    if isinstance(h, Star):
        for pair in rep_candidates(ant):
            for re_i, re_j in pair.assignments():
                emit("StarR", Witness(ROOT, candidate=(re_i, re_j)),
                     [Sequent(re_i, h.l), Sequent(re_j, h.r)])
    return out


def _principal_formulas(ant: Bunch, cls) -> list[Formula]:
    seen = []
    for pos in _leaf_positions(ant, lambda f: isinstance(f, cls)):
        f = sub_at(ant, pos).f
        if f not in seen:
            seen.append(f)
    return seen


def _wand_instances(s: Sequent, pos: Position, core: Bunch, f: Wand, emit):
    ant = s.antecedent
    left, right = wand_premises(s, pos, None, EMP, None, f.l, f.r)
    emit("WandL", Witness(pos, core, (EMP, None), None), [left, right])
    if pos.select is not None or not pos.path:
        return
    layer = sub_at(ant, Position(pos.path[:-1]))
    if not isinstance(layer, Mult):
        return
    for gp in _sibling_groups(layer, pos.path[-1]):
        for pair in rep_candidates(gp):
            for re_i, re_j in pair.assignments():
                emit("WandL", Witness(pos, core, (re_i, re_j), gp),
                     [Sequent(re_i, f.l), _later_wand_right(s, pos, gp, re_i, re_j, f)])


def _later_wand_right(s, pos, gp, re_i, re_j, f):
    return lambda: wand_premises(s, pos, gp, re_i, re_j, f.l, f.r)[1]


def _root_siblings(ant: Bunch, pos: Position):
    """Children of the ``,`` layer around ``pos`` that ``pos`` does not cover."""
    if pos.select is not None:
        layer = sub_at(ant, Position(pos.path))
        taken = set(pos.select)
    elif pos.path:
        layer = sub_at(ant, Position(pos.path[:-1]))
        taken = {pos.path[-1]}
    else:
        return None
    if not isinstance(layer, Mult):
        return None
    return tuple(c for i, c in enumerate(layer.children) if i not in taken)


def _groups(items: tuple):
    from .bunch import sub_selections

    for sel in sub_selections(items, range(1, len(items) + 1)):
        yield mult(*(items[i] for i in sel))


def rule_instances(s: Sequent, rule: str):
    """Every instance of ``rule`` concluding ``s``: all essence roots
    (multiplicative partial selections included) and the full candidate
    sets.  Exponential; meant for derivation rewriting, not search."""
    from .relations import all_candidates

    ant, h = s.antecedent, s.consequent
    fam = rule_family(rule)
    if rule in ("Id", "MTopR"):
        if isinstance(h, Atom if rule == "Id" else MTop):
            for core in exposing_cores(ant, h):
                yield Instance(rule, Witness(ROOT, core), ())
        return
    if rule == "TopR":
        if isinstance(h, Top):
            yield Instance(rule, Witness(), ())
        return
    if rule in ("BotL", "AndL", "StarL", "OrL"):
        cls = {"BotL": Bot, "AndL": And, "StarL": Star, "OrL": Or}[rule]
        for pos in _leaf_positions(ant, lambda f: isinstance(f, cls)):
            f = sub_at(ant, pos).f
            if rule == "BotL":
                yield Instance(rule, Witness(pos), ())
            elif rule == "AndL":
                yield Instance(rule, Witness(pos), (Sequent(replace_at(ant, pos, add(f.l, f.r)), h),))
            elif rule == "StarL":
                yield Instance(rule, Witness(pos), (Sequent(replace_at(ant, pos, mult(f.l, f.r)), h),))
            else:
                yield Instance(rule, Witness(pos), (Sequent(replace_at(ant, pos, Leaf(f.l)), h),
                                                    Sequent(replace_at(ant, pos, Leaf(f.r)), h)))
        return
    if rule == "AndR" and isinstance(h, And):
        yield Instance(rule, Witness(), (Sequent(ant, h.l), Sequent(ant, h.r)))
    elif rule in ("OrR1", "OrR2") and isinstance(h, Or):
        yield Instance(rule, Witness(), (Sequent(ant, h.l if rule == "OrR1" else h.r),))
    elif rule == "ImpR" and isinstance(h, Imp):
        yield Instance(rule, Witness(), (Sequent(add(ant, h.l), h.r),))
    elif rule == "WandR" and isinstance(h, Wand):
        yield Instance(rule, Witness(), (Sequent(mult(ant, h.l), h.r),))
    elif rule == "StarR" and isinstance(h, Star):
        for pair in all_candidates(ant):
            for re_i, re_j in pair.assignments():
                yield Instance(rule, Witness(ROOT, candidate=(re_i, re_j)),
                               (Sequent(re_i, h.l), Sequent(re_j, h.r)))
    elif fam in ("ImpL", "WandL"):
        cls = Imp if fam == "ImpL" else Wand
        for pos in positions(ant, partial_mult=True):
            delta = sub_at(ant, pos)
            for core in strip_padding_cores(delta):
                for f in _core_principals(core, cls):
                    if not exposes(core, f):
                        continue
                    w = Witness(pos, core)
                    if fam == "ImpL":
                        yield Instance(rule, w, imp_premises(s, pos, f.l, f.r))
                        continue
                    yield Instance(rule, Witness(pos, core, (EMP, None)),
                                   wand_premises(s, pos, None, EMP, None, f.l, f.r))
                    sibs = _root_siblings(ant, pos)
                    if not sibs:
                        continue
                    for gp in _groups(sibs):
                        for pair in all_candidates(gp):
                            for re_i, re_j in pair.assignments():
                                yield Instance(rule, Witness(pos, core, (re_i, re_j), gp),
                                               wand_premises(s, pos, gp, re_i, re_j, f.l, f.r))


def _core_principals(core: Bunch, cls) -> list:
    kids = [core] if isinstance(core, Leaf) else list(core.children) if isinstance(core, Add) else []
    out = []
    for k in kids:
        if isinstance(k, Leaf) and isinstance(k.f, cls) and k.f not in out:
            out.append(k.f)
    return out


def find_instance(s: Sequent, rule: str, premises) -> Instance | None:
    """An instance of ``rule`` concluding ``s`` with exactly these premises."""
    premises = tuple(premises)
    for inst in rule_instances(s, rule):
        if inst.premises == premises:
            return inst
    return None


# -- checking ---------------------------------------------------------------

@dataclass(frozen=True)
class CheckReport:
    ok: bool
    path: tuple = ()
    reason: str = ""

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "ok"
        return f"invalid at node {list(self.path)}: {self.reason}"


class StepError(Exception):
    pass


def _need(cond, reason):
    if not cond:
        raise StepError(reason)


def _arity(d: Derivation, n: int):
    _need(len(d.premises) == n, f"{d.rule} expects {n} premise(s), got {len(d.premises)}")


def _premise_is(d: Derivation, i: int, expected: Sequent):
    got = d.premises[i].conclusion
    _need(got == expected, f"premise {i} is {print_sequent(got)}, expected {print_sequent(expected)}")


def _sub(b: Bunch, pos: Position) -> Bunch:
    _need(valid_position(b, pos), f"invalid position {pos.to_json()}")
    return sub_at(b, pos)


def _principal_leaf(d: Derivation, cls) -> Formula:
    node = _sub(d.conclusion.antecedent, d.witness.position)
    _need(isinstance(node, Leaf) and isinstance(node.f, cls),
          f"no {cls.__name__} formula at position {d.witness.position.to_json()}")
    return node.f


def check_step(d: Derivation, allow_cut: bool = False) -> None:
    """Raise StepError unless ``d``'s last inference is a valid instance."""
    rule, s, w = d.rule, d.conclusion, d.witness
    ant, h = s.antecedent, s.consequent
    if rule in CUT_RULES:
        _need(allow_cut, f"{rule} is not a rule of the cut-free calculus")
        return check_cut_step(d)
    _need(rule in RULES, f"unknown rule {rule!r}")
    if rule in ("Id", "MTopR"):
        _arity(d, 0)
        _need(isinstance(h, Atom if rule == "Id" else MTop), f"{rule} needs consequent of the right form")
        core = w.essence_core
        _need(core is not None, "missing essence core")
        _need(is_essence_of(ant, core), "essence core does not strip from the antecedent")
        _need(exposes(core, h), "core does not expose the consequent")
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
        _need(w.candidate is not None and None not in w.candidate, "missing candidate")
        re_i, re_j = w.candidate
        _need(is_candidate_pair(CandidatePair.of(re_i, re_j), ant), "not a candidate of the antecedent")
        _premise_is(d, 0, Sequent(re_i, h.l))
        _premise_is(d, 1, Sequent(re_j, h.r))
    elif rule == "ImpL":
        _arity(d, 2)
        delta = _essence_root(d)
        f = d.premises[0].conclusion.consequent
        _premise_is(d, 0, Sequent(delta, f))
        options = [c.f for c in _core_formulas(w.essence_core) if isinstance(c.f, Imp) and c.f.l == f]
        _need(options, "core exposes no matching implication")
        got = d.premises[1].conclusion
        _need(any(got == imp_premises(s, w.position, g.l, g.r)[1] for g in options),
              f"premise 1 is {print_sequent(got)}, which does not match the rule")
    elif rule == "WandL":
        _arity(d, 2)
        _essence_root(d)
        _need(w.candidate is not None, "missing candidate")
        re_i, re_j = w.candidate
        gp = w.gamma_prime
        _need(re_i is not None, "missing Re_i")
        if gp is None:
            _need(re_i == EMP and re_j is None, "empty gamma' forces Re_i = emp and empty Re_j")
        else:
            _need(re_j is not None, "missing Re_j")
            _need(is_candidate_pair(CandidatePair.of(re_i, re_j), gp), "not a candidate of gamma'")
        f = d.premises[0].conclusion.consequent
        options = [c.f for c in _core_formulas(w.essence_core) if isinstance(c.f, Wand) and c.f.l == f]
        _need(options, "core exposes no matching wand")
        got = [p.conclusion for p in d.premises]
        ok = False
        for g in options:
            try:
                expect = wand_premises(s, w.position, gp, re_i, re_j, g.l, g.r)
            except (ValueError, PositionError) as err:
                raise StepError(str(err)) from None
            ok = ok or list(expect) == got
        _need(ok, "premises do not match the rule")


def _core_formulas(core: Bunch):
    return [core] if isinstance(core, Leaf) else [c for c in core.children if isinstance(c, Leaf)]


def _essence_root(d: Derivation) -> Bunch:
    w = d.witness
    delta = _sub(d.conclusion.antecedent, w.position)
    _need(w.essence_core is not None, "missing essence core")
    _need(is_essence_of(delta, w.essence_core), "essence core does not strip from the root")
    return delta


def check_cut_step(d: Derivation) -> None:
    """Cut: Γ1 ⊢ F and Γ2(F) ⊢ H give Γ2(Γ1) ⊢ H.
    CutCS: Γ3;Γ1 ⊢ F and Γ2(F;Γ1) ⊢ H give Γ2(Γ3;Γ1) ⊢ H, with Γ1 in
    ``gamma_prime`` and the position naming the Γ3;Γ1 occurrence."""
    _arity(d, 2)
    s, w = d.conclusion, d.witness
    left, right = d.premises[0].conclusion, d.premises[1].conclusion
    x = _sub(s.antecedent, w.position)
    _need(right.consequent == s.consequent, "cut changes the consequent")
    _need(left.antecedent == x, "left premise antecedent differs from the cut occurrence")
    cut = Leaf(left.consequent)
    if d.rule == "Cut":
        _need(right.antecedent == replace_at(s.antecedent, w.position, cut), "right premise does not match")
        return
    shared = w.gamma_prime
    _need(shared is not None, "CutCS needs the shared part")
    if shared != x:
        parts = x.children if isinstance(x, Add) else [x]
        _need(_remove_multiset(parts, list(shared.children) if isinstance(shared, Add) else [shared])
              is not None, "shared part is not an additive part of the cut occurrence")
    _need(right.antecedent == replace_at(s.antecedent, w.position, add(cut, shared)),
          "right premise does not match")


def check_derivation(d: Derivation, allow_cut: bool = False) -> CheckReport:
    for path, node in iter_nodes(d):
        try:
            check_step(node, allow_cut)
        except StepError as err:
            return CheckReport(False, path, str(err))
        except (PositionError, ValueError) as err:
            return CheckReport(False, path, f"malformed step: {err}")
    return CheckReport(True)


# -- proof search -----------------------------------------------------------

@dataclass(frozen=True)
class Proved:
    derivation: Derivation
    status = "proved"

    @property
    def depth(self):
        return derivation_depth(self.derivation)


@dataclass(frozen=True)
class Refuted:
    mode: str  # "exhausted" or "exhausted_with_pruning"
    status = "refuted"


@dataclass(frozen=True)
class Unknown:
    mode: str = "budget_exhausted"
    status = "unknown"


DEFAULT_DEPTH = 24
DEFAULT_NODES = 200_000


@lru_cache(maxsize=200_000)
def contraction_key(b: Bunch) -> Bunch:
    """Bunch with duplicate additive siblings merged (loop-check key)."""
    if isinstance(b, Leaf):
        return b
    kids = [contraction_key(c) for c in b.children]
    if isinstance(b, Add):
        kids = list(dict.fromkeys(kids))
        return add(*kids)
    return mult(*kids)


class _Budget(Exception):
    pass


_NO_DEP = 1 << 30


class Prover:
    """Depth-first backward search with ancestor loop pruning.

    A failed subsearch is remembered when it did not rely on pruning against
    a sequent above it on the branch, so the same sequent reached along
    another branch is not searched again.  Failures caused by the depth limit
    are remembered together with the remaining depth.
    """

    CLEAN, PRUNED, CUT = 0, 1, 2

    def __init__(self, max_depth=DEFAULT_DEPTH, max_nodes=DEFAULT_NODES, full_roots=False,
                 disabled=()):
        self.max_depth = max_depth
        self.max_nodes = max_nodes
        self.full_roots = full_roots
        self.disabled = frozenset(disabled)
        self.nodes = 0
        self.proved: dict = {}
        self.refuted: dict = {}   # sequent -> CLEAN | PRUNED
        self.shallow: dict = {}   # sequent -> largest remaining depth known to fail
        self.limit = max_depth

    def run(self, s: Sequent):
        """Iterative deepening, so returned proofs are shallow."""
        limits = sorted({*range(2, 11), *range(14, self.max_depth, 4), self.max_depth})
        try:
            for limit in (n for n in limits if n <= self.max_depth):
                self.limit = limit
                d, status, _ = self._search(s, 1, {})
                if d is not None:
                    return Proved(d)
                if status != self.CUT:
                    return Refuted("exhausted" if status == self.CLEAN else "exhausted_with_pruning")
        except _Budget:
            pass
        return Unknown()

    def _search(self, s: Sequent, depth: int, trail: dict):
        """Return (derivation or None, status, lowest trail index relied on)."""
        if s in self.proved:
            return self.proved[s], self.CLEAN, _NO_DEP
        if s in self.refuted:
            return None, self.refuted[s], _NO_DEP
        remaining = self.limit - depth
        if self.shallow.get(s, -1) >= remaining:
            return None, self.CUT, _NO_DEP
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise _Budget
        instances = _expand_cached(s, self.full_roots, self.disabled)
        if instances and instances[0].rule in AXIOMS:
            d = Derivation(instances[0].rule, s, instances[0].witness)
            self.proved[s] = d
            return d, self.CLEAN, _NO_DEP
        if remaining <= 0:
            self.shallow[s] = max(self.shallow.get(s, -1), remaining)
            return None, self.CUT, _NO_DEP
        here = len(trail)
        key = _loop_key(s)
        trail = {**trail, key: here}
        status, dep = self.CLEAN, _NO_DEP
        for inst in instances:
            subs = []
            for i in range(len(inst)):
                p = inst.premise(i)
                hit = trail.get(_loop_key(p))
                if hit is not None:
                    status = max(status, self.PRUNED)
                    dep = min(dep, hit)
                    break
                d, st, dp = self._search(p, depth + 1, trail)
                status, dep = max(status, st), min(dep, dp)
                if d is None:
                    break
                subs.append(d)
            else:
                d = Derivation(inst.rule, s, inst.witness, tuple(subs))
                self.proved[s] = d
                return d, self.CLEAN, _NO_DEP
        if dep >= here:
            if status == self.CUT:
                self.shallow[s] = max(self.shallow.get(s, -1), remaining)
            else:
                self.refuted[s] = status
            dep = _NO_DEP
        return None, status, dep


@lru_cache(maxsize=100_000)
def _loop_key(s: Sequent):
    return (contraction_key(s.antecedent), s.consequent)


@lru_cache(maxsize=50_000)
def _expand_cached(s: Sequent, full_roots: bool, disabled: frozenset):
    return tuple(_expand(s, full_roots, disabled, committed=True))


def prove(s: Sequent, max_depth: int = DEFAULT_DEPTH, max_nodes: int = DEFAULT_NODES,
          full_roots: bool = False, disabled=()):
    """Proved(derivation) | Refuted(mode) | Unknown(budget_exhausted)."""
    return Prover(max_depth, max_nodes, full_roots, disabled).run(s)
