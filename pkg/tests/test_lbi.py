import random
from itertools import combinations

import pytest

from bunchkit import lbi
from bunchkit.bunch import ROOT, Leaf, Position, Sequent, add, mult, parse_bunch, positions, sub_at
from bunchkit.formula import parse_formula, parse_sequent
from bunchkit.lbi import SHRINKING, check_derivation, lbi_expand, lbi_prove, shrink_set
from bunchkit.lbiz import Derivation, Proved, Unknown, Witness, iter_nodes, prove
from bunchkit.metatheory import random_bunch, sample_sequents

import oracles

S = parse_sequent
F = parse_formula
WAND_GOAL = "top --* p1, top --* (p1 -> p2) |- p2"
EMP_GOAL = "(emp; p1), (emp; p1 -> p2) |- p2"


def leaf_position(b, text):
    target = Leaf(F(text))
    return next(x for x in positions(b) if x.select is None and sub_at(b, x) == target)


def node(rule, sequent, witness=Witness(), *premises):
    return Derivation(rule, sequent, witness, tuple(premises))


def contraction_derivation():
    """The hand-built LBI derivation of the wand goal that contracts the
    whole antecedent first, then consumes one wand from each copy."""
    w1, w2 = F("top --* p1"), F("top --* (p1 -> p2)")
    x = mult(w1, w2)
    p1, p2, imp = F("p1"), F("p2"), F("p1 -> p2")

    ant_c = add(p1, p2)
    weakened = node("WkL", Sequent(ant_c, p2), Witness(leaf_position(ant_c, "p1")),
                    node("Id", Sequent(Leaf(p2), p2)))

    ant_b = add(p1, imp)
    imp_step = node("ImpL", Sequent(ant_b, p2), Witness(leaf_position(ant_b, "p1 -> p2"), gamma_prime=Leaf(p1)),
                    node("Id", Sequent(Leaf(p1), p1)), weakened)

    ant_a = add(p1, x)
    second = node("WandL", Sequent(ant_a, p2),
                  Witness(leaf_position(ant_a, "top --* (p1 -> p2)"), gamma_prime=Leaf(w1)),
                  node("TopR", Sequent(Leaf(w1), F("top"))), imp_step)

    doubled = add(x, x)
    first = node("WandL", Sequent(doubled, p2),
                 Witness(leaf_position(doubled, "top --* p1"), gamma_prime=Leaf(w2)),
                 node("TopR", Sequent(Leaf(w2), F("top"))), second)
    return node("CtrL", S(WAND_GOAL), Witness(ROOT), first)


def test_hand_built_contraction_derivation_checks():
    d = contraction_derivation()
    assert check_derivation(d), str(check_derivation(d))
    assert [n.rule for _, n in iter_nodes(d)].count("CtrL") == 1


def test_hand_built_derivation_breaks_without_the_extra_wand():
    # the inner WandL needs both wands next to p1; dropping one is rejected
    d = contraction_derivation()
    second = d.premises[0].premises[1]
    broken_ant = add(F("p1"), Leaf(F("top --* (p1 -> p2)")))
    bad = Derivation("WandL", Sequent(broken_ant, F("p2")), second.witness, second.premises)
    assert not check_derivation(bad)


def test_weakening_cannot_remove_a_multiplicative_part():
    ant = parse_bunch("p, q")
    d = node("WkL", Sequent(ant, F("p")), Witness(leaf_position(ant, "q")), node("Id", S("p |- p")))
    report = check_derivation(d)
    assert not report and report.path == ()


def test_weakening_an_additive_part_is_fine():
    ant = parse_bunch("p; q")
    d = node("WkL", Sequent(ant, F("p")), Witness(leaf_position(ant, "q")), node("Id", S("p |- p")))
    assert check_derivation(d)


def _cut(right_concl):
    left = node("OrR1", S("p |- p \\/ q"), Witness(), node("Id", S("p |- p")))
    right = lbi_prove(S(right_concl)).derivation
    return left, right


def test_cut_with_matching_formula_checks():
    left, right = _cut("p \\/ q |- q \\/ p")
    d = node("Cut", S("p |- q \\/ p"), Witness(ROOT), left, right)
    assert check_derivation(d)


def test_cut_with_mismatched_formula_is_rejected():
    left, right = _cut("q \\/ p |- q \\/ p")
    d = node("Cut", S("p |- q \\/ p"), Witness(ROOT), left, right)
    report = check_derivation(d)
    assert not report and "right premise" in report.reason


def test_unit_law_rules_check():
    ant = parse_bunch("p; top")
    d = node("EqAnt1Down", Sequent(ant, F("p")), Witness(leaf_position(ant, "top")), node("Id", S("p |- p")))
    assert check_derivation(d)
    up = node("EqAnt2Up", S("p |- p * emp"), Witness(ROOT),
              node("StarR", S("p, emp |- p * emp"), Witness(candidate=(parse_bunch("p"), parse_bunch("emp"))),
                   node("Id", S("p |- p")), node("MTopR", S("emp |- emp"))))
    assert check_derivation(up)


def test_expand_examples():
    rules = [i.rule for i in lbi_expand(S("p /\\ q |- p /\\ q"))]
    assert "AndL" in rules
    assert [i.rule for i in lbi_expand(S("p |- p"))][0] == "Id"
    assert all(i.rule != "Cut" for i in lbi_expand(S("p; q |- p /\\ q")))


def test_prove_examples():
    for text in [EMP_GOAL, "p |- p * emp", WAND_GOAL, "p * emp |- p", "p |- p /\\ top", "p /\\ top |- p"]:
        r = lbi_prove(S(text))
        assert isinstance(r, Proved), text
        assert check_derivation(r.derivation)
    assert lbi_prove(S("p |- q")) == Unknown()


def test_wand_goal_needs_contraction():
    assert isinstance(lbi_prove(S(WAND_GOAL), max_depth=16, max_nodes=100_000, disabled=["CtrL"]), Unknown)
    r = lbi_prove(S(WAND_GOAL), max_depth=16, max_nodes=100_000)
    assert isinstance(r, Proved)
    assert any(n.rule == "CtrL" for _, n in iter_nodes(r.derivation))


def test_shrinking_macro_matches_single_steps():
    rng = random.Random(5)
    for _ in range(200):
        b = random_bunch(rng, rng.randint(1, 5), ["p", "q"], 2)
        for k in range(len(SHRINKING) + 1):
            for rules in combinations(SHRINKING, k):
                assert shrink_set(b, rules) == oracles.shrink_oracle(b, rules), (b, rules)


def test_shrinking_macro_on_units():
    got = shrink_set(parse_bunch("p, emp, (q; top)"), ("EqAnt1Down", "EqAnt2Down"))
    assert got == {parse_bunch(t) for t in ["p, emp, (q; top)", "p, (q; top)", "p, emp, q", "p, q"]}


CORPUS = sample_sequents(4, 80, 4, ("p", "q"))


def test_proofs_check_and_use_only_lbi_rules():
    for s in CORPUS:
        r = lbi_prove(s, max_depth=10, max_nodes=500)
        if isinstance(r, Proved):
            assert check_derivation(r.derivation)
            assert all(n.rule in lbi.LBI_RULES for _, n in iter_nodes(r.derivation))


def test_lbi_proofs_are_lbiz_provable():
    for s in CORPUS:
        if isinstance(lbi_prove(s, max_depth=10, max_nodes=500), Proved):
            assert isinstance(prove(s, max_nodes=3000), Proved), str(s)


def test_lbiz_proofs_are_lbi_provable_with_a_generous_budget():
    proved = [s for s in CORPUS if isinstance(prove(s, max_nodes=3000), Proved)]
    assert len(proved) >= 20
    for s in proved:
        assert isinstance(lbi_prove(s, max_depth=14, max_nodes=50_000), Proved), str(s)


@pytest.mark.parametrize("off", [["CtrL"], ["WkL"], ["EqAnt1Up", "EqAnt2Up"], ["StarR", "CtrL"]])
def test_enabling_rules_never_loses_proofs(off):
    for s in CORPUS[:40]:
        fewer = lbi_prove(s, max_depth=10, max_nodes=2000, disabled=off)
        if isinstance(fewer, Proved):
            assert isinstance(lbi_prove(s, max_depth=10, max_nodes=2000), Proved), str(s)


def test_disabled_rules_never_appear():
    for s in CORPUS[:40]:
        r = lbi_prove(s, max_depth=10, max_nodes=500, disabled=["WkL", "OrR"])
        if isinstance(r, Proved):
            assert not {n.rule for _, n in iter_nodes(r.derivation)} & {"WkL", "OrR1", "OrR2"}


def test_position_of_the_cut_occurrence_must_be_valid():
    left, right = _cut("p \\/ q |- q \\/ p")
    d = node("Cut", S("p |- q \\/ p"), Witness(Position((0,))), left, right)
    assert not check_derivation(d)
