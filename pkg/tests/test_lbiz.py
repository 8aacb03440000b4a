import json
from dataclasses import replace

import pytest
from hypothesis import given, settings

from bunchkit import lbiz
from bunchkit.bunch import EMP, ROOT, Sequent, parse_bunch
from bunchkit.formula import Atom, parse_sequent
from bunchkit.lbiz import (
    Derivation, Proved, Refuted, Unknown, Witness, check_derivation, derivation_depth, expand,
    from_json, iter_nodes, prove, rule_family, to_json,
)
from bunchkit.metatheory import sample_sequents
from bunchkit.relations import CandidatePair, rep_candidates

from strategies import sequents

S = parse_sequent

GOLDEN = [
    "top --* p1, top --* (p1 -> p2) |- p2",
    "(emp; p1), (emp; p1 -> p2) |- p2",
    "p1; ((emp; q), p1 -> p2) |- p2",
    "p |- p /\\ top",
    "p /\\ top |- p",
    "p |- p * emp",
    "p * emp |- p",
]


def _instances(text):
    return [(i.rule, list(i.premises)) for i in expand(S(text))]


def test_expand_and_right():
    assert ("AndR", [S("p; q |- p"), S("p; q |- q")]) in _instances("p;q |- p /\\ q")


def test_expand_id_through_padding():
    assert ("Id", []) in _instances("p, (emp;q) |- p")


def test_expand_star_right_with_unit_candidate():
    assert ("StarR", [S("p |- p"), S("emp |- emp")]) in _instances("p |- p * emp")


def test_expand_nothing_applies():
    assert expand(S("p |- q")) == []


def test_expand_wand_left_with_empty_siblings():
    rules = _instances("emp --* q |- q")
    assert ("WandL", [S("emp |- emp"), S("q; (emp --* q) |- q")]) in rules


def test_expand_is_stable():
    s = S("(p -> q), (q; p --* r) |- r * (p \\/ q)")
    first = [(i.rule, i.witness, i.premises) for i in expand(s)]
    for _ in range(3):
        assert [(i.rule, i.witness, i.premises) for i in expand(s)] == first


def test_search_order_puts_axioms_and_invertible_rules_first():
    rules = [i.rule for i in expand(S("p /\\ q; (p -> q) |- q /\\ (p * q)"))]
    assert rules.index("AndL") < rules.index("AndR") < rules.index("ImpL")


@pytest.mark.parametrize("text", GOLDEN)
def test_golden_sequents_are_proved(text):
    r = prove(S(text))
    assert isinstance(r, Proved)
    assert check_derivation(r.derivation)
    assert r.derivation.conclusion == S(text)


def test_wand_example_depth_is_frozen():
    assert prove(S(GOLDEN[0])).depth == 4


@pytest.mark.parametrize("text", ["p |- q", "p * q |- p /\\ q", "p ; q |- p * q"])
def test_refuted(text):
    assert isinstance(prove(S(text)), Refuted)


def test_no_rule_gives_plain_exhaustion():
    assert prove(S("p |- q")) == Refuted("exhausted")


def test_budget_exhaustion_is_unknown():
    assert prove(S(GOLDEN[0]), max_nodes=3) == Unknown("budget_exhausted")


def test_prove_is_deterministic():
    a = prove(S("(p -> q); (q -> r); p |- r /\\ q"))
    b = prove(S("(p -> q); (q -> r); p |- r /\\ q"))
    assert a == b


def test_derivation_depth():
    leaf = Derivation("Id", S("p |- p"), Witness(ROOT, parse_bunch("p")))
    assert derivation_depth(leaf) == 1
    both = Derivation("AndR", S("p |- p /\\ p"), Witness(), (leaf, leaf))
    assert derivation_depth(both) == 2
    assert check_derivation(both)


def test_checker_accepts_candidates_outside_the_representatives():
    concl = S("p, (q; (r, (s; t))) |- p * q")
    re_i, re_j = parse_bunch("p"), parse_bunch("q; (r, s)")
    assert CandidatePair.of(re_i, re_j) not in rep_candidates(concl.antecedent)
    left = prove(Sequent(re_i, Atom("p"))).derivation
    right = prove(Sequent(re_j, Atom("q"))).derivation
    d = Derivation("StarR", concl, Witness(ROOT, candidate=(re_i, re_j)), (left, right))
    assert check_derivation(d)


def test_checker_reports_the_failing_node():
    d = prove(S(GOLDEN[0])).derivation
    doc = json.loads(json.dumps(to_json(d)))
    doc["premises"][1]["premises"][1]["conclusion"] = doc["premises"][1]["premises"][1]["conclusion"].replace("p2", "p3")
    report = check_derivation(from_json(doc))
    assert not report
    assert report.path in ((1,), (1, 1))


def test_checker_rejects_bad_witnesses():
    good = Derivation("Id", S("p; q |- p"), Witness(ROOT, parse_bunch("p; q")))
    assert check_derivation(good)
    assert not check_derivation(replace(good, witness=Witness(ROOT, parse_bunch("q"))))
    assert not check_derivation(replace(good, witness=Witness(ROOT, None)))
    assert not check_derivation(Derivation("Id", S("p, q |- p"), Witness(ROOT, parse_bunch("p, q"))))
    assert not check_derivation(Derivation("WkL", S("p; q |- p"), Witness(), ()))


def test_checker_rejects_wrong_arity():
    leaf = Derivation("Id", S("p |- p"), Witness(ROOT, parse_bunch("p")))
    assert not check_derivation(Derivation("AndR", S("p |- p /\\ p"), Witness(), (leaf,)))


def test_json_round_trip():
    for text in GOLDEN:
        d = prove(S(text)).derivation
        doc = to_json(d)
        assert doc["calculus"] == "lbiz"
        assert set(doc) == {"calculus", "rule", "conclusion", "witness", "premises"}
        assert from_json(json.loads(json.dumps(doc))) == d


def test_json_rejects_garbage():
    for bad in [[], {"rule": "Id"}, {"rule": "Id", "conclusion": "p |-", "premises": []}]:
        with pytest.raises(ValueError):
            from_json(bad)


def test_proofs_use_only_the_fourteen_rules():
    families = {rule_family(r) for r in lbiz.RULES}
    assert len(families) == 14
    for s in sample_sequents(3, 60):
        r = prove(s, max_nodes=2000)
        if isinstance(r, Proved):
            assert all(rule_family(n.rule) in families for _, n in iter_nodes(r.derivation))


def test_empty_siblings_wand_uses_emp():
    r = prove(S("emp --* q |- q"))
    assert r.derivation.rule == "WandL"
    assert r.derivation.premises[0].conclusion.antecedent == EMP


def test_maximal_roots_lose_nothing():
    corpus = sample_sequents(1, 150) + sample_sequents(2, 100, 4, ("p", "q"), max_leaves=5)
    for s in corpus:
        a = prove(s, max_nodes=3000)
        b = prove(s, max_nodes=3000, full_roots=True)
        assert a.status == b.status, str(s)


@settings(max_examples=150, deadline=None)
@given(sequents())
def test_soundness(s):
    r = prove(s, max_nodes=500)
    if isinstance(r, Proved):
        assert check_derivation(r.derivation)
        assert r.derivation.conclusion == s
