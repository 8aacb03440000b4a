import random

import pytest
from hypothesis import HealthCheck, given, settings

from bunchkit.bunch import EMP, ROOT, Add, Leaf, Position, parse_bunch, positions, sub_at
from bunchkit.formula import (
    BOT, MTOP, TOP, And, Imp, Or, Star, Wand, parse_sequent, subformulas,
)
from bunchkit.lbiz import (
    Derivation, Proved, check_derivation, derivation_depth, iter_nodes, print_sequent, prove,
)
from bunchkit.metatheory import (
    CutEliminator, TransformError, contract_derivation, cut_corpus, cut_measures, cut_node,
    dumps_report, ea2_derivation, eliminate_cuts, eqant_derivation, forward_derivations, has_cut,
    invert_derivation, measures_decrease, proved_corpus, run_admissibility, run_cutelim,
    run_equivalence, sample_sequents, transformer_cases, weaken_derivation,
)

from strategies import sequents

S = parse_sequent
B = parse_bunch


def proof(text):
    r = prove(S(text))
    assert isinstance(r, Proved), text
    return r.derivation


def find(b, text):
    target = B(text)
    return next(x for x in positions(b) if sub_at(b, x) == target)


def assert_good(out, concl, depth_bound):
    assert check_derivation(out), str(check_derivation(out))
    assert out.conclusion == S(concl)
    assert derivation_depth(out) <= depth_bound


# -- weakening and padding ---------------------------------------------------

def test_weaken_axiom():
    out = weaken_derivation(proof("p |- p"), ROOT, B("q"))
    assert_good(out, "p; q |- p", 1)
    assert out.rule == "Id"


def test_weaken_inside_an_essence():
    d = proof("(emp; p1), (emp; p1 -> p2) |- p2")
    ant = d.conclusion.antecedent
    out = weaken_derivation(d, find(ant, "p1"), B("q"))
    assert_good(out, "(emp; p1; q), (emp; p1 -> p2) |- p2", derivation_depth(d))


def test_weaken_across_a_wand():
    d = proof("top --* p1, top --* (p1 -> p2) |- p2")
    out = weaken_derivation(d, find(d.conclusion.antecedent, "top --* p1"), B("r, r"))
    assert_good(out, "(top --* p1; (r, r)), top --* (p1 -> p2) |- p2", derivation_depth(d))


def test_ea2_examples():
    assert_good(ea2_derivation(proof("p |- p"), ROOT, B("q")), "p, (emp; q) |- p", 1)
    assert_good(ea2_derivation(proof("p |- p"), ROOT, None), "p, emp |- p", 1)


def test_ea2_inside_a_layer():
    d = proof("p; (p -> q) |- q")
    out = ea2_derivation(d, find(d.conclusion.antecedent, "p -> q"), B("r"))
    assert_good(out, "p; (p -> q, (emp; r)) |- q", derivation_depth(d))


def test_invalid_position_is_an_error():
    with pytest.raises(Exception):
        weaken_derivation(proof("p |- p"), Position((3,)), B("q"))


# -- inversion and unit laws --------------------------------------------------

def test_invert_and_right():
    d = proof("p /\\ q |- q /\\ p")
    left, right = invert_derivation(d, "and_right")
    assert_good(left, "p /\\ q |- q", derivation_depth(d))
    assert_good(right, "p /\\ q |- p", derivation_depth(d))


def test_invert_emp_erase():
    d = proof("p, emp |- p")
    (out,) = invert_derivation(d, "emp_erase", find(d.conclusion.antecedent, "emp"))
    assert_good(out, "p |- p", derivation_depth(d))


def test_invert_imp_right():
    d = proof("p |- q -> q")
    (out,) = invert_derivation(d, "imp_right")
    assert_good(out, "p; q |- q", derivation_depth(d))


def test_invert_left_rules():
    d = proof("p /\\ q, r |- r * q")
    (out,) = invert_derivation(d, "and_left", find(d.conclusion.antecedent, "p /\\ q"))
    assert_good(out, "(p; q), r |- r * q", derivation_depth(d))
    d = proof("p \\/ q |- q \\/ p")
    outs = invert_derivation(d, "or_left", find(d.conclusion.antecedent, "p \\/ q"))
    assert [o.conclusion for o in outs] == [S("p |- q \\/ p"), S("q |- q \\/ p")]
    d = proof("p * q |- q * p")
    (out,) = invert_derivation(d, "star_left", ROOT)
    assert_good(out, "p, q |- q * p", derivation_depth(d))


def test_invert_shape_mismatch():
    with pytest.raises(TransformError):
        invert_derivation(proof("p |- p"), "and_right")


@pytest.mark.parametrize("start, direction, hole, expected", [
    ("p; top |- p", "EqAnt1Up", "top", "p |- p"),
    ("p, emp |- p", "EqAnt2Up", "emp", "p |- p"),
    ("p |- p", "EqAnt1Down", "p", "p; top |- p"),
    ("p |- p", "EqAnt2Down", "p", "p, emp |- p"),
])
def test_eqant_directions(start, direction, hole, expected):
    d = proof(start)
    out = eqant_derivation(d, direction, find(d.conclusion.antecedent, hole))
    assert_good(out, expected, derivation_depth(d))


# -- contraction ----------------------------------------------------------

def test_contract_axiom():
    d = proof("p; p |- p")
    out = contract_derivation(d, ROOT)
    assert_good(out, "p |- p", 1)


def test_contract_doubled_padding_structure():
    half = "(emp; p1), (emp; p1 -> p2)"
    d = proof(f"({half}); ({half}) |- p2")
    out = contract_derivation(d, ROOT)
    assert_good(out, f"{half} |- p2", derivation_depth(d))


def test_contract_under_a_wand():
    d = proof("(p --* q; p --* q), p |- q")
    node = next(x for x in positions(d.conclusion.antecedent) if isinstance(sub_at(d.conclusion.antecedent, x), Add))
    out = contract_derivation(d, node)
    assert_good(out, "p --* q, p |- q", derivation_depth(d))


def test_contract_needs_equal_halves():
    with pytest.raises(TransformError):
        contract_derivation(proof("p; q |- p"), ROOT)


# -- cut elimination ----------------------------------------------------------

def _cut(left_text, right_text):
    left, right = proof(left_text), proof(right_text)
    f = Leaf(left.conclusion.consequent)
    ant = right.conclusion.antecedent
    q = next(x for x in positions(ant) if x.select is None and sub_at(ant, x) == f)
    return cut_node(left, right, q)


def test_cut_measures():
    d = _cut("p |- p", "p |- p")
    assert check_derivation(d, allow_cut=True)
    assert cut_measures(d).level == 2
    d = _cut("p; q |- p /\\ q", "p /\\ q |- q")
    assert cut_measures(d).rank == 3
    assert cut_measures(d).level == derivation_depth(d.premises[0]) + derivation_depth(d.premises[1])


def test_cut_measures_rejects_other_nodes():
    with pytest.raises(TransformError):
        cut_measures(proof("p |- p"))


def test_cut_free_input_is_returned_unchanged():
    d = proof("p /\\ q |- q /\\ p")
    assert eliminate_cuts(d) is d


def test_eliminate_simple_cut():
    d = _cut("q /\\ p |- p", "p |- p \\/ q")
    assert d.conclusion == S("q /\\ p |- p \\/ q")
    assert check_derivation(d, allow_cut=True)
    assert not check_derivation(d)
    out = eliminate_cuts(d)
    assert not has_cut(out)
    assert out.conclusion == d.conclusion
    assert check_derivation(out)


@pytest.mark.parametrize("left, right, case", [
    ("p; q |- p /\\ q", "p /\\ q |- q \\/ r", "principal AndL"),
    ("p |- p \\/ q", "p \\/ q |- q \\/ p", "principal OrL"),
    ("p, q |- p * q", "p * q |- q * p", "principal StarL"),
    ("p -> q |- p -> q", "p; (p -> q) |- q", "principal ImpL"),
    ("p --* q |- p --* q", "p, (p --* q) |- q", "principal WandL"),
])
def test_principal_reductions(left, right, case):
    d = _cut(left, right)
    elim = CutEliminator()
    out = elim.run(d)
    assert case in {s.case for s in elim.steps}
    assert not has_cut(out) and out.conclusion == d.conclusion and check_derivation(out)
    assert measures_decrease(elim.steps)


def test_nested_cuts():
    inner = _cut("q /\\ p |- p", "p |- p \\/ q")
    right = proof("p \\/ q |- q \\/ p")
    q = next(x for x in positions(right.conclusion.antecedent))
    d = cut_node(inner, right, q)
    assert check_derivation(d, allow_cut=True)
    out = eliminate_cuts(d)
    assert not has_cut(out) and check_derivation(out) and out.conclusion == S("q /\\ p |- q \\/ p")


def test_cut_corpus_suite():
    pool = proved_corpus(11, 60, 4)
    cuts = cut_corpus(11, 60, pool)
    assert len(cuts) == 60
    assert any(n.rule == "CutCS" for d in cuts for _, n in iter_nodes(d))
    for d in cuts:
        m = cut_measures(d)
        assert m.level == derivation_depth(d.premises[0]) + derivation_depth(d.premises[1])
    rows = run_cutelim(cuts)
    assert all(r["ok"] for r in rows), [r for r in rows if not r["ok"]][:3]


# -- corpora and suites --------------------------------------------------

FROZEN_SAMPLE = [
    'q /\\ q |- p',
    'q, top \\/ p |- q',
    'emp, (q; top \\/ p) |- q',
    'p * q; (p, q) |- q',
    'p \\/ emp, q |- q \\/ q',
    'p --* p; (bot --* q, q) |- p',
    'emp, (bot /\\ q; p) |- p',
    'p |- q -> p',
    'q |- q',
    'top, (p; q) |- p \\/ q',
]


def test_sample_is_frozen():
    assert [print_sequent(s) for s in sample_sequents(1, 10, 3, ("p", "q"))] == FROZEN_SAMPLE


def test_samples_round_trip():
    for s in sample_sequents(7, 200):
        assert S(print_sequent(s)) == s


def test_samples_cover_every_connective():
    seen = set()
    for s in sample_sequents(1, 100):
        fs = [s.consequent] + [b.f for b in _leaves(s.antecedent)]
        for f in fs:
            seen.update(type(g) for g in subformulas(f))
    assert {And, Or, Imp, Star, Wand, type(TOP), type(BOT), type(MTOP)} <= seen


def _leaves(b):
    if isinstance(b, Leaf):
        return [b]
    return [x for c in b.children for x in _leaves(c)]


def test_equivalence_on_an_unprovable_sequent():
    (row,) = run_equivalence([S("p |- q")])
    assert row == {"sequent": "p |- q", "lbiz": "refuted", "lbiz_mode": "exhausted", "lbi": "unknown", "ok": True}


def test_equivalence_on_golden_sequents():
    rows = run_equivalence([S(t) for t in [
        "top --* p1, top --* (p1 -> p2) |- p2", "(emp; p1), (emp; p1 -> p2) |- p2",
        "p1; ((emp; q), p1 -> p2) |- p2", "p |- p * emp", "p * emp |- p",
    ]], lbi_nodes=20_000, lbi_depth=16)
    assert all(r["ok"] and r["lbiz"] == "proved" and r["lbi"] == "proved" for r in rows)


def test_reports_are_deterministic(monkeypatch):
    corpus = sample_sequents(5, 30)
    first = dumps_report(run_equivalence(corpus))
    monkeypatch.setenv("BUNCHKIT_THREADS", "1")
    assert dumps_report(run_equivalence(corpus)) == first


def test_forward_derivations_check():
    base = proved_corpus(2, 40, 4)
    extra = forward_derivations(2, base, 40)
    assert len(extra) == 40
    for d in extra:
        assert check_derivation(d)


def test_admissibility_suite():
    base = proved_corpus(3, 60, 4)
    ds = base + forward_derivations(3, base, 30)
    rows = run_admissibility(ds, 3)
    assert len({r["transformer"] for r in rows}) >= 10
    assert all(r["ok"] for r in rows), [r for r in rows if not r["ok"]][:3]


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
@given(sequents(3, 3))
def test_transformers_preserve_validity_and_depth(s):
    r = prove(s, max_nodes=400)
    if not isinstance(r, Proved):
        return
    d = r.derivation
    for name, thunk in transformer_cases(d, random.Random(0)):
        out = thunk()
        for o in out if isinstance(out, tuple) else (out,):
            assert check_derivation(o), name
            assert derivation_depth(o) <= derivation_depth(d), name


def test_invalid_input_is_not_turned_into_a_valid_one():
    d = proof("p; q |- p")
    bad = Derivation(d.rule, S("q; r |- p"), d.witness, d.premises)
    assert not check_derivation(bad)
    with pytest.raises(TransformError):
        weaken_derivation(bad, ROOT, B("r"))


def test_emp_as_an_explicit_pad():
    out = ea2_derivation(proof("q |- q"), ROOT, EMP)
    assert_good(out, "q, (emp; emp) |- q", 1)
