import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathrules.completion import (KgcConfig, Query, _propose, _rank_of_truth,
                                  _TargetRules, aggregate_max, answer_query,
                                  evaluate)
from pathrules.rules import (BOTH_ANCHORED, CLOSED, HEAD_ANCHORED, Rule,
                             RuleStats)
from pathrules.store import FORWARD, REVERSE

from conftest import make_split


def with_value(rule, value):
    rule.stats = RuleStats(smc=value, sc=value, pca=value, support=1,
                           body_groundings=1, hc=1.0)
    return rule


# Independent comparator for the maximum aggregation: pad with -inf and
# compare tuples.
def beats(confs_a, confs_b):
    a = tuple(sorted(confs_a, reverse=True))
    b = tuple(sorted(confs_b, reverse=True))
    width = max(len(a), len(b))
    pad = (float("-inf"),)
    a = a + pad * (width - len(a))
    b = b + pad * (width - len(b))
    return a > b


def test_aggregate_max_examples():
    assert aggregate_max({1: [0.9], 2: [0.8, 0.8]}) == [1, 2]
    assert aggregate_max({1: [0.9, 0.5], 2: [0.9, 0.6]}) == [2, 1]
    assert aggregate_max({1: [0.9], 2: [0.9, 0.1]}) == [2, 1]
    assert aggregate_max({}) == []
    # exact ties resolve by entity id ascending
    assert aggregate_max({5: [0.3], 2: [0.3]}) == [2, 5]


def test_aggregate_max_matches_padded_comparison():
    rng = random.Random(0)
    for _ in range(500):
        confs_a = [rng.choice((0.1, 0.5, 0.9)) for _ in range(rng.randint(1, 4))]
        confs_b = [rng.choice((0.1, 0.5, 0.9)) for _ in range(rng.randint(1, 4))]
        order = aggregate_max({0: confs_a, 1: confs_b})
        if beats(confs_a, confs_b):
            assert order == [0, 1]
        elif beats(confs_b, confs_a):
            assert order == [1, 0]
        else:
            assert order == [0, 1]  # id tie-break


conf_lists = st.dictionaries(
    st.integers(min_value=0, max_value=20),
    st.lists(st.sampled_from([0.1, 0.2, 0.5, 0.9]), min_size=1, max_size=4),
    min_size=2, max_size=8)


@given(conf_lists)
@settings(max_examples=200, deadline=None)
def test_aggregate_max_total_order(cands):
    order = aggregate_max(cands)
    assert sorted(order) == sorted(cands)
    # pairwise consistency: nothing later in the order beats something earlier
    for i, a in enumerate(order):
        for b in order[i + 1:]:
            assert not beats(cands[b], cands[a])


@given(conf_lists, st.sampled_from([0.5, 2.0, 10.0]))
@settings(max_examples=100, deadline=None)
def test_aggregate_max_scale_invariant(cands, scale):
    scaled = {e: [c * scale for c in confs] for e, confs in cands.items()}
    assert aggregate_max(cands) == aggregate_max(scaled)


def test_rank_of_truth_matches_order():
    rng = random.Random(1)
    for _ in range(200):
        cands = {e: [rng.choice((0.1, 0.5, 0.9))
                     for _ in range(rng.randint(1, 3))]
                 for e in range(rng.randint(1, 8))}
        truth = rng.randrange(10)
        q = Query(0, 0, True, truth)
        rank = _rank_of_truth(q, cands)
        order = aggregate_max(cands)
        if truth in cands:
            assert rank == order.index(truth) + 1
        else:
            assert rank is None


def capital_rule_fixture():
    split = make_split(
        train=[("Beijing", "City_in", "China"),
               ("Beijing", "Is_a", "Political Center")],
        test=[("Beijing", "Capital_of", "China")])
    kg = split.train
    # Capital_of only occurs in test; intern it for rule construction
    target = kg.predicates.add("Capital_of")
    car = with_value(Rule(CLOSED, target, True,
                          ((kg.predicates.id("City_in"), FORWARD),)), 0.9)
    return split, kg, target, car


def test_answer_query_capital():
    split, kg, target, car = capital_rule_fixture()
    q = Query(target, kg.entities.id("Beijing"), True,
              kg.entities.id("China"))
    assert answer_query(q, [car], kg, split) == [kg.entities.id("China")]


def test_answer_query_no_rules():
    split, kg, target, car = capital_rule_fixture()
    q = Query(target, kg.entities.id("Beijing"), True,
              kg.entities.id("China"))
    assert answer_query(q, [], kg, split) == []


def test_filtered_rank_never_worse():
    # candidate "known" is a train fact and outranks the truth until filtered
    split = make_split(
        train=[("a", "rt", "known"), ("a", "r1", "known"), ("a", "r2", "known"),
               ("a", "r1", "truth")],
        test=[("a", "rt", "truth")])
    kg = split.train
    rt = kg.predicates.id("rt")
    strong = with_value(Rule(CLOSED, rt, True,
                             ((kg.predicates.id("r1"), FORWARD),)), 0.9)
    extra = with_value(Rule(CLOSED, rt, True,
                            ((kg.predicates.id("r2"), FORWARD),)), 0.8)
    rules = [strong, extra]
    q = Query(rt, kg.entities.id("a"), True, kg.entities.id("truth"))
    prep = _TargetRules(rt, rules, "smooth")
    raw, _ = _propose(q, prep, kg, KgcConfig())
    raw_rank = _rank_of_truth(q, raw)
    filtered = answer_query(q, rules, kg, split)
    filtered_rank = filtered.index(kg.entities.id("truth")) + 1
    assert raw_rank == 2
    assert filtered_rank == 1
    assert filtered_rank <= raw_rank


def symmetric_eval_fixture():
    """Three test triples whose head and tail queries rank 1, 2, unranked."""
    train = [
        ("a1", "r1", "b1"),                      # t1: rank 1 both sides
        ("a2", "r1", "c2"), ("a2", "r2", "b2"),  # t2 tail: competitor via r1
        ("d2", "r1", "b2"),                      # t2 head: competitor via r1
    ]
    test = [("a1", "rt", "b1"), ("a2", "rt", "b2"), ("a3", "rt", "b3")]
    split = make_split(train, test=test)
    kg = split.train
    rt = kg.predicates.add("rt")
    strong = with_value(Rule(CLOSED, rt, True,
                             ((kg.predicates.id("r1"), FORWARD),)), 0.9)
    weak = with_value(Rule(CLOSED, rt, True,
                           ((kg.predicates.id("r2"), FORWARD),)), 0.5)
    return split, [strong, weak]


def test_evaluate_hand_fixture():
    split, rules = symmetric_eval_fixture()
    result = evaluate(split, rules)
    assert result.n_queries == 6
    # ranks: {1, 2, None} on each side -> MRR (1 + .5 + 0) / 3
    assert result.mrr == pytest.approx(0.5)
    assert result.hits[1] == pytest.approx(1 / 3)
    assert result.hits[3] == pytest.approx(2 / 3)
    assert result.hits[10] == pytest.approx(2 / 3)
    assert result.hits[1] <= result.hits[3] <= result.hits[10]
    rt = split.train.predicates.id("rt")
    assert result.per_predicate[rt].n_queries == 6


def test_evaluate_uncovered_targets_score_zero():
    split, rules = symmetric_eval_fixture()
    result = evaluate(split, [])
    assert result.mrr == 0.0
    assert result.n_queries == 6


def test_rank_four_example():
    train = [("a", "r1", f"c{i}") for i in range(3)]
    train += [("a", "r1", "truth"), ("a", "r2", "truth")]
    split = make_split(train, test=[("a", "rt", "truth")])
    kg = split.train
    rt = kg.predicates.add("rt")
    strong = with_value(Rule(CLOSED, rt, True,
                             ((kg.predicates.id("r1"), FORWARD),)), 0.9)
    weak = with_value(Rule(CLOSED, rt, True,
                           ((kg.predicates.id("r2"), FORWARD),)), 0.5)
    q = Query(rt, kg.entities.id("a"), True, kg.entities.id("truth"))
    order = answer_query(q, [strong, weak], kg, split)
    # truth also fires the strong rule, tying on 0.9 with the competitors,
    # but its extra weak confidence breaks the tie in its favor
    assert order.index(kg.entities.id("truth")) == 0


def anchored_fixture():
    train = [("s1", "r1", "m1"), ("s2", "r1", "m2"), ("s3", "r2", "m3"),
             ("x", "rt", "h")]
    split = make_split(train, test=[("s1", "rt", "h")])
    kg = split.train
    rt = kg.predicates.id("rt")
    h = kg.entities.id("h")
    har = with_value(Rule(HEAD_ANCHORED, rt, True,
                          ((kg.predicates.id("r1"), FORWARD),),
                          head_anchor=h), 0.7)
    return split, kg, rt, h, har


def test_anchored_rule_open_slot_candidates():
    split, kg, rt, h, har = anchored_fixture()
    q = Query(rt, kg.entities.id("s1"), True, kg.entities.id("h"))
    assert answer_query(q, [har], kg, split) == [h]
    # bound entity without the body pattern proposes nothing
    q2 = Query(rt, kg.entities.id("s3"), True, kg.entities.id("h"))
    assert answer_query(q2, [har], kg, split) == []


def test_anchored_rule_bound_anchor_candidates():
    split, kg, rt, h, har = anchored_fixture()
    q = Query(rt, h, False, kg.entities.id("s1"))
    order = answer_query(q, [har], kg, split)
    assert set(order) == {kg.entities.id("s1"), kg.entities.id("s2")}
    # query object that differs from the anchor: rule never applies
    q2 = Query(rt, kg.entities.id("m3"), False, kg.entities.id("s1"))
    assert answer_query(q2, [har], kg, split) == []


def test_both_anchored_candidates():
    split, kg, rt, h, _ = anchored_fixture()
    m1 = kg.entities.id("m1")
    bar = with_value(Rule(BOTH_ANCHORED, rt, True,
                          ((kg.predicates.id("r1"), FORWARD),),
                          head_anchor=h, tail_anchor=m1), 0.6)
    q = Query(rt, kg.entities.id("s1"), True, h)
    assert answer_query(q, [bar], kg, split) == [h]
    q2 = Query(rt, kg.entities.id("s2"), True, h)  # tail anchor mismatch
    assert answer_query(q2, [bar], kg, split) == []
    q3 = Query(rt, h, False, kg.entities.id("s1"))
    assert answer_query(q3, [bar], kg, split) == [kg.entities.id("s1")]


def test_tautological_self_edge_rules():
    split = make_split(train=[("a", "rt", "b"), ("b", "rt", "a"),
                              ("a", "rt", "z")],
                       test=[("a", "rt", "c")])
    kg = split.train
    rt = kg.predicates.id("rt")
    forward_self = with_value(Rule(CLOSED, rt, True, ((rt, FORWARD),)), 0.9)
    inverse = with_value(Rule(CLOSED, rt, True, ((rt, REVERSE),)), 0.8)
    q = Query(rt, kg.entities.id("b"), True, kg.entities.id("a"))
    # the forward self-rule would only re-propose its own head edges
    prep = _TargetRules(rt, [forward_self], "smooth")
    cands, _ = _propose(q, prep, kg, KgcConfig())
    assert cands == {}
    # the inverse rule is a different edge and must still fire
    assert kg.entities.id("a") in answer_query(q, [inverse], kg, split)


def test_tautological_head_anchored_needs_other_witness():
    split = make_split(train=[("a", "rt", "h"), ("b", "rt", "h"),
                              ("b", "rt", "z")],
                       test=[("c", "rt", "h")])
    kg = split.train
    rt = kg.predicates.id("rt")
    h = kg.entities.id("h")
    har = with_value(Rule(HEAD_ANCHORED, rt, True, ((rt, FORWARD),),
                          head_anchor=h), 0.9)
    prep = _TargetRules(rt, [har], "smooth")
    # a's only rt edge is the predicted fact itself: no candidate
    qa = Query(rt, kg.entities.id("a"), True, h)
    cands, _ = _propose(qa, prep, kg, KgcConfig())
    assert cands == {}
    # b has another rt edge, so the pattern holds independently
    qb = Query(rt, kg.entities.id("b"), True, h)
    cands, _ = _propose(qb, prep, kg, KgcConfig())
    assert h in cands
