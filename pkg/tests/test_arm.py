from __future__ import annotations

import itertools

import numpy as np
import pytest

from cliquehard.arm import (RULE_HEADER, AssociationRule, RuleConsistencyError, RuleReport,
                            brute_force_itemsets,
                            build_fptree, evaluate_rule, fpgrowth, generate_rules, mine_class_rules,
                            min_count)
from cliquehard.dataset import HARD, NOT_HARD, Transaction, quartile_bins, to_transactions
from cliquehard.synthetic import PLANTED_RULE, planted_rule_corpus

CORPUS = [{"a", "b"}, {"b", "c"}, {"a", "b", "c"}, {"b"}]
EXPECTED = {frozenset("b"): 1.0, frozenset("a"): 0.5, frozenset("c"): 0.5,
            frozenset("ab"): 0.5, frozenset("bc"): 0.5}


def test_min_count():
    assert min_count(0.5, 4) == 2 and min_count(0.1, 30) == 3 and min_count(0.01, 10) == 1


def test_fptree_example():
    tree = build_fptree(CORPUS, 0.5)
    assert tree.counts == {"b": 4, "a": 2, "c": 2}
    assert tree.order == ["b", "a", "c"]
    assert list(tree.root.children) == ["b"] and tree.root.children["b"].count == 4


def test_fptree_header_chains_sum_to_counts():
    rng = np.random.default_rng(0)
    txs = [set(np.flatnonzero(rng.random(8) < 0.4).tolist()) for _ in range(40)]
    tree = build_fptree(txs, 0.1)
    for item, count in tree.counts.items():
        chain = list(tree.chain(item))
        assert all(node.item == item for node in chain)
        assert sum(node.count for node in chain) == count


def test_fptree_trivial_shapes():
    tree = build_fptree([{"x", "y"}] * 3, 1.0)
    node, depth = tree.root, 0
    while node.children:
        assert len(node.children) == 1
        node = next(iter(node.children.values()))
        depth += 1
    assert depth == 2
    assert not build_fptree([{"x"}, {"y"}, {"z"}], 0.9).root.children
    with pytest.raises(ValueError):
        build_fptree([], 0.5)
    with pytest.raises(ValueError):
        build_fptree([{"x"}], 0.0)


def test_mine_frequent_example():
    assert fpgrowth(CORPUS, 0.5) == EXPECTED
    assert fpgrowth([{"x", "y"}], 1.0) == {frozenset("x"): 1.0, frozenset("y"): 1.0, frozenset("xy"): 1.0}


def test_brute_force_examples():
    assert brute_force_itemsets([], 0.5) == {}
    assert brute_force_itemsets([{"a"}], 0.5) == {frozenset("a"): 1.0}
    assert brute_force_itemsets(CORPUS, 0.5) == EXPECTED
    with pytest.raises(ValueError):
        brute_force_itemsets([set(range(17))], 0.5)


def test_max_len_truncates():
    full = fpgrowth(CORPUS, 0.25)
    short = fpgrowth(CORPUS, 0.25, max_len=1)
    assert short == {k: v for k, v in full.items() if len(k) == 1}


@pytest.mark.parametrize("seed", range(10))
def test_downward_closure(seed):
    rng = np.random.default_rng(seed)
    txs = [frozenset(np.flatnonzero(rng.random(9) < 0.5).tolist()) for _ in range(30)]
    sets = fpgrowth(txs, 0.15)
    for s, sup in sets.items():
        for r in range(1, len(s)):
            for sub in itertools.combinations(s, r):
                assert sets[frozenset(sub)] >= sup


def test_rule_example_and_identities():
    sets = fpgrowth(CORPUS, 0.5)
    rules = generate_rules(sets, "b", antecedent_floor=0.1)
    assert [(set(r.antecedent), r.support, r.confidence, r.lift) for r in rules] == [
        ({"a"}, 0.5, 1.0, 1.0), ({"c"}, 0.5, 1.0, 1.0)]
    for r in rules:
        assert abs(r.lift * r.consequent_support - r.confidence) <= 1e-12
        assert abs(r.confidence * r.antecedent_support - r.support) <= 1e-12


def test_antecedent_floor_suppresses():
    sets = {frozenset("x"): 0.08, frozenset("y"): 0.5, frozenset("xy"): 0.08}
    assert generate_rules(sets, "y", antecedent_floor=0.10) == []
    assert len(generate_rules(sets, "y", antecedent_floor=0.05)) == 1


def test_missing_projection_is_inconsistent():
    with pytest.raises(RuleConsistencyError):
        generate_rules({frozenset("y"): 0.5, frozenset("xy"): 0.3}, "y")


def test_min_confidence_and_max_antecedent():
    sets = fpgrowth([{"a", "b", "y"}, {"a", "y"}, {"a"}, {"b"}], 0.25)
    assert all(r.confidence >= 0.6 for r in generate_rules(sets, "y", min_confidence=0.6))
    assert all(len(r.antecedent) <= 1 for r in generate_rules(sets, "y", max_antecedent=1))


def tx(items, label):
    return Transaction(frozenset(items), label)


def test_evaluate_rule_counts():
    txs = [tx({("f", "Q1")}, HARD), tx({("f", "Q2")}, HARD), tx({("f", "Q1")}, NOT_HARD), tx(set(), NOT_HARD)]
    e = evaluate_rule(frozenset({("f", "Q1")}), txs)
    assert (e.tp, e.fn, e.fp, e.tn) == (1, 1, 1, 1)
    assert (e.hard_coverage, e.nothard_exclusion, e.overall_accuracy) == (0.5, 0.5, 0.5)
    empty = evaluate_rule(frozenset(), txs)
    assert (empty.hard_coverage, empty.nothard_exclusion) == (1.0, 0.0)


def test_hard_only_mining_gives_unit_lift_and_sorted_reports():
    txs = [tx({("f", "Q1"), ("g", "Q4")}, HARD)] * 6 + [tx({("f", "Q1")}, HARD)] * 2
    txs += [tx({("f", "Q2")}, NOT_HARD)] * 20 + [tx({("f", "Q1")}, NOT_HARD)] * 3
    reports = mine_class_rules(txs)
    assert {r.rule.lift for r in reports} == {1.0}
    assert all(r.rule.confidence == 1.0 and r.rule.support == r.rule.antecedent_support for r in reports)
    acc = [r.evaluation.overall_accuracy for r in reports]
    assert acc == sorted(acc, reverse=True)
    with pytest.raises(ValueError):
        mine_class_rules([tx({("f", "Q1")}, NOT_HARD)])


def test_report_row_layout():
    rule = AssociationRule(frozenset({("b", "Q4"), ("a", "Q1")}), ("class", HARD), 0.5, 0.5, 1.0, 0.5, 1.0)
    e = evaluate_rule(rule, [tx({("a", "Q1"), ("b", "Q4")}, HARD)])
    row = RuleReport(rule, e).row()
    assert len(row) == len(RULE_HEADER)
    assert row[:2] == ["a∈Q1;b∈Q4", HARD]


def test_planted_antecedent_coverage():
    d = planted_rule_corpus(n=2400, seed=1).dataset
    txs = to_transactions(d, quartile_bins(d))
    e = evaluate_rule(frozenset(PLANTED_RULE), txs)
    assert e.hard_coverage >= 0.95
