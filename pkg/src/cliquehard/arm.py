"""FP-Growth frequent itemsets, class-consequent rules and rule evaluation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Sequence

from .dataset import CLASS_KEY, HARD, Transaction

Itemset = frozenset


def min_count(min_support: float, n_transactions: int) -> int:
    """Smallest absolute count whose support reaches ``min_support``."""
    return max(1, math.ceil(min_support * n_transactions - 1e-9))


class FPNode:
    __slots__ = ("item", "count", "parent", "children", "link")

    def __init__(self, item, parent: "FPNode | None"):
        self.item = item
        self.count = 0
        self.parent = parent
        self.children: dict = {}
        self.link: FPNode | None = None

    def path(self) -> list:
        """Items from just below the root down to (excluding) this node."""
        out = []
        node = self.parent
        while node is not None and node.parent is not None:
            out.append(node.item)
            node = node.parent
        out.reverse()
        return out


@dataclass
class FPTree:
    root: FPNode
    header: dict  # item -> first node of its chain
    counts: dict  # item -> total count in the tree
    order: list  # items by (count desc, item asc)
    n_transactions: int
    _tails: dict = field(default_factory=dict, repr=False)

    def chain(self, item) -> Iterator[FPNode]:
        node = self.header.get(item)
        while node is not None:
            yield node
            node = node.link

    def rank(self) -> dict:
        return {item: i for i, item in enumerate(self.order)}

    def insert(self, items: Sequence, count: int = 1) -> None:
        node = self.root
        for item in items:
            child = node.children.get(item)
            if child is None:
                child = FPNode(item, node)
                node.children[item] = child
                if item in self._tails:
                    self._tails[item].link = child
                else:
                    self.header[item] = child
                self._tails[item] = child
            child.count += count
            node = child


def _build(weighted: list[tuple[Sequence, int]], threshold: int, n_transactions: int) -> FPTree:
    counts: dict = {}
    for items, c in weighted:
        for item in items:
            counts[item] = counts.get(item, 0) + c
    kept = {item: c for item, c in counts.items() if c >= threshold}
    order = sorted(kept, key=lambda item: (-kept[item], item))
    rank = {item: i for i, item in enumerate(order)}
    tree = FPTree(FPNode(None, None), {}, kept, order, n_transactions)
    for items, c in weighted:
        path = sorted((i for i in set(items) if i in rank), key=rank.__getitem__)
        if path:
            tree.insert(path, c)
    return tree


def build_fptree(transactions: Sequence[Iterable[Hashable]], min_support: float) -> FPTree:
    """Two-pass construction: count item frequencies, then insert pruned, ordered transactions."""
    if not 0 < min_support <= 1:
        raise ValueError("min_support must lie in (0, 1]")
    transactions = [frozenset(t) for t in transactions]
    if not transactions:
        raise ValueError("no transactions")
    return _build([(t, 1) for t in transactions], min_count(min_support, len(transactions)), len(transactions))


def mine_frequent(tree: FPTree, min_support: float, max_len: int | None = None) -> dict[Itemset, float]:
    """Every itemset with support >= ``min_support`` (optionally up to ``max_len`` items)."""
    threshold = min_count(min_support, tree.n_transactions)
    out: dict[Itemset, int] = {}

    def grow(t: FPTree, suffix: tuple):
        # least frequent first
        for item in reversed(t.order):
            support = t.counts[item]
            if support < threshold:
                continue
            itemset = suffix + (item,)
            out[frozenset(itemset)] = support
            if max_len is not None and len(itemset) >= max_len:
                continue
            base = [(node.path(), node.count) for node in t.chain(item)]
            base = [(p, c) for p, c in base if p]
            if base:
                cond = _build(base, threshold, t.n_transactions)
                if cond.order:
                    grow(cond, itemset)

    grow(tree, ())
    return {k: v / tree.n_transactions for k, v in out.items()}


def fpgrowth(transactions, min_support: float, max_len: int | None = None) -> dict[Itemset, float]:
    return mine_frequent(build_fptree(transactions, min_support), min_support, max_len)


BRUTE_FORCE_MAX_ITEMS = 16


def brute_force_itemsets(transactions, min_support: float) -> dict[Itemset, float]:
    """Enumerate the whole powerset of items (test oracle)."""
    transactions = [frozenset(t) for t in transactions]
    if not transactions:
        return {}
    items = sorted(set().union(*transactions), key=repr)
    if len(items) > BRUTE_FORCE_MAX_ITEMS:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_ITEMS} items, got {len(items)}")
    threshold = min_count(min_support, len(transactions))
    out = {}
    for r in range(1, len(items) + 1):
        for combo in itertools.combinations(items, r):
            s = frozenset(combo)
            c = sum(1 for t in transactions if s <= t)
            if c >= threshold:
                out[s] = c / len(transactions)
    return out


# ---------------------------------------------------------------------------
# rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssociationRule:
    antecedent: Itemset
    consequent: tuple
    support: float  # P(X and Y)
    confidence: float  # P(Y | X)
    lift: float  # P(Y | X) / P(Y)
    antecedent_support: float
    consequent_support: float


class RuleConsistencyError(RuntimeError):
    pass


def generate_rules(itemsets: dict[Itemset, float], consequent: tuple, min_confidence: float = 0.0,
                   antecedent_floor: float = 0.10, max_antecedent: int | None = 4) -> list[AssociationRule]:
    """Rules ``X -> consequent`` for every frequent set containing the consequent."""
    if frozenset([consequent]) not in itemsets:
        return []
    sup_y = itemsets[frozenset([consequent])]
    rules = []
    for s, sup_xy in itemsets.items():
        if consequent not in s or len(s) < 2:
            continue
        x = s - {consequent}
        if max_antecedent is not None and len(x) > max_antecedent:
            continue
        if x not in itemsets:
            raise RuleConsistencyError(f"support of antecedent {sorted(x)} missing from itemsets")
        sup_x = itemsets[x]
        if sup_x < antecedent_floor - 1e-12:
            continue
        conf = sup_xy / sup_x
        if conf < min_confidence - 1e-12:
            continue
        rules.append(AssociationRule(x, consequent, sup_xy, conf, conf / sup_y, sup_x, sup_y))
    rules.sort(key=lambda r: (len(r.antecedent), sorted(r.antecedent)))
    return rules


@dataclass(frozen=True)
class RuleEvaluation:
    hard_coverage: float  # hard instances satisfying the antecedent
    nothard_exclusion: float  # not-hard instances violating it
    overall_accuracy: float
    tp: int
    fp: int
    fn: int
    tn: int


def evaluate_rule(rule: AssociationRule | Itemset, transactions: Sequence[Transaction],
                  positive: str = HARD) -> RuleEvaluation:
    """Treat "antecedent holds" as a prediction of ``positive`` and score it on every transaction."""
    antecedent = rule.antecedent if isinstance(rule, AssociationRule) else frozenset(rule)
    tp = fp = fn = tn = 0
    for t in transactions:
        holds = antecedent <= t.items
        if t.label == positive:
            tp += holds
            fn += not holds
        else:
            fp += holds
            tn += not holds
    pos, neg = tp + fn, fp + tn
    total = pos + neg
    return RuleEvaluation(tp / pos if pos else 0.0, tn / neg if neg else 0.0,
                          (tp + tn) / total if total else 0.0, tp, fp, fn, tn)


@dataclass
class RuleReport:
    rule: AssociationRule
    evaluation: RuleEvaluation

    def row(self) -> list:
        terms = ";".join(f"{f}∈{b}" for f, b in sorted(self.rule.antecedent))
        consequent = self.rule.consequent[1] if self.rule.consequent[0] == CLASS_KEY else "=".join(self.rule.consequent)
        e = self.evaluation
        return [terms, consequent, self.rule.support, self.rule.confidence, self.rule.lift,
                e.hard_coverage, e.nothard_exclusion, e.overall_accuracy]


RULE_HEADER = ["antecedent", "consequent", "support", "confidence", "lift",
               "hard_coverage", "nothard_exclusion", "overall_accuracy"]


def mine_class_rules(transactions: Sequence[Transaction], min_support: float = 0.10,
                     min_confidence: float = 0.0, antecedent_floor: float = 0.10,
                     max_antecedent: int = 4, target: str = HARD) -> list[RuleReport]:
    """Mine rules on the ``target``-class transactions only, evaluate them on all of them.

    Reports are ordered by overall accuracy (desc), then support (desc),
    then antecedent length and items.
    """
    mined = [t.with_class_item() for t in transactions if t.label == target]
    if not mined:
        raise ValueError(f"no {target} transactions to mine")
    itemsets = fpgrowth(mined, min_support, max_len=max_antecedent + 1)
    rules = generate_rules(itemsets, (CLASS_KEY, target), min_confidence, antecedent_floor, max_antecedent)
    reports = [RuleReport(r, evaluate_rule(r, transactions, target)) for r in rules]
    reports.sort(key=lambda rep: (-rep.evaluation.overall_accuracy, -rep.rule.support,
                                  len(rep.rule.antecedent), sorted(rep.rule.antecedent)))
    return reports
