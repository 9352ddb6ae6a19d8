"""Held-out precision, the overfitting validation filter, and its report.

A rule's precision on a held-out split is the share of its yet-unknown
predictions (body grounded over the training graph, minus facts already in
train) that the split confirms. Rules whose held-out precision falls far
below their training quality are overfitting; the validation filter removes
rules whose validation precision is below a configurable fraction of their
quality measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ground import DEFAULT_CAP, GroundingSet, ground
from .rules import BOTH_ANCHORED, CLOSED, HEAD_ANCHORED, OPEN, Rule, format_rule
from .store import KnowledgeGraph, SplitSet


@dataclass(slots=True)
class OverfitConfig:
    overfit_factor: float = 0.1          # validation filter strength
    overfit_cutoff: float = 0.1          # test precision below this fraction
                                         # of quality marks a rule overfitting
    top_k: tuple[int, ...] = (5, 10, 20, 50, 100)
    grounding_cap: int = DEFAULT_CAP

    def __post_init__(self):
        if not 0 <= self.overfit_factor <= 1:
            raise ValueError("overfit_factor must be in [0, 1]")


def template_grounding(kg: KnowledgeGraph, rule: Rule, cap: int = DEFAULT_CAP,
                       cache: dict | None = None) -> GroundingSet:
    """Grounding of the rule's abstract chain, shared across derived rules."""
    key = rule.body_key
    if cache is not None and key in cache:
        return cache[key]
    abstract = rule if rule.kind in (OPEN, CLOSED) else Rule(
        OPEN, rule.target, rule.from_subject, rule.body)
    gset = ground(kg, abstract, cap)
    if cache is not None:
        cache[key] = gset
    return gset


def predictions(rule: Rule, gset: GroundingSet) -> set:
    """Distinct head (subject, object) pairs the rule proposes."""
    if rule.kind == CLOSED:
        return set(gset.pairs)
    if rule.kind == HEAD_ANCHORED:
        return {rule.head_pair(o, rule.head_anchor) for o in gset.originals()}
    if rule.kind == BOTH_ANCHORED:
        return {rule.head_pair(o, rule.head_anchor)
                for o, t in gset.pairs if t == rule.tail_anchor}
    raise ValueError("open templates make no predictions")


def rule_precision(rule: Rule, kg: KnowledgeGraph, facts: set,
                   cap: int = DEFAULT_CAP, cache: dict | None = None) -> float:
    """Precision of the rule's novel predictions against a held-out pair set.

    Predictions already present in train are excluded from the denominator;
    a rule with no novel predictions scores 0.
    """
    gset = template_grounding(kg, rule, cap, cache)
    preds = predictions(rule, gset)
    train_pairs = kg.pairs(rule.target)
    hits = 0
    novel = 0
    for head in preds:
        if head in train_pairs:
            continue
        novel += 1
        if head in facts:
            hits += 1
    return hits / novel if novel else 0.0


def validation_filter(rules, split: SplitSet, factor: float, measure: str,
                      cap: int = DEFAULT_CAP,
                      cache: dict | None = None) -> list[Rule]:
    """Keep rules whose validation precision reaches factor x quality."""
    kg = split.train
    if cache is None:
        cache = {}
    kept = []
    for rule in rules:
        vp = rule.stats.valid_precision
        if vp is None:
            vp = rule_precision(rule, kg, split.valid_pairs(rule.target),
                                cap, cache)
            rule.stats.valid_precision = vp
        if vp >= factor * rule.stats.value(measure):
            kept.append(rule)
    return kept


def rule_type(rule: Rule) -> str:
    return "closed" if rule.kind == CLOSED else f"len={len(rule)}"


@dataclass(slots=True)
class TypeRow:
    n_rules: int = 0
    n_overfit: int = 0
    rp_all: float = 0.0      # share of all rules that are of this type
    orp_or: float = 0.0      # share of all overfitting rules of this type
    orp_type: float = 0.0    # share of this type's rules that overfit
    orp_or_defined: bool = True
    orp_type_defined: bool = True


@dataclass
class OverfitReport:
    measure: str
    n_rules: int
    n_overfit: int
    orp_all: float
    types: dict[str, TypeRow]
    precision_at: dict[int, float]
    quality_at: dict[int, float]
    n_targets: int = 0

    TYPE_COLUMNS = ("rp_all", "orp_or", "orp_type")

    def header(self, type_labels) -> list[str]:
        cols = ["measure", "validation", "rules", "orp_all"]
        for t in type_labels:
            cols += [f"{t}:{c}" for c in self.TYPE_COLUMNS]
        return cols

    def row(self, validation: str, type_labels) -> list[str]:
        out = [self.measure, validation, str(self.n_rules),
               f"{self.orp_all:.3f}"]
        for t in type_labels:
            tr = self.types.get(t, TypeRow())
            out += [f"{tr.rp_all:.3f}", f"{tr.orp_or:.3f}",
                    f"{tr.orp_type:.3f}"]
        return out


def overfit_report(rules, split: SplitSet, cfg: OverfitConfig, measure: str,
                   cache: dict | None = None) -> OverfitReport:
    """Mark overfitting rules against the test split and aggregate
    per-type proportions and global top-k averages."""
    kg = split.train
    if cache is None:
        cache = {}
    rules = list(rules)
    overfit: list[bool] = []
    for rule in rules:
        tp = rule.stats.test_precision
        if tp is None:
            tp = rule_precision(rule, kg, split.test_pairs(rule.target),
                                cfg.grounding_cap, cache)
            rule.stats.test_precision = tp
        overfit.append(tp < cfg.overfit_cutoff * rule.stats.value(measure))

    n = len(rules)
    n_over = sum(overfit)
    types: dict[str, TypeRow] = {}
    for rule, is_over in zip(rules, overfit):
        row = types.setdefault(rule_type(rule), TypeRow())
        row.n_rules += 1
        if is_over:
            row.n_overfit += 1
    for row in types.values():
        row.rp_all = row.n_rules / n if n else 0.0
        if n_over:
            row.orp_or = row.n_overfit / n_over
        else:
            row.orp_or, row.orp_or_defined = 0.0, False
        if row.n_rules:
            row.orp_type = row.n_overfit / row.n_rules
        else:
            row.orp_type, row.orp_type_defined = 0.0, False

    by_target: dict[int, list[Rule]] = {}
    for rule in rules:
        by_target.setdefault(rule.target, []).append(rule)
    for lst in by_target.values():
        lst.sort(key=lambda r: (-r.stats.value(measure), -r.stats.support,
                                format_rule(r, kg)))
    precision_at: dict[int, float] = {}
    quality_at: dict[int, float] = {}
    for k in cfg.top_k:
        p_means = []
        q_means = []
        for lst in by_target.values():
            top = lst[:k]
            if not top:
                continue
            p_means.append(sum(r.stats.test_precision for r in top) / len(top))
            q_means.append(sum(r.stats.value(measure) for r in top) / len(top))
        precision_at[k] = sum(p_means) / len(p_means) if p_means else 0.0
        quality_at[k] = sum(q_means) / len(q_means) if q_means else 0.0

    return OverfitReport(measure=measure, n_rules=n, n_overfit=n_over,
                         orp_all=n_over / n if n else 0.0, types=types,
                         precision_at=precision_at, quality_at=quality_at,
                         n_targets=len(by_target))


@dataclass(slots=True)
class SweepRow:
    factor: float
    n_kept: int
    orp_all: float
    precision_at_50: float


def factor_sweep(rules, split: SplitSet, factors, cfg: OverfitConfig,
                 measure: str, cache: dict | None = None) -> list[SweepRow]:
    """Overfitting proportion and precision@50 of the kept set per factor."""
    if cache is None:
        cache = {}
    rows = []
    for factor in factors:
        kept = validation_filter(rules, split, factor, measure,
                                 cfg.grounding_cap, cache)
        report = overfit_report(kept, split, cfg, measure, cache)
        rows.append(SweepRow(factor, len(kept), report.orp_all,
                             report.precision_at.get(50, 0.0)))
    return rows
