"""Template specialization, collective scoring, and per-target rule learning.

Anchored rules derived from one template share its predicate chain, so their
groundings are subsets of the template's. Scoring therefore never re-grounds
a derived rule: support and grounding counts come from hash joins against
the template's (original, tail) pair set. A per-rule baseline scorer that
does re-ground each rule is kept for benchmarking and as a cross-check.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field, replace

from .generalize import GenConfig, generalize, sort_rules
from .ground import DEFAULT_CAP, GroundingSet, ground, ground_instantiated
from .rules import (BOTH_ANCHORED, CLOSED, HEAD_ANCHORED, OPEN, Rule,
                    RuleStats, format_rule)
from .store import KnowledgeGraph

log = logging.getLogger(__name__)

MEASURES = ("standard", "smooth", "pca")


@dataclass(slots=True)
class ScoreConfig:
    measure: str = "smooth"
    smoothing: float = 5.0       # grounding-count offset in the smooth measure
    conf_threshold: float = 0.001
    supp_threshold: int = 3
    hc_threshold: float = 0.001

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"measure must be one of {MEASURES}")
        if self.smoothing < 0:
            raise ValueError("smoothing must be >= 0")
        if min(self.conf_threshold, self.supp_threshold, self.hc_threshold) < 0:
            raise ValueError("thresholds must be >= 0")


def oriented_instances(instances, from_subject: bool):
    """Instance pairs as (original-constant, free-constant) for a chain origin."""
    if from_subject:
        return [(s, o) for s, o in instances]
    return [(o, s) for s, o in instances]


def specialize(template: Rule, gset: GroundingSet, instances,
               min_support: int = 0) -> list[Rule]:
    """Derive anchored rules from a template by joining instances with its
    groundings on the original constant.

    Head-anchored rules get one anchor per free constant whose instance
    original also grounds the chain; both-anchored rules additionally fix the
    tail constant of a joined grounding. Every derived rule therefore has at
    least one grounding and support >= 1.

    min_support > 1 skips derived rules whose grounding count is already
    below it; support never exceeds the grounding count, so such rules could
    not survive the support threshold anyway.
    """
    if template.kind != OPEN:
        raise ValueError("specialize() takes open templates")
    if gset.source != template.body_key:
        raise ValueError("grounding set does not belong to this template")
    orig_tails: dict[int, list[int]] = {}
    tail_counts: dict[int, int] = {}
    for o, t in gset.pairs:
        orig_tails.setdefault(o, []).append(t)
        tail_counts[t] = tail_counts.get(t, 0) + 1
    n_orig = len(orig_tails)
    out: dict[Rule, None] = {}
    for orig, free in oriented_instances(instances, template.from_subject):
        tails = orig_tails.get(orig)
        if tails is None:
            continue
        if n_orig >= min_support:
            out.setdefault(template.specialize_head(free))
        for tail in sorted(tails):
            if tail_counts[tail] >= min_support:
                out.setdefault(template.specialize_both(free, tail))
    return list(out)


class CollectiveScorer:
    """Scores a closed rule or the anchored rules derived from one template
    using the template's grounding set only."""

    def __init__(self, abstract_rule: Rule, gset: GroundingSet,
                 kg: KnowledgeGraph, cfg: ScoreConfig):
        if gset.source != abstract_rule.body_key:
            raise ValueError("grounding set does not match the abstract rule")
        self.abstract = abstract_rule
        self.gset = gset
        self.kg = kg
        self.cfg = cfg
        self.target = abstract_rule.target
        self.from_subject = abstract_rule.from_subject
        self.target_pairs = kg.pairs(self.target)
        self.head_size = len(self.target_pairs)
        self._originals: set | None = None
        self._n_func: int | None = None
        self._by_tail: dict | None = None
        self._tail_sets: dict = {}
        self._tail_func: dict = {}

    # lazy views over the template grounding
    def _orig_set(self) -> set:
        if self._originals is None:
            self._originals = self.gset.originals()
        return self._originals

    def _functional_count(self) -> int:
        if self._n_func is None:
            kg, t = self.kg, self.target
            self._n_func = sum(1 for o in self._orig_set() if kg.has_out(o, t))
        return self._n_func

    def _tails(self) -> dict:
        if self._by_tail is None:
            self._by_tail = self.gset.by_tail()
        return self._by_tail

    def _tail_set(self, tail: int) -> set:
        s = self._tail_sets.get(tail)
        if s is None:
            s = set(self._tails().get(tail, ()))
            self._tail_sets[tail] = s
        return s

    def _tail_functional(self, tail: int) -> int:
        n = self._tail_func.get(tail)
        if n is None:
            kg, t = self.kg, self.target
            n = sum(1 for o in self._tails().get(tail, ())
                    if kg.has_out(o, t))
            self._tail_func[tail] = n
        return n

    def _train_partners(self, anchor: int):
        """Originals o with the oriented head fact (o, anchor) in train."""
        if self.from_subject:
            return self.kg.in_index.get((anchor, self.target), ())
        return self.kg.out_index.get((anchor, self.target), ())

    def score(self, rule: Rule) -> RuleStats:
        if rule.kind == CLOSED:
            if rule is not self.abstract and rule != self.abstract:
                raise ValueError("closed rule does not match this scorer")
            return self._score_closed()
        if rule.body_key != self.abstract.body_key:
            raise ValueError("rule was not derived from this template")
        if rule.kind == HEAD_ANCHORED:
            bg = len(self._orig_set())
            sp = self._support(self._orig_set(), rule.head_anchor)
            fbg = self._pca_count(bg, self._functional_count(),
                                  rule.head_anchor)
        elif rule.kind == BOTH_ANCHORED:
            tail_set = self._tail_set(rule.tail_anchor)
            bg = len(tail_set)
            sp = self._support(tail_set, rule.head_anchor)
            fbg = self._pca_count(bg, self._tail_functional(rule.tail_anchor),
                                  rule.head_anchor)
        else:
            raise ValueError("open templates are never scored")
        return make_stats(sp, bg, fbg, self.head_size, self.cfg)

    def _score_closed(self) -> RuleStats:
        tp = self.target_pairs
        kg, t = self.kg, self.target
        sp = 0
        fbg = 0
        for x, y in self.gset.pairs:
            if (x, y) in tp:
                sp += 1
            if kg.has_out(x, t):
                fbg += 1
        return make_stats(sp, len(self.gset.pairs), fbg, self.head_size,
                          self.cfg)

    def _support(self, originals: set, anchor: int) -> int:
        return sum(1 for o in self._train_partners(anchor) if o in originals)

    def _pca_count(self, bg: int, functional_originals: int,
                   anchor: int) -> int:
        # Functionality is always taken on the head subject slot: when the
        # chain originates from the object, the head subject is the anchor.
        if self.from_subject:
            return functional_originals
        return bg if self.kg.has_out(anchor, self.target) else 0


def make_stats(sp: int, bg: int, fbg: int, head_size: int,
               cfg: ScoreConfig) -> RuleStats:
    smooth_denom = cfg.smoothing + bg
    return RuleStats(
        support=sp,
        body_groundings=bg,
        pca_groundings=fbg,
        head_size=head_size,
        sc=sp / bg if bg else 0.0,
        smc=sp / smooth_denom if smooth_denom > 0 else 0.0,
        pca=sp / fbg if fbg else 0.0,
        hc=sp / head_size if head_size else 0.0,
        pca_defined=fbg > 0,
    )


def score_collective(rule: Rule, gset: GroundingSet, kg: KnowledgeGraph,
                     cfg: ScoreConfig) -> RuleStats:
    """Score one rule from a template grounding set (or a closed rule from
    its own). Batch callers should reuse a CollectiveScorer instead."""
    if rule.kind == CLOSED:
        return CollectiveScorer(rule, gset, kg, cfg).score(rule)
    template = Rule(OPEN, rule.target, rule.from_subject, rule.body)
    return CollectiveScorer(template, gset, kg, cfg).score(rule)


def score_baseline(rule: Rule, kg: KnowledgeGraph, cfg: ScoreConfig,
                   cap: int = DEFAULT_CAP, rng: random.Random | None = None,
                   require_complete: bool = False) -> RuleStats:
    """Per-rule grounding and direct counting (the costly reference path)."""
    tp = kg.pairs(rule.target)
    head_size = len(tp)
    if rule.kind == CLOSED:
        gset = ground(kg, rule, cap, rng)
        sp = bg = fbg = 0
        for x, y in gset.pairs:
            bg += 1
            if (x, y) in tp:
                sp += 1
            if kg.has_out(x, rule.target):
                fbg += 1
    elif rule.kind in (HEAD_ANCHORED, BOTH_ANCHORED):
        gset = ground_instantiated(kg, rule, cap, rng)
        sp = bg = fbg = 0
        for o in {pair[0] for pair in gset.pairs}:
            bg += 1
            head = rule.head_pair(o, rule.head_anchor)
            if head in tp:
                sp += 1
            if kg.has_out(head[0], rule.target):
                fbg += 1
    else:
        raise ValueError("open templates are never scored")
    if require_complete and gset.truncated:
        raise RuntimeError("grounding truncated; raise the cap for exact "
                           "baseline scores")
    return make_stats(sp, bg, fbg, head_size, cfg)


def is_high_quality(stats: RuleStats, measure: str) -> bool:
    return stats.value(measure) >= 0.1 and stats.hc >= 0.01


def is_extreme_quality(stats: RuleStats, measure: str) -> bool:
    return stats.value(measure) >= 0.7


def quality_filter(rules, cfg: ScoreConfig) -> list[Rule]:
    """Keep rules meeting the measure, support, and head-coverage thresholds."""
    out = []
    for r in rules:
        st = r.stats
        if (st.value(cfg.measure) >= cfg.conf_threshold
                and st.support >= cfg.supp_threshold
                and st.hc >= cfg.hc_threshold):
            out.append(r)
    return out


@dataclass
class LearnConfig:
    gen: GenConfig = field(default_factory=GenConfig)
    score: ScoreConfig = field(default_factory=ScoreConfig)
    max_car_len: int = 3            # longest closed rule kept
    max_instantiated_len: int = 3   # longest template specialized; 0 disables
    grounding_cap: int = DEFAULT_CAP
    target_time_ms: int = 600_000   # per-target wall-clock budget
    max_rules: int = 1_000_000      # per-target cap on retained rules

    def __post_init__(self):
        if self.max_car_len > self.gen.max_len:
            raise ValueError("max_car_len cannot exceed gen.max_len")
        if self.max_instantiated_len > self.gen.max_len:
            raise ValueError("max_instantiated_len cannot exceed gen.max_len")


def learn_target(kg: KnowledgeGraph, target: int,
                 cfg: LearnConfig) -> list[Rule]:
    """Mine, score, and filter the rule set for one target predicate.

    Generalization, per-template grounding, specialization, and collective
    scoring run under a shared wall-clock budget checked before each abstract
    rule; the quality filter runs on whatever was produced when the budget or
    rule cap fires.
    """
    if not 0 <= target < kg.n_predicates:
        raise KeyError(f"unknown predicate id {target}")
    instances = sorted(kg.pairs(target))
    if not instances:
        return []
    start = time.monotonic()
    deadline = start + cfg.target_time_ms / 1000.0

    remaining_ms = max(0, int((deadline - time.monotonic()) * 1000))
    gen_cfg = replace(cfg.gen, time_ms=min(cfg.gen.time_ms, remaining_ms))
    m = generalize(kg, target, instances, gen_cfg)
    ordered = sort_rules(m, kg)

    ground_rng = random.Random(cfg.gen.seed ^ 0x9E3779B9)
    score_cfg = cfg.score
    measure = score_cfg.measure
    # The quality predicate is per-rule, so applying it as rules are scored
    # yields the same set as one end-of-run filter while keeping the rule
    # cap meaningful on targets whose templates specialize explosively.
    kept: list[Rule] = []

    def keep(rule: Rule, stats: RuleStats, freq: int) -> None:
        if (stats.value(measure) >= score_cfg.conf_threshold
                and stats.support >= score_cfg.supp_threshold
                and stats.hc >= score_cfg.hc_threshold):
            stats.frequency = freq
            rule.stats = stats
            kept.append(rule)

    for abstract in ordered:
        if time.monotonic() >= deadline or len(kept) >= cfg.max_rules:
            log.info("constraints hit for target %d after %d rules",
                     target, len(kept))
            break
        if abstract.kind == CLOSED:
            if len(abstract) > cfg.max_car_len:
                continue
            gset = ground(kg, abstract, cfg.grounding_cap, ground_rng)
            stats = CollectiveScorer(abstract, gset, kg, score_cfg).score(abstract)
            keep(abstract, stats, m.counts[abstract])
        else:
            if len(abstract) > cfg.max_instantiated_len:
                continue
            gset = ground(kg, abstract, cfg.grounding_cap, ground_rng)
            scorer = CollectiveScorer(abstract, gset, kg, score_cfg)
            freq = m.counts[abstract]
            for derived in specialize(abstract, gset, instances,
                                      min_support=score_cfg.supp_threshold):
                keep(derived, scorer.score(derived), freq)
    kept.sort(key=lambda r: (-r.stats.value(measure), -r.stats.support,
                             format_rule(r, kg)))
    return kept


def target_config(cfg: LearnConfig, target: int) -> LearnConfig:
    """Per-target config with a seed derived from the base seed and target id."""
    seed = (cfg.gen.seed * 1_000_003 + target) % (1 << 63)
    return replace(cfg, gen=replace(cfg.gen, seed=seed))


_FORK_STATE = None


def _learn_forked(target: int):
    kg, cfg = _FORK_STATE
    return target, learn_target(kg, target, target_config(cfg, target))


def learn_many(kg: KnowledgeGraph, targets, cfg: LearnConfig,
               workers: int = 1) -> dict[int, list[Rule]]:
    """Learn rule sets for several targets, optionally across processes.

    Each target runs with its own derived seed, so the resulting rule sets
    are identical whether the run is serial or parallel.
    """
    targets = list(targets)
    if workers <= 1 or len(targets) <= 1:
        return {t: learn_target(kg, t, target_config(cfg, t)) for t in targets}
    import multiprocessing as mp
    from concurrent.futures import ProcessPoolExecutor

    global _FORK_STATE
    _FORK_STATE = (kg, cfg)
    try:
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
            results = dict(ex.map(_learn_forked, targets))
    finally:
        _FORK_STATE = None
    return {t: results[t] for t in targets}
