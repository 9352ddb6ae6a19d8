"""Completion-query answering and filtered ranking metrics.

Head and tail queries are answered by collecting candidate entities from
every applicable rule, attaching the suggesting rule's quality measure to
each candidate, dropping candidates that are already known facts elsewhere
in the dataset (filtered setting), and ordering candidates by the maximum
aggregation: lexicographic comparison of their descending confidence lists,
with a longer list winning over its own strict prefix.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .ground import chain_bindings, original_bindings
from .rules import (BOTH_ANCHORED, CLOSED, HEAD_ANCHORED, Rule,
                    reversed_body)
from .store import FORWARD, REVERSE, KnowledgeGraph, SplitSet

@dataclass(slots=True)
class Query:
    target: int
    bound: int
    bound_is_subject: bool  # True: tail query r(b, ?); False: head query r(?, b)
    truth: int


@dataclass(slots=True)
class KgcConfig:
    per_rule_cap: int = 1000   # candidate bindings collected per rule
    per_query_ms: int = 5000
    ks: tuple[int, ...] = (1, 3, 10)


def aggregate_max(candidates: dict) -> list:
    """Order candidate entities by their descending confidence lists.

    Comparison is lexicographic over the sorted confidences; when one list is
    a strict prefix of the other, the longer list wins (a missing confidence
    counts as minus infinity). Remaining exact ties order by entity id.
    """
    items = [(e, tuple(sorted(confs, reverse=True)))
             for e, confs in candidates.items()]
    items.sort(key=lambda item: item[0])
    items.sort(key=lambda item: item[1], reverse=True)
    return [e for e, _ in items]


class _TargetRules:
    """Per-target rule indexes for query answering."""

    def __init__(self, target: int, rules, measure: str):
        self.target = target
        self.closed: list = []  # (rid, rule, conf, taut, reversed body)
        # open-slot firing, grouped by shared body chain
        self.groups_subject: dict = {}   # from-subject anchored rules
        self.groups_object: dict = {}    # from-object anchored rules
        # anchored-slot firing, keyed by the anchor constant
        self.by_object_anchor: dict = {}
        self.by_subject_anchor: dict = {}
        self._originals_cache: dict[int, tuple] = {}
        for rid, rule in enumerate(rules):
            conf = rule.stats.value(measure)
            taut = (len(rule) == 1 and rule.body[0] ==
                    (target, FORWARD if rule.from_subject else REVERSE))
            entry = (rid, rule, conf, taut)
            if rule.kind == CLOSED:
                self.closed.append(entry + (reversed_body(rule.body),))
            else:
                groups = (self.groups_subject if rule.from_subject
                          else self.groups_object)
                groups.setdefault(rule.body, []).append(entry)
                anchored = (self.by_object_anchor if rule.from_subject
                            else self.by_subject_anchor)
                anchored.setdefault(rule.head_anchor, []).append(entry)

    def originals(self, rid: int, rule: Rule, kg: KnowledgeGraph, cap: int,
                  taut: bool) -> tuple:
        got = self._originals_cache.get(rid)
        if got is None:
            banned = rule.head_anchor if (taut and
                                          rule.kind == HEAD_ANCHORED) else None
            if (taut and rule.kind == BOTH_ANCHORED
                    and rule.tail_anchor == rule.head_anchor):
                got = ()
            else:
                got = original_bindings(kg, rule, cap, banned)
            self._originals_cache[rid] = got
        return got


def _propose(query: Query, prep: _TargetRules, kg: KnowledgeGraph,
             cfg: KgcConfig, rids: dict | None = None) -> tuple[dict, bool]:
    """Collect candidate -> confidence lists from all applicable rules.

    Returns the raw (unfiltered) candidates and whether the per-query time
    budget interrupted the collection.
    """
    cands: dict[int, list[float]] = {}
    deadline = time.monotonic() + cfg.per_query_ms / 1000.0
    bound = query.bound
    interrupted = False

    def add(entity: int, conf: float, rid: int) -> None:
        cands.setdefault(entity, []).append(conf)
        if rids is not None:
            rids.setdefault(entity, []).append(rid)

    for rid, rule, conf, taut, back in prep.closed:
        if time.monotonic() > deadline:
            interrupted = True
            break
        if taut:
            # a single-atom body on the target predicate in head orientation
            # could only be witnessed by the predicted fact itself
            continue
        body = rule.body if query.bound_is_subject else back
        for entity in chain_bindings(kg, body, bound, cfg.per_rule_cap):
            add(entity, conf, rid)

    # rules whose anchor sits on the query's open slot: the anchor is the
    # only candidate, proposed when the body grounds from the bound entity
    groups = (prep.groups_subject if query.bound_is_subject
              else prep.groups_object)
    for body, entries in groups.items():
        if interrupted or time.monotonic() > deadline:
            interrupted = True
            break
        tails = chain_bindings(kg, body, bound, cfg.per_rule_cap)
        if not tails:
            continue
        for rid, rule, conf, taut in entries:
            if rule.kind == HEAD_ANCHORED:
                fires = bool(tails - {rule.head_anchor}) if taut else True
            else:
                fires = rule.tail_anchor in tails and not (
                    taut and rule.tail_anchor == rule.head_anchor)
            if fires:
                add(rule.head_anchor, conf, rid)

    # rules anchored on the bound slot: they apply only when the bound entity
    # equals the anchor, and each original binding becomes a candidate
    anchored = (prep.by_subject_anchor if query.bound_is_subject
                else prep.by_object_anchor)
    for rid, rule, conf, taut in anchored.get(bound, ()):
        if interrupted or time.monotonic() > deadline:
            interrupted = True
            break
        for entity in prep.originals(rid, rule, kg, cfg.per_rule_cap, taut):
            add(entity, conf, rid)

    return cands, interrupted


def _filtered(query: Query, cands: dict, known_pairs: set) -> dict:
    """Drop candidates that complete to a known fact, keeping the truth."""
    out = {}
    for entity, confs in cands.items():
        if entity != query.truth:
            pair = ((query.bound, entity) if query.bound_is_subject
                    else (entity, query.bound))
            if pair in known_pairs:
                continue
        out[entity] = confs
    return out


def answer_query(query: Query, rules, kg: KnowledgeGraph, split: SplitSet,
                 cfg: KgcConfig | None = None,
                 measure: str = "smooth") -> list:
    """Ranked candidate entities for one completion query (filtered)."""
    cfg = cfg or KgcConfig()
    prep = _TargetRules(query.target, [r for r in rules
                                       if r.target == query.target], measure)
    cands, _ = _propose(query, prep, kg, cfg)
    cands = _filtered(query, cands, split.known_pairs(query.target))
    return aggregate_max(cands)


def _rank_of_truth(query: Query, cands: dict) -> int | None:
    """1-based rank of the truth under the maximum aggregation order."""
    confs = cands.get(query.truth)
    if confs is None:
        return None
    truth_key = tuple(sorted(confs, reverse=True))
    ahead = 0
    for entity, other in cands.items():
        if entity == query.truth:
            continue
        key = tuple(sorted(other, reverse=True))
        if key > truth_key or (key == truth_key and entity < query.truth):
            ahead += 1
    return ahead + 1


@dataclass(slots=True)
class PredMetrics:
    n_queries: int = 0
    mrr: float = 0.0
    hits: dict = field(default_factory=dict)


@dataclass
class KgcResult:
    n_queries: int
    mrr: float
    hits: dict
    per_predicate: dict
    interrupted_queries: int = 0

    def to_tsv(self, kg: KnowledgeGraph) -> str:
        ks = sorted(self.hits)
        lines = ["\t".join(["predicate", "queries", "mrr"]
                           + [f"hits@{k}" for k in ks])]
        for p in sorted(self.per_predicate):
            m = self.per_predicate[p]
            lines.append("\t".join(
                [kg.predicates.name(p), str(m.n_queries), f"{m.mrr:.4f}"]
                + [f"{m.hits[k]:.4f}" for k in ks]))
        lines.append("\t".join(
            ["<all>", str(self.n_queries), f"{self.mrr:.4f}"]
            + [f"{self.hits[k]:.4f}" for k in ks]))
        return "\n".join(lines) + "\n"


def evaluate(split: SplitSet, rules, cfg: KgcConfig | None = None,
             measure: str = "smooth", dump=None) -> KgcResult:
    """Filtered MRR and hits@k over head and tail queries for every test
    triple. Queries whose truth no rule suggests contribute rank 0."""
    cfg = cfg or KgcConfig()
    kg = split.train
    by_target: dict[int, list[Rule]] = {}
    for rule in rules:
        by_target.setdefault(rule.target, []).append(rule)
    preps = {t: _TargetRules(t, lst, measure) for t, lst in by_target.items()}
    known: dict[int, set] = {}

    recip: dict[int, float] = {}
    hit_counts: dict[int, dict[int, int]] = {}
    counts: dict[int, int] = {}
    interrupted = 0
    for t in {tr.p for tr in split.test_triples}:
        recip[t] = 0.0
        counts[t] = 0
        hit_counts[t] = {k: 0 for k in cfg.ks}

    for triple in split.test_triples:
        for query in (Query(triple.p, triple.s, True, triple.o),
                      Query(triple.p, triple.o, False, triple.s)):
            counts[triple.p] += 1
            prep = preps.get(triple.p)
            rank = None
            if prep is not None:
                rids: dict | None = {} if dump is not None else None
                cands, cut = _propose(query, prep, kg, cfg, rids)
                if cut:
                    interrupted += 1
                pairs = known.get(triple.p)
                if pairs is None:
                    pairs = known[triple.p] = split.known_pairs(triple.p)
                cands = _filtered(query, cands, pairs)
                rank = _rank_of_truth(query, cands)
                if dump is not None:
                    _dump_query(dump, kg, query, cands, rids)
            if rank is not None:
                recip[triple.p] += 1.0 / rank
                for k in cfg.ks:
                    if rank <= k:
                        hit_counts[triple.p][k] += 1

    per_pred = {}
    total = sum(counts.values())
    total_recip = sum(recip.values())
    total_hits = {k: 0 for k in cfg.ks}
    for t, n in counts.items():
        hits = {k: hit_counts[t][k] / n if n else 0.0 for k in cfg.ks}
        for k in cfg.ks:
            total_hits[k] += hit_counts[t][k]
        per_pred[t] = PredMetrics(n, recip[t] / n if n else 0.0, hits)
    return KgcResult(
        n_queries=total,
        mrr=total_recip / total if total else 0.0,
        hits={k: total_hits[k] / total if total else 0.0 for k in cfg.ks},
        per_predicate=per_pred,
        interrupted_queries=interrupted,
    )


def _dump_query(fh, kg: KnowledgeGraph, query: Query, cands: dict,
                rids: dict) -> None:
    order = aggregate_max(cands)[:10]
    slot = "tail" if query.bound_is_subject else "head"
    head = (f"{kg.predicates.name(query.target)}"
            f"({kg.entities.name(query.bound)}, ?)" if query.bound_is_subject
            else f"{kg.predicates.name(query.target)}"
                 f"(?, {kg.entities.name(query.bound)})")
    parts = []
    for e in order:
        ids = ",".join(str(i) for i in sorted(set(rids.get(e, ()))))
        parts.append(f"{kg.entities.name(e)}[{ids}]")
    fh.write(f"{slot}\t{head}\t{kg.entities.name(query.truth)}\t"
             f"{' '.join(parts)}\n")
