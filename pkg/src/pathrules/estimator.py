"""Scikit-learn style estimator wrapping the full mining pipeline."""

from __future__ import annotations

import os

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_query_array, check_triple_array
from .completion import KgcConfig, Query, answer_query, evaluate
from .generalize import GenConfig
from .overfit import validation_filter
from .specialize import LearnConfig, ScoreConfig, learn_many
from .store import KnowledgeGraph, SplitSet, Triple


class RuleMiner(BaseEstimator):
    """Mines chain-shaped Horn rules from a knowledge graph and ranks
    completion candidates with them.

    fit() accepts a dataset directory path, a SplitSet, a KnowledgeGraph, or
    an array-like of (subject, predicate, object) string triples. After
    fitting, `rules_` maps each learned predicate name to its scored rules.

    Parameters mirror the pipeline configuration; see the package README for
    the full glossary. `random_state` seeds path sampling and capped
    grounding, making runs reproducible.
    """

    def __init__(self, measure="smooth", smoothing=5.0, conf_threshold=0.001,
                 supp_threshold=3, hc_threshold=0.001, saturation=0.99,
                 batch_size=10_000, paths_per_call=100, max_len=3,
                 max_car_len=3, max_instantiated_len=3,
                 grounding_cap=100_000, gen_time_ms=60_000,
                 target_time_ms=600_000, max_rules=1_000_000,
                 validation=False, overfit_factor=0.1, per_rule_cap=1000,
                 per_query_ms=5000, random_state=0, workers=1):
        self.measure = measure
        self.smoothing = smoothing
        self.conf_threshold = conf_threshold
        self.supp_threshold = supp_threshold
        self.hc_threshold = hc_threshold
        self.saturation = saturation
        self.batch_size = batch_size
        self.paths_per_call = paths_per_call
        self.max_len = max_len
        self.max_car_len = max_car_len
        self.max_instantiated_len = max_instantiated_len
        self.grounding_cap = grounding_cap
        self.gen_time_ms = gen_time_ms
        self.target_time_ms = target_time_ms
        self.max_rules = max_rules
        self.validation = validation
        self.overfit_factor = overfit_factor
        self.per_rule_cap = per_rule_cap
        self.per_query_ms = per_query_ms
        self.random_state = random_state
        self.workers = workers

    # -- configuration ------------------------------------------------------

    def learn_config(self) -> LearnConfig:
        gen = GenConfig(saturation=self.saturation,
                        batch_size=self.batch_size, max_len=self.max_len,
                        paths_per_call=self.paths_per_call,
                        seed=self.random_state, time_ms=self.gen_time_ms)
        score = ScoreConfig(measure=self.measure, smoothing=self.smoothing,
                            conf_threshold=self.conf_threshold,
                            supp_threshold=self.supp_threshold,
                            hc_threshold=self.hc_threshold)
        return LearnConfig(gen=gen, score=score,
                           max_car_len=min(self.max_car_len, self.max_len),
                           max_instantiated_len=min(self.max_instantiated_len,
                                                    self.max_len),
                           grounding_cap=self.grounding_cap,
                           target_time_ms=self.target_time_ms,
                           max_rules=self.max_rules)

    def kgc_config(self) -> KgcConfig:
        return KgcConfig(per_rule_cap=self.per_rule_cap,
                         per_query_ms=self.per_query_ms)

    def _as_split(self, X) -> SplitSet:
        if isinstance(X, SplitSet):
            return X
        if isinstance(X, KnowledgeGraph):
            return SplitSet(X)
        if isinstance(X, (str, os.PathLike)):
            return SplitSet.load(X)
        return SplitSet.from_arrays(check_triple_array(X))

    # -- estimator API -------------------------------------------------------

    def fit(self, X, y=None, targets=None):
        """Learn rule sets for every target predicate (or the given ones)."""
        split = self._as_split(X)
        kg = split.train
        cfg = self.learn_config()
        if targets is None:
            ids = [p for p in range(kg.n_predicates) if kg.pairs(p)]
        else:
            ids = []
            for t in targets:
                ids.append(t if isinstance(t, int) else kg.predicates.id(t))
        learned = learn_many(kg, ids, cfg, workers=self.workers)
        if self.validation and split.valid_triples:
            cache: dict = {}
            learned = {t: validation_filter(rules, split, self.overfit_factor,
                                            self.measure, self.grounding_cap,
                                            cache)
                       for t, rules in learned.items()}
        self.split_ = split
        self.rules_ = {kg.predicates.name(t): rules
                       for t, rules in learned.items()}
        self.n_rules_ = sum(len(r) for r in learned.values())
        return self

    def _all_rules(self):
        for rules in self.rules_.values():
            yield from rules

    def complete(self, entity: str, relation: str, mode: str = "tail",
                 k: int = 10) -> list[str]:
        """Top-k candidate entity names for r(entity, ?) or r(?, entity)."""
        check_is_fitted(self, "rules_")
        if mode not in ("tail", "head"):
            raise ValueError("mode must be 'tail' or 'head'")
        kg = self.split_.train
        target = kg.predicates.get(relation)
        bound = kg.entities.get(entity)
        if target is None or bound is None:
            return []
        query = Query(target, bound, mode == "tail", truth=-1)
        rules = self.rules_.get(relation, ())
        ranked = answer_query(query, rules, kg, self.split_,
                              self.kgc_config(), self.measure)
        return [kg.entities.name(e) for e in ranked[:k]]

    def predict(self, X):
        """Top-1 completion for query rows with '?' in subject or object."""
        check_is_fitted(self, "rules_")
        rows = check_query_array(X)
        out = []
        for s, p, o in rows:
            if o == "?":
                got = self.complete(s, p, mode="tail", k=1)
            else:
                got = self.complete(o, p, mode="head", k=1)
            out.append(got[0] if got else "")
        return np.asarray(out, dtype=object)

    def score(self, X, y=None) -> float:
        """Filtered MRR treating X as held-out test triples."""
        check_is_fitted(self, "rules_")
        rows = check_triple_array(X)
        kg = self.split_.train
        triples = tuple(Triple(kg.entities.add(s), kg.predicates.add(p),
                               kg.entities.add(o)) for s, p, o in rows)
        eval_split = SplitSet(kg, self.split_.valid_triples, triples)
        result = evaluate(eval_split, list(self._all_rules()),
                          self.kgc_config(), self.measure)
        return result.mrr
