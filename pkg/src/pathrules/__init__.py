"""Instantiated Horn-rule mining on knowledge graphs.

The pipeline samples random paths from positive instances, generalizes them
into abstract chain rules until batch saturation, specializes templates into
anchored rules through a grounding-instance join, scores whole rule families
from one shared grounding, filters overfitting rules against a validation
split, and answers completion queries with filtered maximum-aggregation
ranking.
"""

from .completion import (KgcConfig, KgcResult, Query, aggregate_max,
                         answer_query, evaluate)
from .estimator import RuleMiner
from .generalize import FrequencyMap, GenConfig, generalize, sample_paths, sort_rules
from .ground import (GroundingSet, body_bindings_from, ground,
                     ground_instantiated)
from .overfit import (OverfitConfig, OverfitReport, factor_sweep,
                      overfit_report, rule_precision, validation_filter)
from .rules import (BOTH_ANCHORED, CLOSED, HEAD_ANCHORED, OPEN, Path, Rule,
                    RuleStats, Step, abstraction, format_rule, parse_rule)
from .specialize import (CollectiveScorer, LearnConfig, ScoreConfig,
                         learn_many, learn_target, quality_filter,
                         score_baseline, score_collective, specialize)
from .store import (FORWARD, REVERSE, Interner, KnowledgeGraph, ParseError,
                    SplitSet, Triple, TripleSet, load_triples,
                    write_dictionaries)

__version__ = "0.1.0"

__all__ = [
    "FORWARD", "REVERSE", "OPEN", "CLOSED", "HEAD_ANCHORED", "BOTH_ANCHORED",
    "Triple", "TripleSet", "Interner", "KnowledgeGraph", "SplitSet",
    "ParseError", "load_triples", "write_dictionaries",
    "Rule", "RuleStats", "Path", "Step", "abstraction", "format_rule",
    "parse_rule",
    "GenConfig", "FrequencyMap", "generalize", "sample_paths", "sort_rules",
    "GroundingSet", "ground", "ground_instantiated", "body_bindings_from",
    "ScoreConfig", "LearnConfig", "CollectiveScorer", "specialize",
    "score_collective", "score_baseline", "quality_filter", "learn_target",
    "learn_many",
    "OverfitConfig", "OverfitReport", "rule_precision", "validation_filter",
    "overfit_report", "factor_sweep",
    "Query", "KgcConfig", "KgcResult", "aggregate_max", "answer_query",
    "evaluate",
    "RuleMiner",
]
