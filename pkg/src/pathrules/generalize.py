"""Bottom-up generalization: random path sampling with batch saturation.

Positive instances of the target predicate seed random walks over the
training graph; each walk is abstracted into an OPEN or CLOSED rule and
counted in a frequency map. Sampling stops once the share of already-known
rules in a batch of paths exceeds the saturation threshold, i.e. when fresh
walks stop discovering new abstract rules.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass

from .rules import CLOSED, Path, Rule, Step, abstraction, format_rule
from .store import FORWARD, KnowledgeGraph

log = logging.getLogger(__name__)


@dataclass(slots=True)
class GenConfig:
    saturation: float = 0.99   # stop when known-rule share of a batch exceeds this
    batch_size: int = 10_000   # paths per saturation check
    max_len: int = 3           # maximum body length
    paths_per_call: int = 100  # walks sampled per instance visit
    seed: int = 0
    time_ms: int = 60_000      # guard for non-converging saturation

    def __post_init__(self):
        if not 0 < self.saturation <= 1:
            raise ValueError("saturation must be in (0, 1]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if self.paths_per_call < 1:
            raise ValueError("paths_per_call must be >= 1")


class FrequencyMap:
    """Abstract-rule occurrence counts plus the batch of first insertion."""

    __slots__ = ("counts", "first_batch")

    def __init__(self) -> None:
        self.counts: dict[Rule, int] = {}
        self.first_batch: dict[Rule, int] = {}

    def add(self, rule: Rule, batch: int) -> None:
        if rule in self.counts:
            self.counts[rule] += 1
        else:
            self.counts[rule] = 1
            self.first_batch[rule] = batch

    def known_before(self, rule: Rule, batch: int) -> bool:
        b = self.first_batch.get(rule)
        return b is not None and b < batch

    def total(self) -> int:
        return sum(self.counts.values())

    def __len__(self) -> int:
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)

    def items(self):
        return self.counts.items()


def sample_paths(kg: KnowledgeGraph, target: int, instance: tuple[int, int],
                 cfg: GenConfig, rng: random.Random) -> list[Path]:
    """Sample up to paths_per_call random walks seeded at one instance.

    Each walk starts at the instance subject or object (chosen uniformly),
    aims for a uniform length in [1, max_len], never traverses the instance
    edge itself, never revisits a node, and may only reach the opposite
    instance entity as its final node (a closed walk). Dead ends cut walks
    short; zero-step walks are discarded.
    """
    s, o = instance
    adj = kg.adj
    paths: list[Path] = []
    for _ in range(cfg.paths_per_call):
        from_subject = rng.random() < 0.5
        origin = s if from_subject else o
        other = o if from_subject else s
        length = rng.randint(1, cfg.max_len)
        visited = {origin}
        steps: list[Step] = []
        cur = origin
        for depth in range(1, length + 1):
            candidates = []
            for p, d, v in adj.get(cur, ()):
                if v in visited:
                    continue
                if v == other and depth != length:
                    continue
                if p == target:
                    su, ob = (cur, v) if d == FORWARD else (v, cur)
                    if su == s and ob == o:
                        continue
                candidates.append((p, d, v))
            if not candidates:
                break
            p, d, v = rng.choice(candidates)
            steps.append(Step(p, d, cur, v))
            visited.add(v)
            cur = v
        if steps:
            paths.append(Path(target, s, o, from_subject, tuple(steps)))
    return paths


def generalize(kg: KnowledgeGraph, target: int, instances, cfg: GenConfig,
               rng: random.Random | None = None) -> FrequencyMap:
    """Run the saturation loop and return the abstract-rule frequency map.

    A rule counts as known for a batch only if it was first inserted in an
    earlier batch. The loop stops when the known share strictly exceeds
    cfg.saturation, or when the time guard fires (partial map returned).
    """
    m = FrequencyMap()
    instances = list(instances)
    if not instances:
        return m
    if rng is None:
        rng = random.Random(cfg.seed)
    deadline = time.monotonic() + cfg.time_ms / 1000.0
    batch = 0
    count = 0
    batch_rules: set[Rule] = set()
    bs = cfg.batch_size
    while True:
        if time.monotonic() >= deadline:
            log.warning("generalization guard hit for target %d after %d "
                        "paths (%d rules)", target, count, len(m))
            return m
        instance = rng.choice(instances)
        for path in sample_paths(kg, target, instance, cfg, rng):
            rule = abstraction(path)
            m.add(rule, batch)
            batch_rules.add(rule)
            count += 1
            if count % bs == 0:
                known = sum(1 for r in batch_rules if m.known_before(r, batch))
                sat_now = known / len(batch_rules)
                batch_rules.clear()
                batch += 1
                if sat_now > cfg.saturation:
                    return m


def sort_rules(m: FrequencyMap, kg: KnowledgeGraph) -> list[Rule]:
    """Order abstract rules for specialization: closed rules first (by
    frequency), then open templates grouped by increasing length, each group
    by descending frequency with the serialized text as tie-break."""
    closed: list[Rule] = []
    open_by_len: dict[int, list[Rule]] = {}
    for rule in m:
        if rule.kind == CLOSED:
            closed.append(rule)
        else:
            open_by_len.setdefault(len(rule), []).append(rule)

    def order(rules: list[Rule]) -> list[Rule]:
        return sorted(rules, key=lambda r: (-m.counts[r], format_rule(r, kg)))

    out = order(closed)
    for n in sorted(open_by_len):
        out.extend(order(open_by_len[n]))
    return out
