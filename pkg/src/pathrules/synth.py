"""Synthetic knowledge graphs for tests and desk-scale benchmarking.

benchmark_split() plants learnable regularities (inverse predicates,
two-hop compositions, cluster-correlated attribute hubs) in a configurable
amount of noise, so mined rule sets contain closed rules, anchored rules of
several lengths, and a realistic share of rules that only look good on the
training split. resplit() re-cuts an existing dataset into a 6:2:2 split.
"""

from __future__ import annotations

import os
import random

from .store import Interner, KnowledgeGraph, SplitSet, Triple


def _skewed(rng: random.Random, n: int, power: float = 2.0) -> int:
    return int(n * rng.random() ** power)


def random_kg(seed: int = 0, n_entities: int = 120, n_predicates: int = 6,
              n_triples: int = 500) -> KnowledgeGraph:
    """A small random graph with skewed degrees; dense enough to join."""
    rng = random.Random(seed)
    entities = Interner()
    predicates = Interner()
    for i in range(n_entities):
        entities.add(f"e{i:04d}")
    for i in range(n_predicates):
        predicates.add(f"r{i:02d}")
    triples = []
    seen = set()
    attempts = 0
    while len(triples) < n_triples and attempts < n_triples * 20:
        attempts += 1
        s = _skewed(rng, n_entities)
        o = _skewed(rng, n_entities)
        p = rng.randrange(n_predicates)
        t = Triple(s, p, o)
        if s == o or t in seen:
            continue
        seen.add(t)
        triples.append(t)
    return KnowledgeGraph(entities, predicates, triples)


def benchmark_split(seed: int = 0, n_entities: int = 40_000,
                    n_predicates: int = 11, n_train: int = 93_000,
                    n_valid: int = 3_000, n_test: int = 3_000,
                    n_clusters: int = 64, noise: float = 0.2) -> SplitSet:
    """A WN18RR-scale surrogate with planted rule structure.

    Predicates cycle through four roles: base edges (skewed, mostly
    intra-cluster), inverses of a base predicate, two-hop compositions, and
    cluster-hub attributes. The fact pool is shuffled and cut into
    train/valid/test, so held-out facts are predictable exactly to the
    extent the planted regularities are real.
    """
    rng = random.Random(seed)
    total = n_train + n_valid + n_test
    per_pred = total // n_predicates + 1

    n_hubs = n_clusters
    n_plain = n_entities - n_hubs
    per_cluster = n_plain // n_clusters

    def cluster(e: int) -> int:
        return e % n_clusters

    def hub(c: int) -> int:
        return n_plain + c  # hub entities occupy the top id range

    def plain() -> int:
        return _skewed(rng, n_plain, 1.6)

    def cluster_mate(s: int) -> int:
        return cluster(s) + n_clusters * rng.randrange(per_cluster)

    facts: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int, int]] = set()
    by_pred_edges: dict[int, list[tuple[int, int]]] = {}

    def add(s: int, p: int, o: int) -> bool:
        t = (s, p, o)
        if s != o and t not in seen:
            seen.add(t)
            facts.append(t)
            by_pred_edges.setdefault(p, []).append((s, o))
            return True
        return False

    roles = [("base" if p % 4 == 0 else
              "inverse" if p % 4 == 1 else
              "compose" if p % 4 == 2 else "anchor")
             for p in range(n_predicates)]
    base_preds = [p for p, r in enumerate(roles) if r == "base"] or [0]

    # Planted laws hold with probability ~0.9, so held-out consequences are
    # dense among a law rule's novel predictions and the rule survives a
    # validation filter; noise edges supply coincidental (overfitting) rules.
    for p, role in enumerate(roles):
        quota = per_pred
        n_noise = int(quota * noise)
        n_struct = quota - n_noise
        made = 0
        tries = 0
        budget = n_struct * 12
        if role == "base" or not by_pred_edges.get(base_preds[0]):
            while made < n_struct and tries < budget:
                tries += 1
                s = plain()
                o = cluster_mate(s) if rng.random() < 0.9 else plain()
                made += add(s, p, o)
        elif role == "inverse":
            src = base_preds[(p // 4) % len(base_preds)]
            for s, o in by_pred_edges.get(src, ()):
                if made >= n_struct:
                    break
                if rng.random() < 0.9:
                    made += add(o, p, s)
        elif role == "compose":
            a = base_preds[(p // 4) % len(base_preds)]
            b = base_preds[(p // 4 + 1) % len(base_preds)]
            next_b: dict[int, int] = {}
            for s, o in by_pred_edges.get(b, ()):
                next_b.setdefault(s, o)  # functional second hop
            for s, mid in by_pred_edges.get(a, ()):
                if made >= n_struct:
                    break
                z = next_b.get(mid)
                if z is not None and rng.random() < 0.9:
                    made += add(s, p, z)
        else:  # anchor
            src = base_preds[(p // 4) % len(base_preds)]
            subjects = list(dict.fromkeys(
                s for s, _ in by_pred_edges.get(src, ())))
            for s in subjects:
                if made >= n_struct:
                    break
                if rng.random() < 0.95:
                    made += add(s, p, hub(cluster(s)))
                else:
                    made += add(s, p, hub(rng.randrange(n_clusters)))
        made = 0
        tries = 0
        while made < n_noise and tries < n_noise * 12:
            tries += 1
            made += add(plain(), p, plain())

    # dependent roles can run out of source edges; top up with base edges
    tries = 0
    while len(facts) < total and tries < total * 8:
        tries += 1
        p = base_preds[tries % len(base_preds)]
        s = plain()
        o = cluster_mate(s) if rng.random() < 0.9 else plain()
        add(s, p, o)

    rng.shuffle(facts)
    facts = facts[:total]
    if len(facts) < total:
        # dedup and compose shortfalls shrink the pool; keep the split ratio
        n_train = len(facts) * n_train // total
        n_valid = len(facts) * n_valid // total
    train = facts[:n_train]
    valid = facts[n_train:n_train + n_valid]
    test = facts[n_train + n_valid:]

    entities = Interner()
    predicates = Interner()
    for i in range(n_entities):
        if i < n_plain:
            entities.add(f"e{i:05d}")
        else:
            entities.add(f"hub{i - n_plain:03d}")
    for i in range(n_predicates):
        predicates.add(f"r{i:02d}")

    graph = KnowledgeGraph(entities, predicates,
                           (Triple(*t) for t in train))
    return SplitSet(graph, tuple(Triple(*t) for t in valid),
                    tuple(Triple(*t) for t in test))


def write_split(split: SplitSet, directory: str | os.PathLike) -> None:
    """Write a split as <dir>/train.txt, valid.txt, test.txt TSV files."""
    directory = os.fspath(directory)
    os.makedirs(directory, exist_ok=True)
    kg = split.train
    ent = kg.entities.name
    pred = kg.predicates.name
    parts = (("train.txt", kg.triples), ("valid.txt", split.valid_triples),
             ("test.txt", split.test_triples))
    for fname, triples in parts:
        with open(os.path.join(directory, fname), "w", encoding="utf-8") as fh:
            for s, p, o in triples:
                fh.write(f"{ent(s)}\t{pred(p)}\t{ent(o)}\n")


def resplit(src_dir: str | os.PathLike, out_dir: str | os.PathLike,
            seed: int = 0, ratio: tuple[int, int, int] = (6, 2, 2)) -> dict:
    """Pool every triple file in src_dir and re-cut it at the given ratio.

    Returns the written split sizes. Duplicate lines are pooled once; the
    shuffle is deterministic in the seed.
    """
    src_dir = os.fspath(src_dir)
    lines: list[str] = []
    seen: set[str] = set()
    found = False
    for fname in ("train.txt", "valid.txt", "test.txt"):
        path = os.path.join(src_dir, fname)
        if not os.path.exists(path):
            continue
        found = True
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                line = raw.rstrip("\n").rstrip("\r")
                if not line:
                    continue
                if len(line.split("\t")) != 3:
                    raise ValueError(f"{path}: malformed line {line!r}")
                if line not in seen:
                    seen.add(line)
                    lines.append(line)
    if not found:
        raise FileNotFoundError(f"no triple files found in {src_dir}")
    rng = random.Random(seed)
    rng.shuffle(lines)
    total = sum(ratio)
    n_train = len(lines) * ratio[0] // total
    n_valid = len(lines) * ratio[1] // total
    cuts = {
        "train.txt": lines[:n_train],
        "valid.txt": lines[n_train:n_train + n_valid],
        "test.txt": lines[n_train + n_valid:],
    }
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    sizes = {}
    for fname, chunk in cuts.items():
        with open(os.path.join(out_dir, fname), "w", encoding="utf-8") as fh:
            fh.write("\n".join(chunk) + ("\n" if chunk else ""))
        sizes[fname] = len(chunk)
    return sizes
