"""In-memory triple store: interned ids, adjacency indexes, dataset splits.

Triple files are 3-column TSV (subject, predicate, object), UTF-8, no header,
matching the common distribution format of FB15K-237/WN18RR. Entities and
predicates are interned to dense integer ids in first-seen order so that
rebuilding from the same files yields identical ids and indexes.
"""

from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

log = logging.getLogger(__name__)

# Edge traversal directions. FORWARD follows a triple subject->object,
# REVERSE walks it object->subject.
FORWARD = 0
REVERSE = 1

TRAIN = "train"
VALID = "valid"
TEST = "test"
ROLES = (TRAIN, VALID, TEST)


class ParseError(ValueError):
    """Malformed input text (triple file line or rule text)."""


class Triple(NamedTuple):
    s: int
    p: int
    o: int


class Interner:
    """Bidirectional string<->id map; ids are dense and first-seen ordered."""

    __slots__ = ("_ids", "_names")

    def __init__(self) -> None:
        self._ids: dict[str, int] = {}
        self._names: list[str] = []

    def add(self, name: str) -> int:
        i = self._ids.get(name)
        if i is None:
            i = len(self._names)
            self._ids[name] = i
            self._names.append(name)
        return i

    def id(self, name: str) -> int:
        return self._ids[name]

    def get(self, name: str) -> int | None:
        return self._ids.get(name)

    def name(self, i: int) -> str:
        return self._names[i]

    def __contains__(self, name: str) -> bool:
        return name in self._ids

    def __len__(self) -> int:
        return len(self._names)

    @property
    def names(self) -> list[str]:
        return self._names


@dataclass
class TripleSet:
    """Triples read from one file plus ingestion counters."""

    role: str
    triples: list[Triple]
    lines_read: int = 0
    duplicates: int = 0


class KnowledgeGraph:
    """Immutable indexed view over the training triples.

    Indexes:
      out_index: (subject, predicate) -> sorted tuple of objects
      in_index:  (object, predicate)  -> sorted tuple of subjects
      by_predicate: predicate -> set of (subject, object) pairs
      adj: entity -> sorted tuple of (predicate, direction, other-entity)
    """

    def __init__(self, entities: Interner, predicates: Interner,
                 triples: Iterable[Triple]):
        self.entities = entities
        self.predicates = predicates
        seen: set[Triple] = set()
        ordered: list[Triple] = []
        for t in triples:
            if t not in seen:
                seen.add(t)
                ordered.append(t)
        self.triples: tuple[Triple, ...] = tuple(ordered)
        self._build_indexes()

    def _build_indexes(self) -> None:
        out: dict[tuple[int, int], list[int]] = {}
        inn: dict[tuple[int, int], list[int]] = {}
        byp: dict[int, set[tuple[int, int]]] = {}
        adj: dict[int, list[tuple[int, int, int]]] = {}
        for s, p, o in self.triples:
            out.setdefault((s, p), []).append(o)
            inn.setdefault((o, p), []).append(s)
            byp.setdefault(p, set()).add((s, o))
            adj.setdefault(s, []).append((p, FORWARD, o))
            adj.setdefault(o, []).append((p, REVERSE, s))
        self.out_index = {k: tuple(sorted(v)) for k, v in out.items()}
        self.in_index = {k: tuple(sorted(v)) for k, v in inn.items()}
        self.by_predicate = byp
        self.adj = {e: tuple(sorted(v)) for e, v in adj.items()}
        subj: dict[int, set[int]] = {}
        obj: dict[int, set[int]] = {}
        for s, p, o in self.triples:
            subj.setdefault(p, set()).add(s)
            obj.setdefault(p, set()).add(o)
        self.subjects_by_pred = {p: tuple(sorted(v)) for p, v in subj.items()}
        self.objects_by_pred = {p: tuple(sorted(v)) for p, v in obj.items()}

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_predicates(self) -> int:
        return len(self.predicates)

    def neighbors(self, e: int) -> tuple[tuple[int, int, int], ...]:
        """All edges at e as (predicate, direction, other) in deterministic order."""
        if not 0 <= e < len(self.entities):
            raise KeyError(f"unknown entity id {e}")
        return self.adj.get(e, ())

    def has_triple(self, t: Triple) -> bool:
        pairs = self.by_predicate.get(t.p)
        return pairs is not None and (t.s, t.o) in pairs

    def has_out(self, s: int, p: int) -> bool:
        return (s, p) in self.out_index

    def has_edge(self, u: int, p: int, direction: int, v: int) -> bool:
        """Is there a fact p(u, v) (FORWARD) or p(v, u) (REVERSE)?"""
        pairs = self.by_predicate.get(p)
        if pairs is None:
            return False
        return ((u, v) in pairs) if direction == FORWARD else ((v, u) in pairs)

    def pairs(self, p: int) -> set[tuple[int, int]]:
        return self.by_predicate.get(p, set())


def load_triples(path: str | os.PathLike, role: str, entities: Interner,
                 predicates: Interner) -> TripleSet:
    """Read one TSV triple file, interning strings into the given dictionaries.

    Duplicate lines within the file are dropped and counted. Lines that do not
    have exactly 3 tab-separated fields raise ParseError with the line number.
    """
    if role not in ROLES:
        raise ValueError(f"role must be one of {ROLES}, got {role!r}")
    triples: list[Triple] = []
    seen: set[Triple] = set()
    lines_read = 0
    duplicates = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            lines_read += 1
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, "
                    f"got {len(fields)}")
            s = entities.add(fields[0])
            p = predicates.add(fields[1])
            o = entities.add(fields[2])
            t = Triple(s, p, o)
            if t in seen:
                duplicates += 1
                continue
            seen.add(t)
            triples.append(t)
    if duplicates:
        log.warning("%s: dropped %d duplicate line(s)", path, duplicates)
    return TripleSet(role, triples, lines_read, duplicates)


@dataclass
class SplitSet:
    """Train graph plus held-out fact sets, pairwise disjoint."""

    train: KnowledgeGraph
    valid_triples: tuple[Triple, ...] = ()
    test_triples: tuple[Triple, ...] = ()
    cross_split_duplicates: int = 0
    _valid_pairs: dict = field(init=False, repr=False, default=None)
    _test_pairs: dict = field(init=False, repr=False, default=None)

    def __post_init__(self):
        self._valid_pairs = _pairs_by_pred(self.valid_triples)
        self._test_pairs = _pairs_by_pred(self.test_triples)

    @classmethod
    def load(cls, directory: str | os.PathLike) -> "SplitSet":
        """Load <dir>/train.txt (required) and valid.txt/test.txt (optional).

        Triples already present in an earlier split are dropped from later
        ones with a warning so the three splits stay pairwise disjoint.
        """
        directory = os.fspath(directory)
        train_path = os.path.join(directory, "train.txt")
        if not os.path.exists(train_path):
            raise FileNotFoundError(f"missing {train_path}")
        entities = Interner()
        predicates = Interner()
        train = load_triples(train_path, TRAIN, entities, predicates)
        graph = KnowledgeGraph(entities, predicates, train.triples)
        known: set[Triple] = set(graph.triples)
        held: dict[str, tuple[Triple, ...]] = {}
        dropped = 0
        for role, fname in ((VALID, "valid.txt"), (TEST, "test.txt")):
            path = os.path.join(directory, fname)
            if not os.path.exists(path):
                held[role] = ()
                continue
            ts = load_triples(path, role, entities, predicates)
            kept = []
            for t in ts.triples:
                if t in known:
                    dropped += 1
                    continue
                known.add(t)
                kept.append(t)
            held[role] = tuple(kept)
        if dropped:
            log.warning("%s: dropped %d triple(s) duplicated across splits",
                        directory, dropped)
        return cls(graph, held[VALID], held[TEST], dropped)

    @classmethod
    def from_arrays(cls, train: Sequence[Sequence[str]],
                    valid: Sequence[Sequence[str]] = (),
                    test: Sequence[Sequence[str]] = ()) -> "SplitSet":
        """Build a split set from in-memory string triples."""
        entities = Interner()
        predicates = Interner()

        def intern(rows):
            out = []
            for s, p, o in rows:
                out.append(Triple(entities.add(s), predicates.add(p),
                                  entities.add(o)))
            return out

        train_t = intern(train)
        graph = KnowledgeGraph(entities, predicates, train_t)
        known = set(graph.triples)
        dropped = 0
        held = []
        for rows in (valid, test):
            kept = []
            for t in intern(rows):
                if t in known:
                    dropped += 1
                    continue
                known.add(t)
                kept.append(t)
            held.append(tuple(kept))
        return cls(graph, held[0], held[1], dropped)

    def contains(self, t: Triple, scope: str = "all") -> bool:
        """Membership test over train, valid, test, or their union."""
        if scope == TRAIN:
            return self.train.has_triple(t)
        if scope == VALID:
            return (t.s, t.o) in self._valid_pairs.get(t.p, ())
        if scope == TEST:
            return (t.s, t.o) in self._test_pairs.get(t.p, ())
        if scope == "all":
            return (self.contains(t, TRAIN) or self.contains(t, VALID)
                    or self.contains(t, TEST))
        raise ValueError(f"unknown scope {scope!r}")

    def valid_pairs(self, p: int) -> set[tuple[int, int]]:
        return self._valid_pairs.get(p, set())

    def test_pairs(self, p: int) -> set[tuple[int, int]]:
        return self._test_pairs.get(p, set())

    def known_pairs(self, p: int) -> set[tuple[int, int]]:
        """Union of train/valid/test pairs for p (filtered-ranking support)."""
        out = set(self.train.by_predicate.get(p, ()))
        out |= self._valid_pairs.get(p, set())
        out |= self._test_pairs.get(p, set())
        return out


def _pairs_by_pred(triples: Iterable[Triple]) -> dict[int, set[tuple[int, int]]]:
    out: dict[int, set[tuple[int, int]]] = {}
    for s, p, o in triples:
        out.setdefault(p, set()).add((s, o))
    return out


def write_dictionaries(kg: KnowledgeGraph, directory: str | os.PathLike) -> None:
    """Dump entities.dict / relations.dict as id<TAB>string lines."""
    directory = os.fspath(directory)
    os.makedirs(directory, exist_ok=True)
    for fname, interner in (("entities.dict", kg.entities),
                            ("relations.dict", kg.predicates)):
        with open(os.path.join(directory, fname), "w", encoding="utf-8") as fh:
            for i, name in enumerate(interner.names):
                fh.write(f"{i}\t{name}\n")


def file_sha256(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
