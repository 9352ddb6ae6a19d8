"""Body-chain grounding over the training graph.

Groundings are represented compactly as (original-constant, tail-constant)
pairs: the binding of the head variable the chain starts from, and the
binding of the last chain node. For closed rules the pair doubles as the
(subject, object) head binding. Walks respect per-atom direction and never
revisit a node.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .rules import (BOTH_ANCHORED, CLOSED, HEAD_ANCHORED, OPEN, Rule,
                    reversed_body)
from .store import FORWARD, KnowledgeGraph

DEFAULT_CAP = 100_000


@dataclass(slots=True)
class GroundingSet:
    """Distinct (original, tail) pairs witnessed by full body walks."""

    source: tuple          # body_key of the rule that was grounded
    pairs: set
    truncated: bool = False

    def originals(self) -> set:
        return {o for o, _ in self.pairs}

    def by_tail(self) -> dict:
        out: dict[int, list[int]] = {}
        for o, t in self.pairs:
            out.setdefault(t, []).append(o)
        return out


def _successors(kg: KnowledgeGraph, u: int, pred: int, direction: int):
    if direction == FORWARD:
        return kg.out_index.get((u, pred), ())
    return kg.in_index.get((u, pred), ())


def _chain_starts(kg: KnowledgeGraph, body) -> tuple:
    p, d = body[0]
    if d == FORWARD:
        return kg.subjects_by_pred.get(p, ())
    return kg.objects_by_pred.get(p, ())


def _collect_pairs(kg: KnowledgeGraph, body, starts, cap: int,
                   rng: random.Random | None) -> tuple[set, bool]:
    """Enumerate (start, final) pairs over all full walks of the body chain."""
    n = len(body)
    pairs: set = set()
    truncated = False
    if n == 1:
        # a one-atom chain is exactly the predicate's oriented edge set
        p, d = body[0]
        edges = kg.by_predicate.get(p, ())
        if rng is not None and len(edges) > cap:
            edges = rng.sample(sorted(edges), len(edges))
        for s, o in edges:
            if s == o:
                continue
            pairs.add((s, o) if d == FORWARD else (o, s))
            if len(pairs) >= cap:
                truncated = True
                break
        return pairs, truncated
    if rng is not None:
        starts = list(starts)
        rng.shuffle(starts)
    for e0 in starts:
        if _pairs_from(kg, body, n, e0, pairs, cap, rng):
            truncated = True
            break
    return pairs, truncated


def _pairs_from(kg, body, n, e0, pairs, cap, rng) -> bool:
    """DFS from one start entity; returns True when the cap was hit."""
    visited = {e0}

    def rec(u: int, depth: int) -> bool:
        p, d = body[depth]
        succ = _successors(kg, u, p, d)
        if rng is not None and len(succ) > 1:
            succ = rng.sample(succ, len(succ))
        if depth == n - 1:
            for v in succ:
                if v in visited:
                    continue
                pairs.add((e0, v))
                if len(pairs) >= cap:
                    return True
            return False
        for v in succ:
            if v in visited:
                continue
            visited.add(v)
            if rec(v, depth + 1):
                return True
            visited.discard(v)
        return False

    return rec(e0, 0)


def ground(kg: KnowledgeGraph, rule: Rule, cap: int = DEFAULT_CAP,
           rng: random.Random | None = None) -> GroundingSet:
    """Ground an abstract rule; for CLOSED rules the pairs are head bindings."""
    if rule.kind not in (OPEN, CLOSED):
        raise ValueError("ground() takes abstract rules; use "
                         "ground_instantiated() for anchored rules")
    starts = _chain_starts(kg, rule.body)
    pairs, truncated = _collect_pairs(kg, rule.body, starts, cap, rng)
    return GroundingSet(rule.body_key, pairs, truncated)


def ground_instantiated(kg: KnowledgeGraph, rule: Rule, cap: int = DEFAULT_CAP,
                        rng: random.Random | None = None) -> GroundingSet:
    """Per-rule baseline grounding with anchors substituted before traversal.

    A head anchor constrains only the head, so head-anchored grounding walks
    the same chain as the deriving template; a tail anchor prunes walks at
    the last atom.
    """
    if rule.kind not in (HEAD_ANCHORED, BOTH_ANCHORED):
        raise ValueError("ground_instantiated() takes anchored rules")
    if rule.kind == HEAD_ANCHORED:
        starts = _chain_starts(kg, rule.body)
        pairs, truncated = _collect_pairs(kg, rule.body, starts, cap, rng)
        return GroundingSet(rule.body_key, pairs, truncated)

    tail = rule.tail_anchor
    body = rule.body
    n = len(body)
    starts = _chain_starts(kg, body)
    if rng is not None:
        starts = list(starts)
        rng.shuffle(starts)
    pairs: set = set()
    truncated = False
    last_p, last_d = body[-1]
    for e0 in starts:
        if n == 1:
            if tail != e0 and kg.has_edge(e0, last_p, last_d, tail):
                pairs.add((e0, tail))
        else:
            if _walk_reaches_tail(kg, body, e0, tail, rng):
                pairs.add((e0, tail))
        if len(pairs) >= cap:
            truncated = True
            break
    return GroundingSet(rule.body_key, pairs, truncated)


def _walk_reaches_tail(kg, body, e0, tail, rng=None) -> bool:
    """Does any walk of body from e0 end exactly at tail? (no node reuse)"""
    n = len(body)
    last_p, last_d = body[-1]
    visited = {e0}

    def rec(u: int, depth: int) -> bool:
        if depth == n - 1:
            return tail not in visited and kg.has_edge(u, last_p, last_d, tail)
        p, d = body[depth]
        for v in _successors(kg, u, p, d):
            if v in visited:
                continue
            visited.add(v)
            if rec(v, depth + 1):
                return True
            visited.discard(v)
        return False

    return rec(e0, 0)


def chain_bindings(kg: KnowledgeGraph, body, entity: int,
                   cap: int = DEFAULT_CAP,
                   banned_final: int | None = None) -> set:
    """All distinct final-node bindings of body walked from entity.

    banned_final skips one final value at the last atom; query answering uses
    it to drop the walk whose single edge would be the predicted fact itself.
    """
    n = len(body)
    out: set = set()
    visited = {entity}

    def rec(u: int, depth: int) -> bool:
        p, d = body[depth]
        succ = _successors(kg, u, p, d)
        if depth == n - 1:
            for v in succ:
                if v in visited or (depth == 0 and v == banned_final):
                    continue
                out.add(v)
                if len(out) >= cap:
                    return True
            return False
        for v in succ:
            if v in visited:
                continue
            visited.add(v)
            if rec(v, depth + 1):
                return True
            visited.discard(v)
        return False

    rec(entity, 0)
    return out


def chain_exists(kg: KnowledgeGraph, body, entity: int,
                 banned_final: int | None = None) -> bool:
    """Is there at least one full walk of body from entity?"""
    n = len(body)
    visited = {entity}

    def rec(u: int, depth: int) -> bool:
        p, d = body[depth]
        succ = _successors(kg, u, p, d)
        if depth == n - 1:
            for v in succ:
                if v not in visited and not (n == 1 and v == banned_final):
                    return True
            return False
        for v in succ:
            if v in visited:
                continue
            visited.add(v)
            if rec(v, depth + 1):
                return True
            visited.discard(v)
        return False

    return rec(entity, 0)


def body_bindings_from(kg: KnowledgeGraph, rule: Rule, entity: int,
                       cap: int = DEFAULT_CAP) -> set:
    """Bindings of the chain's far end with the original variable bound.

    CLOSED rules return the full set of opposite head-variable bindings.
    OPEN and head-anchored rules return a one-element marker set when any
    walk exists; both-anchored rules additionally require the walk to end at
    the tail anchor.
    """
    if rule.kind == CLOSED:
        return chain_bindings(kg, rule.body, entity, cap)
    if rule.kind in (OPEN, HEAD_ANCHORED):
        n = len(rule.body)
        out: set = set()
        visited = {entity}

        def rec(u: int, depth: int) -> bool:
            p, d = rule.body[depth]
            for v in _successors(kg, u, p, d):
                if v in visited:
                    continue
                if depth == n - 1:
                    out.add(v)
                    return True
                visited.add(v)
                if rec(v, depth + 1):
                    return True
                visited.discard(v)
            return False

        rec(entity, 0)
        return out
    # BOTH_ANCHORED
    tail = rule.tail_anchor
    if len(rule.body) == 1:
        p, d = rule.body[0]
        ok = tail != entity and kg.has_edge(entity, p, d, tail)
    else:
        ok = _walk_reaches_tail(kg, rule.body, entity, tail)
    return {tail} if ok else set()


def original_bindings(kg: KnowledgeGraph, rule: Rule, cap: int = DEFAULT_CAP,
                      banned_final: int | None = None) -> tuple:
    """Distinct original-variable bindings from which the body fully grounds.

    For both-anchored rules the chain is walked backwards from the tail
    anchor, which enumerates exactly the originals of walks ending there.
    """
    if rule.kind == HEAD_ANCHORED:
        found = []
        for e0 in _chain_starts(kg, rule.body):
            if chain_exists(kg, rule.body, e0, banned_final):
                found.append(e0)
                if len(found) >= cap:
                    break
        return tuple(found)
    if rule.kind == BOTH_ANCHORED:
        back = reversed_body(rule.body)
        return tuple(sorted(chain_bindings(kg, back, rule.tail_anchor, cap)))
    raise ValueError("original_bindings() takes anchored rules")
