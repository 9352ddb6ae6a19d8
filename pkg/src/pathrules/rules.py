"""Rule language: chain-shaped Horn rules over a knowledge graph.

Four rule kinds share one representation: a head predicate, an ordered body
of (predicate, direction) atoms forming a simple chain, the head slot the
chain originates from, and optional anchor constants.

  OPEN           r_t(X,Y) <- r1(X,V0), ..., rn(Vn-2,Vn-1)   (intermediate only)
  CLOSED         r_t(X,Y) <- r1(X,V0), ..., rn(Vn-2,Y)
  HEAD_ANCHORED  r_t(X,e) <- r1(X,V0), ..., rn(Vn-2,Vn-1)
  BOTH_ANCHORED  r_t(X,e) <- r1(X,V0), ..., rn(Vn-2,e')

Variables are positional and never stored; the names X, Y, V0.. are produced
at print time. A REVERSE atom is printed with its arguments in fact order
(subject first), so printed rules read exactly like chains of facts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, NamedTuple

from .store import FORWARD, REVERSE, ParseError

OPEN = 0
CLOSED = 1
HEAD_ANCHORED = 2
BOTH_ANCHORED = 3

KIND_NAMES = {
    OPEN: "open",
    CLOSED: "closed",
    HEAD_ANCHORED: "head_anchored",
    BOTH_ANCHORED: "both_anchored",
}
KIND_IDS = {v: k for k, v in KIND_NAMES.items()}

ABSTRACT_KINDS = (OPEN, CLOSED)
ANCHORED_KINDS = (HEAD_ANCHORED, BOTH_ANCHORED)


class Step(NamedTuple):
    pred: int
    direction: int
    src: int
    dst: int


class Path(NamedTuple):
    """A sampled ground walk explaining one positive instance.

    The walk starts at the instance subject (from_subject) or object and its
    steps never revisit a node; the final node may equal the opposite
    instance entity, which makes the path closed.
    """

    target: int
    s: int
    o: int
    from_subject: bool
    steps: tuple[Step, ...]


@dataclass(slots=True)
class RuleStats:
    """Training-set counts and quality measures attached after scoring."""

    support: int = 0            # predictions present in train
    body_groundings: int = 0    # distinct head-variable bindings from the body
    pca_groundings: int = 0     # predictions whose head subject is r_t-functional
    head_size: int = 0          # train instances of the target predicate
    sc: float = 0.0             # standard confidence
    smc: float = 0.0            # smooth confidence
    pca: float = 0.0            # partial-completeness-assumption confidence
    hc: float = 0.0             # head coverage
    pca_defined: bool = True
    frequency: int = 0          # occurrences of the source abstract rule
    valid_precision: float | None = None
    test_precision: float | None = None

    def value(self, measure: str) -> float:
        if measure == "standard":
            return self.sc
        if measure == "smooth":
            return self.smc
        if measure == "pca":
            return self.pca
        raise ValueError(f"unknown measure {measure!r}")


class Rule:
    """Immutable rule value; identity excludes stats and frequency."""

    __slots__ = ("kind", "target", "from_subject", "body", "head_anchor",
                 "tail_anchor", "stats", "_hash")

    def __init__(self, kind: int, target: int, from_subject: bool,
                 body: tuple[tuple[int, int], ...],
                 head_anchor: int | None = None,
                 tail_anchor: int | None = None):
        if not body:
            raise ValueError("rule body must have at least one atom")
        if kind in ABSTRACT_KINDS and (head_anchor is not None
                                       or tail_anchor is not None):
            raise ValueError("abstract rules carry no anchors")
        if kind == HEAD_ANCHORED and (head_anchor is None
                                      or tail_anchor is not None):
            raise ValueError("head-anchored rules have exactly a head anchor")
        if kind == BOTH_ANCHORED and (head_anchor is None or tail_anchor is None):
            raise ValueError("both-anchored rules need head and tail anchors")
        if kind == CLOSED and not from_subject:
            raise ValueError("closed rules are canonicalized to subject origin")
        self.kind = kind
        self.target = target
        self.from_subject = from_subject
        self.body = tuple(body)
        self.head_anchor = head_anchor
        self.tail_anchor = tail_anchor
        self.stats: RuleStats | None = None
        self._hash = hash((kind, target, from_subject, self.body,
                           head_anchor, tail_anchor))

    @property
    def key(self):
        return (self.kind, self.target, self.from_subject, self.body,
                self.head_anchor, self.tail_anchor)

    @property
    def body_key(self):
        """Identity of the deriving abstract chain (shared by specializations)."""
        return (self.target, self.from_subject, self.body)

    def __len__(self) -> int:
        return len(self.body)

    def __eq__(self, other) -> bool:
        return isinstance(other, Rule) and self.key == other.key

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return (f"Rule({KIND_NAMES[self.kind]}, target={self.target}, "
                f"from_subject={self.from_subject}, body={self.body}, "
                f"anchors=({self.head_anchor}, {self.tail_anchor}))")

    def head_pair(self, original: int, other: int) -> tuple[int, int]:
        """Orient (original-binding, other-binding) to head (subject, object)."""
        return (original, other) if self.from_subject else (other, original)

    def specialize_head(self, anchor: int) -> "Rule":
        if self.kind != OPEN:
            raise ValueError("only open rules take a head anchor")
        return Rule(HEAD_ANCHORED, self.target, self.from_subject, self.body,
                    head_anchor=anchor)

    def specialize_both(self, head_anchor: int, tail_anchor: int) -> "Rule":
        if self.kind != OPEN:
            raise ValueError("only open rules take anchors")
        return Rule(BOTH_ANCHORED, self.target, self.from_subject, self.body,
                    head_anchor=head_anchor, tail_anchor=tail_anchor)


def abstraction(path: Path) -> Rule:
    """Generalize a ground path into an abstract rule.

    Every constant becomes a distinct positional variable. Walks that end on
    the opposite instance entity become CLOSED rules (canonicalized to start
    at the head subject); all others become OPEN templates. Raises ValueError
    when the path is not a simple connected chain.
    """
    if not path.steps:
        raise ValueError("empty path")
    origin = path.s if path.from_subject else path.o
    opposite = path.o if path.from_subject else path.s
    nodes = [origin]
    for step in path.steps:
        if step.src != nodes[-1]:
            raise ValueError("disconnected path step")
        src, dst = ((step.src, step.dst) if step.direction == FORWARD
                    else (step.dst, step.src))
        nodes.append(step.dst)
        if step.pred == path.target and src == path.s and dst == path.o:
            raise ValueError("path reuses the instance edge")
    interior, last = nodes[:-1], nodes[-1]
    if len(set(interior)) != len(interior):
        raise ValueError("path revisits a node")
    if opposite in interior[1:]:
        raise ValueError("opposite instance entity may only end the path")
    closed = last == opposite and origin != opposite
    if not closed and last in interior:
        raise ValueError("path revisits a node")
    body = tuple((st.pred, st.direction) for st in path.steps)
    if closed:
        if path.from_subject:
            return Rule(CLOSED, path.target, True, body)
        return Rule(CLOSED, path.target, True, reversed_body(body))
    return Rule(OPEN, path.target, path.from_subject, body)


def reversed_body(body: tuple[tuple[int, int], ...]) -> tuple[tuple[int, int], ...]:
    """The same chain walked from the far end."""
    return tuple((p, FORWARD if d == REVERSE else REVERSE)
                 for p, d in reversed(body))


# --- text form ---------------------------------------------------------------

_VAR_RE = re.compile(r"^(X|Y|V\d+)$")
_NEEDS_QUOTE_RE = re.compile(r'[,()"\\\s]')


def _render_constant(name: str) -> str:
    if not name or _NEEDS_QUOTE_RE.search(name) or _VAR_RE.match(name):
        return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return name


def _node_names(rule: Rule, const: Callable[[int], str]) -> list[str]:
    n = len(rule.body)
    origin = "X" if rule.from_subject else "Y"
    free = "Y" if rule.from_subject else "X"
    if rule.kind == CLOSED:
        return [origin] + [f"V{i}" for i in range(n - 1)] + [free]
    names = [origin] + [f"V{i}" for i in range(n)]
    if rule.kind == BOTH_ANCHORED:
        names[-1] = const(rule.tail_anchor)
    return names


def format_rule(rule: Rule, kg) -> str:
    """Serialize a rule against a graph's dictionaries.

    REVERSE atoms are written in fact order (their arguments swapped back),
    so each printed atom is a pattern a matching fact instantiates directly.
    """
    ent = lambda i: _render_constant(kg.entities.name(i))
    pred = kg.predicates.name
    nodes = _node_names(rule, ent)
    if rule.from_subject:
        hs = "X"
        ho = ent(rule.head_anchor) if rule.kind in ANCHORED_KINDS else "Y"
    else:
        ho = "Y"
        hs = ent(rule.head_anchor) if rule.kind in ANCHORED_KINDS else "X"
    atoms = []
    for i, (p, d) in enumerate(rule.body):
        u, v = nodes[i], nodes[i + 1]
        if d == REVERSE:
            u, v = v, u
        atoms.append(f"{pred(p)}({u},{v})")
    return f"{pred(rule.target)}({hs},{ho}) <- {', '.join(atoms)}"


def _parse_term(text: str, pos: int) -> tuple[tuple[str, str], int]:
    """Parse one term starting at pos; returns (('var'|'const', value), next_pos)."""
    n = len(text)
    while pos < n and text[pos] == " ":
        pos += 1
    if pos >= n:
        raise ParseError(f"unexpected end of rule text at position {pos}")
    if text[pos] == '"':
        pos += 1
        out = []
        while pos < n:
            ch = text[pos]
            if ch == "\\" and pos + 1 < n:
                out.append(text[pos + 1])
                pos += 2
                continue
            if ch == '"':
                return ("const", "".join(out)), pos + 1
            out.append(ch)
            pos += 1
        raise ParseError(f"unterminated quoted constant at position {pos}")
    start = pos
    while pos < n and text[pos] not in ",)":
        pos += 1
    token = text[start:pos].strip()
    if not token:
        raise ParseError(f"empty term at position {start}")
    if _VAR_RE.match(token):
        return ("var", token), pos
    return ("const", token), pos


def _parse_atom(text: str, pos: int):
    n = len(text)
    while pos < n and text[pos] in " ,":
        pos += 1
    lparen = text.find("(", pos)
    if lparen < 0:
        raise ParseError(f"expected atom at position {pos}")
    name = text[pos:lparen].strip()
    if not name:
        raise ParseError(f"missing predicate name at position {pos}")
    t1, pos = _parse_term(text, lparen + 1)
    while pos < n and text[pos] == " ":
        pos += 1
    if pos >= n or text[pos] != ",":
        raise ParseError(f"expected ',' between terms at position {pos}")
    t2, pos = _parse_term(text, pos + 1)
    while pos < n and text[pos] == " ":
        pos += 1
    if pos >= n or text[pos] != ")":
        raise ParseError(f"expected ')' at position {pos}")
    return (name, t1, t2), pos + 1


def parse_rule(text: str, kg) -> Rule:
    """Parse the text form produced by format_rule, resolving names via kg.

    The chain is validated (connected, no repeated variables, anchors only in
    the allowed positions) and the result is the canonical Rule value, so
    parse_rule(format_rule(r, kg), kg) == r.
    """
    head_text, sep, body_text = text.partition("<-")
    if not sep:
        raise ParseError("rule text must contain '<-'")
    head, pos = _parse_atom(head_text, 0)
    if head_text[pos:].strip():
        raise ParseError(f"trailing text after head at position {pos}")
    atoms = []
    pos = 0
    bt = body_text.rstrip()
    while pos < len(bt):
        atom, pos = _parse_atom(bt, pos)
        atoms.append(atom)
        while pos < len(bt) and bt[pos] == " ":
            pos += 1
        if pos < len(bt):
            if bt[pos] != ",":
                raise ParseError(f"expected ',' between atoms at position {pos}")
            pos += 1
    if not atoms:
        raise ParseError("rule body is empty")

    name, (k1, v1), (k2, v2) = head
    head_anchor_name = None
    if k1 == "var" and v1 == "X" and k2 == "var" and v2 == "Y":
        anchored = False
        from_subject = None  # decided by the chain start
    elif k1 == "var" and v1 == "X" and k2 == "const":
        anchored, from_subject, head_anchor_name = True, True, v2
    elif k1 == "const" and k2 == "var" and v2 == "Y":
        anchored, from_subject, head_anchor_name = True, False, v1
    else:
        raise ParseError(f"malformed head atom terms ({v1!r}, {v2!r})")

    first_vars = {v for kind, v in atoms[0][1:] if kind == "var"}
    if anchored:
        origin = "X" if from_subject else "Y"
        if origin not in first_vars:
            raise ParseError("body chain does not start at the head variable")
    else:
        if "X" in first_vars:
            origin, from_subject = "X", True
        elif "Y" in first_vars:
            origin, from_subject = "Y", False
        else:
            raise ParseError("body chain does not start at a head variable")
    free = "Y" if origin == "X" else "X"

    body: list[tuple[str, int]] = []
    tail_anchor_name = None
    closed = False
    cur = origin
    seen_vars = {origin}
    last = len(atoms) - 1
    for i, (pname, t1, t2) in enumerate(atoms):
        if t1 == ("var", cur):
            direction, nxt = FORWARD, t2
        elif t2 == ("var", cur):
            direction, nxt = REVERSE, t1
        else:
            raise ParseError(f"atom {i + 1} does not connect to the chain")
        kind_, val = nxt
        if kind_ == "const":
            if i != last or anchored is False:
                raise ParseError("constants may only anchor the chain tail "
                                 "of an anchored rule")
            tail_anchor_name = val
        elif val == free:
            if i != last or anchored:
                raise ParseError("the free head variable may only close the "
                                 "chain of an abstract rule")
            closed = True
        else:
            if val in seen_vars:
                raise ParseError(f"variable {val} occurs more than twice")
            seen_vars.add(val)
            cur = val
        body.append((pname, direction))

    def pred_id(s: str) -> int:
        i = kg.predicates.get(s)
        if i is None:
            raise ParseError(f"unknown predicate {s!r}")
        return i

    def ent_id(s: str) -> int:
        i = kg.entities.get(s)
        if i is None:
            raise ParseError(f"unknown entity {s!r}")
        return i

    target = pred_id(name)
    body_ids = tuple((pred_id(p), d) for p, d in body)
    if closed:
        if not from_subject:
            body_ids = reversed_body(body_ids)
        return Rule(CLOSED, target, True, body_ids)
    if not anchored:
        return Rule(OPEN, target, from_subject, body_ids)
    head_anchor = ent_id(head_anchor_name)
    if tail_anchor_name is None:
        return Rule(HEAD_ANCHORED, target, from_subject, body_ids,
                    head_anchor=head_anchor)
    return Rule(BOTH_ANCHORED, target, from_subject, body_ids,
                head_anchor=head_anchor, tail_anchor=ent_id(tail_anchor_name))
