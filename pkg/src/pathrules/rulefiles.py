"""Reading and writing learned-rule TSV files.

One rule per line: measure-value, support, body groundings, head coverage,
rule kind, rule text; columns are tab separated. A leading comment line
records which measure the value column holds and the smoothing offset, so a
loaded rule set can be ranked the same way it was mined.
"""

from __future__ import annotations

import os
import re

from .rules import KIND_IDS, KIND_NAMES, Rule, RuleStats, format_rule, parse_rule
from .store import KnowledgeGraph, ParseError

_HEADER_RE = re.compile(r"^#\s*measure=(\S+)\s+smoothing=(\S+)\s*$")


def write_rule_file(path, rules, kg: KnowledgeGraph, measure: str,
                    smoothing: float) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# measure={measure} smoothing={smoothing!r}\n")
        for rule in rules:
            st = rule.stats
            fh.write("\t".join((
                repr(st.value(measure)),
                str(st.support),
                str(st.body_groundings),
                repr(st.hc),
                KIND_NAMES[rule.kind],
                format_rule(rule, kg),
            )) + "\n")


def read_rule_file(path, kg: KnowledgeGraph) -> tuple[list[Rule], str, float]:
    """Parse a rule file; returns (rules, measure, smoothing)."""
    measure = "smooth"
    smoothing = 5.0
    rules: list[Rule] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                m = _HEADER_RE.match(line)
                if m:
                    measure = m.group(1)
                    smoothing = float(m.group(2))
                continue
            fields = line.split("\t")
            if len(fields) != 6:
                raise ParseError(f"{path}:{lineno}: expected 6 fields, "
                                 f"got {len(fields)}")
            value, sp, bg, hc, kind_name, text = fields
            if kind_name not in KIND_IDS:
                raise ParseError(f"{path}:{lineno}: unknown kind {kind_name!r}")
            rule = parse_rule(text, kg)
            if KIND_IDS[kind_name] != rule.kind:
                raise ParseError(f"{path}:{lineno}: kind column disagrees "
                                 f"with rule text")
            sp_i, bg_i = int(sp), int(bg)
            head_size = len(kg.pairs(rule.target))
            st = RuleStats(support=sp_i, body_groundings=bg_i,
                           head_size=head_size,
                           sc=sp_i / bg_i if bg_i else 0.0,
                           smc=sp_i / (smoothing + bg_i)
                           if smoothing + bg_i > 0 else 0.0,
                           hc=float(hc))
            setattr(st, {"standard": "sc", "smooth": "smc",
                         "pca": "pca"}[measure], float(value))
            rule.stats = st
            rules.append(rule)
    return rules, measure, smoothing


def safe_filename(pid: int, name: str) -> str:
    return f"{pid:04d}_{re.sub(r'[^A-Za-z0-9._-]', '_', name)[:80]}.tsv"


def write_rules_dir(directory, rules_by_target: dict, kg: KnowledgeGraph,
                    measure: str, smoothing: float) -> dict:
    """Write one rule file per target plus an index.tsv; returns the index."""
    os.makedirs(directory, exist_ok=True)
    index = {}
    for pid in sorted(rules_by_target):
        name = kg.predicates.name(pid)
        fname = safe_filename(pid, name)
        write_rule_file(os.path.join(directory, fname),
                        rules_by_target[pid], kg, measure, smoothing)
        index[name] = (fname, len(rules_by_target[pid]))
    with open(os.path.join(directory, "index.tsv"), "w",
              encoding="utf-8") as fh:
        for name, (fname, n) in index.items():
            fh.write(f"{name}\t{fname}\t{n}\n")
    return index


def read_rules_dir(directory, kg: KnowledgeGraph,
                   targets=None) -> tuple[dict, str, float]:
    """Load rule files for the given target names (default: all indexed).

    Raises FileNotFoundError listing the targets whose files are absent.
    """
    index_path = os.path.join(directory, "index.tsv")
    if not os.path.exists(index_path):
        raise FileNotFoundError(f"missing rule index {index_path}")
    index = {}
    with open(index_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                name, fname, _n = line.rstrip("\n").split("\t")
                index[name] = fname
    wanted = list(index) if targets is None else list(targets)
    missing = [t for t in wanted if t not in index]
    if missing:
        raise FileNotFoundError(
            "no rule files for target(s): " + ", ".join(sorted(missing)))
    out = {}
    measure, smoothing = "smooth", 5.0
    for name in wanted:
        rules, measure, smoothing = read_rule_file(
            os.path.join(directory, index[name]), kg)
        out[kg.predicates.id(name)] = rules
    return out, measure, smoothing
