"""Command-line front end: learn, bench-eval, analyze-overfit, kgc, resplit,
and synth over a dataset directory of train/valid/test TSV triple files.

Every command accepts --config FILE holding flat key=value lines whose keys
match the long flag names; explicit flags override file values. Commands
exit 0 on success and nonzero with a diagnostic otherwise.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from contextlib import nullcontext

from . import __version__
from .completion import KgcConfig, evaluate
from .generalize import GenConfig
from .ground import ground
from .overfit import (OverfitConfig, factor_sweep, overfit_report,
                      validation_filter)
from .rulefiles import read_rule_file, read_rules_dir, write_rules_dir
from .rules import CLOSED, OPEN, Rule, format_rule
from .specialize import (CollectiveScorer, LearnConfig, ScoreConfig,
                         is_extreme_quality, is_high_quality, learn_many,
                         score_baseline)
from .store import SplitSet, file_sha256
from .synth import benchmark_split, resplit, write_split

log = logging.getLogger("pathrules")


# --- configuration plumbing --------------------------------------------------

def _coerce(value: str):
    low = value.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def load_config_file(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            out[key.strip()] = _coerce(value.strip())
    return out


def _defaulter(suppress: bool):
    def default(value):
        return argparse.SUPPRESS if suppress else value
    return default


def add_learn_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = _defaulter(suppress)
    p.add_argument("--measure", default=d("smooth"),
                   choices=("standard", "smooth", "pca"),
                   help="rule quality measure (default smooth)")
    p.add_argument("--smoothing", default=d(5.0), type=float,
                   help="grounding-count offset of the smooth measure")
    p.add_argument("--conf-threshold", default=d(0.001), type=float)
    p.add_argument("--supp-threshold", default=d(3), type=int)
    p.add_argument("--hc-threshold", default=d(0.001), type=float)
    p.add_argument("--saturation", default=d(0.99), type=float)
    p.add_argument("--batch-size", default=d(10_000), type=int)
    p.add_argument("--paths-per-call", default=d(100), type=int)
    p.add_argument("--max-len", default=d(3), type=int,
                   help="maximum body length")
    p.add_argument("--max-car-len", default=d(3), type=int,
                   help="longest closed rule kept")
    p.add_argument("--max-instantiated-len", default=d(3), type=int,
                   help="longest template specialized into anchored rules "
                        "(0 disables)")
    p.add_argument("--grounding-cap", default=d(100_000), type=int)
    p.add_argument("--gen-time-ms", default=d(60_000), type=int)
    p.add_argument("--target-time-ms", default=d(600_000), type=int)
    p.add_argument("--max-rules", default=d(1_000_000), type=int)
    p.add_argument("--seed", default=d(0), type=int)
    p.add_argument("--workers", default=d(1), type=int)


def learn_config(args) -> LearnConfig:
    gen = GenConfig(saturation=args.saturation, batch_size=args.batch_size,
                    max_len=args.max_len, paths_per_call=args.paths_per_call,
                    seed=args.seed, time_ms=args.gen_time_ms)
    score = ScoreConfig(measure=args.measure, smoothing=args.smoothing,
                        conf_threshold=args.conf_threshold,
                        supp_threshold=args.supp_threshold,
                        hc_threshold=args.hc_threshold)
    return LearnConfig(gen=gen, score=score,
                       max_car_len=min(args.max_car_len, args.max_len),
                       max_instantiated_len=min(args.max_instantiated_len,
                                                args.max_len),
                       grounding_cap=args.grounding_cap,
                       target_time_ms=args.target_time_ms,
                       max_rules=args.max_rules)


def build_parser(suppress: bool = False) -> argparse.ArgumentParser:
    d = _defaulter(suppress)
    parser = argparse.ArgumentParser(
        prog="pathrules",
        description="Instantiated Horn-rule mining on knowledge graphs")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None,
                       help="key=value file of flag defaults")
        p.add_argument("--data", required=True, help="dataset directory")

    p = sub.add_parser("learn", help="mine rule files per target predicate")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--targets", default=d("all"),
                   help="'all' or comma-separated predicate names")
    add_learn_flags(p, suppress)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("bench-eval",
                       help="time collective vs per-rule evaluation")
    common(p)
    p.add_argument("--rules", required=True,
                   help="rule file or learned rules directory")
    p.add_argument("--out", required=True, help="output TSV path")
    p.add_argument("--measure", default=d("smooth"),
                   choices=("standard", "smooth", "pca"))
    p.add_argument("--smoothing", default=d(5.0), type=float)
    p.add_argument("--grounding-cap", default=d(1_000_000), type=int)
    p.add_argument("--group-cap", default=d(200), type=int,
                   help="max rules timed per group")
    p.add_argument("--seed", default=d(0), type=int)
    p.set_defaults(func=cmd_bench_eval)

    p = sub.add_parser("analyze-overfit",
                       help="overfitting report and factor sweep")
    common(p)
    p.add_argument("--rules-dir", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--overfit-factor", default=d(0.1), type=float)
    p.add_argument("--overfit-cutoff", default=d(0.1), type=float)
    p.add_argument("--factors", default=d("0,0.05,0.1,0.2,0.4"),
                   help="comma-separated sweep factors")
    p.add_argument("--top-k", default=d("5,10,20,50,100"))
    p.add_argument("--grounding-cap", default=d(100_000), type=int)
    p.set_defaults(func=cmd_analyze_overfit)

    p = sub.add_parser("kgc", help="completion metrics with learned rules")
    common(p)
    p.add_argument("--rules-dir", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--targets", default=d("all"))
    p.add_argument("--validation", action="store_true",
                   default=d(False),
                   help="filter rules against the validation split first")
    p.add_argument("--overfit-factor", default=d(0.1), type=float)
    p.add_argument("--per-rule-cap", default=d(1000), type=int)
    p.add_argument("--per-query-ms", default=d(5000), type=int)
    p.add_argument("--grounding-cap", default=d(100_000), type=int)
    p.add_argument("--dump-queries", default=d(None),
                   help="write a per-query debug log to this path")
    p.set_defaults(func=cmd_kgc)

    p = sub.add_parser("resplit", help="re-cut a dataset (default 6:2:2)")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", default=d(0), type=int)
    p.add_argument("--ratio", default=d("6:2:2"))
    p.set_defaults(func=cmd_resplit)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--preset", default=d("tiny"),
                   choices=("tiny", "small", "bench"))
    p.add_argument("--seed", default=d(0), type=int)
    p.set_defaults(func=cmd_synth)

    return parser


# --- commands ----------------------------------------------------------------

def resolve_targets(kg, spec: str) -> list[int]:
    if spec == "all":
        return [p for p in range(kg.n_predicates) if kg.pairs(p)]
    ids = []
    for name in spec.split(","):
        name = name.strip()
        pid = kg.predicates.get(name)
        if pid is None:
            raise SystemExit(f"unknown target predicate {name!r}")
        ids.append(pid)
    return ids


def group_label(rule: Rule) -> str:
    return "closed" if rule.kind == CLOSED else f"len={len(rule)}"


def group_sort_key(label: str):
    return (0, 0) if label == "closed" else (1, int(label.split("=")[1]))


def cmd_learn(args) -> int:
    t0 = time.time()
    split = SplitSet.load(args.data)
    kg = split.train
    cfg = learn_config(args)
    targets = resolve_targets(kg, args.targets)
    log.info("learning %d target(s) with %d worker(s)", len(targets),
             args.workers)
    learned = learn_many(kg, targets, cfg, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    index = write_rules_dir(os.path.join(args.out, "rules"), learned, kg,
                            args.measure, args.smoothing)

    counts = {"all": {}, "high": {}, "extreme": {}}
    for rules in learned.values():
        for rule in rules:
            label = group_label(rule)
            counts["all"][label] = counts["all"].get(label, 0) + 1
            if is_high_quality(rule.stats, args.measure):
                counts["high"][label] = counts["high"].get(label, 0) + 1
            if is_extreme_quality(rule.stats, args.measure):
                counts["extreme"][label] = counts["extreme"].get(label, 0) + 1
    config_echo = {k: v for k, v in sorted(vars(args).items())
                   if k not in ("func", "command", "verbose", "quiet")}
    config_blob = json.dumps(config_echo, sort_keys=True).encode()
    manifest = {
        "version": __version__,
        "command": "learn",
        "config": config_echo,
        "config_sha256": hashlib.sha256(config_blob).hexdigest(),
        "seed": args.seed,
        "dataset": {
            "directory": os.path.abspath(args.data),
            "files": {f: file_sha256(os.path.join(args.data, f))
                      for f in ("train.txt", "valid.txt", "test.txt")
                      if os.path.exists(os.path.join(args.data, f))},
        },
        "wall_time_s": round(time.time() - t0, 3),
        "n_targets": len(targets),
        "rule_counts": counts,
        "rules_per_target": {kg.predicates.name(t): len(rs)
                             for t, rs in sorted(learned.items())},
    }
    with open(os.path.join(args.out, "manifest.json"), "w",
              encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    total = sum(len(r) for r in learned.values())
    print(f"learned {total} rules for {len(targets)} target(s) "
          f"-> {args.out}/rules ({len(index)} files)")
    return 0


def cmd_bench_eval(args) -> int:
    split = SplitSet.load(args.data)
    kg = split.train
    if os.path.isdir(args.rules):
        by_target, measure, smoothing = read_rules_dir(args.rules, kg)
        rules = [r for rs in by_target.values() for r in rs]
    else:
        rules, measure, smoothing = read_rule_file(args.rules, kg)
    if not rules:
        print("empty rule set; nothing to benchmark")
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("group\trules\ttemplates\tbaseline_s\tcollective_s"
                     "\tspeedup\n")
        return 0
    score_cfg = ScoreConfig(measure=args.measure, smoothing=args.smoothing,
                            conf_threshold=0, supp_threshold=0,
                            hc_threshold=0)
    groups: dict[str, list[Rule]] = {}
    for rule in rules:
        bucket = groups.setdefault(group_label(rule), [])
        if len(bucket) < args.group_cap:
            bucket.append(rule)

    lines = ["group\trules\ttemplates\tbaseline_s\tcollective_s\tspeedup"]
    for label in sorted(groups, key=group_sort_key):
        group = groups[label]
        by_template: dict = {}
        for rule in group:
            by_template.setdefault(rule.body_key, []).append(rule)

        t0 = time.perf_counter()
        baseline = {}
        for rule in group:
            baseline[id(rule)] = score_baseline(
                rule, kg, score_cfg, cap=args.grounding_cap,
                require_complete=True)
        baseline_s = time.perf_counter() - t0

        t0 = time.perf_counter()
        collective = {}
        for body_key, members in by_template.items():
            first = members[0]
            if first.kind == CLOSED:
                for rule in members:
                    gset = ground(kg, rule, args.grounding_cap)
                    collective[id(rule)] = CollectiveScorer(
                        rule, gset, kg, score_cfg).score(rule)
            else:
                template = Rule(OPEN, first.target, first.from_subject,
                                first.body)
                gset = ground(kg, template, args.grounding_cap)
                if gset.truncated:
                    raise SystemExit(
                        "template grounding truncated; raise --grounding-cap "
                        "for an exact benchmark")
                scorer = CollectiveScorer(template, gset, kg, score_cfg)
                for rule in members:
                    collective[id(rule)] = scorer.score(rule)
        collective_s = time.perf_counter() - t0

        for rule in group:
            a, b = collective[id(rule)], baseline[id(rule)]
            got = (a.support, a.body_groundings, a.pca_groundings)
            want = (b.support, b.body_groundings, b.pca_groundings)
            if got != want:
                raise SystemExit(
                    f"collective/baseline score mismatch on "
                    f"{format_rule(rule, kg)}: {got} != {want}")
        speedup = baseline_s / collective_s if collective_s > 0 else 0.0
        lines.append(f"{label}\t{len(group)}\t{len(by_template)}\t"
                     f"{baseline_s:.3f}\t{collective_s:.3f}\t{speedup:.2f}")
        log.info(lines[-1].replace("\t", "  "))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def cmd_analyze_overfit(args) -> int:
    split = SplitSet.load(args.data)
    kg = split.train
    by_target, measure, _smoothing = read_rules_dir(args.rules_dir, kg)
    rules = [r for rs in by_target.values() for r in rs]
    top_k = tuple(int(k) for k in str(args.top_k).split(","))
    cfg = OverfitConfig(overfit_factor=args.overfit_factor,
                        overfit_cutoff=args.overfit_cutoff, top_k=top_k,
                        grounding_cap=args.grounding_cap)
    os.makedirs(args.out, exist_ok=True)
    cache: dict = {}

    reports = [("no", overfit_report(rules, split, cfg, measure, cache))]
    if split.valid_triples:
        kept = validation_filter(rules, split, args.overfit_factor, measure,
                                 args.grounding_cap, cache)
        reports.append(("yes",
                        overfit_report(kept, split, cfg, measure, cache)))
    else:
        log.warning("no validation split; emitting only the unfiltered row")

    labels = sorted({t for _, rep in reports for t in rep.types},
                    key=group_sort_key)
    table = ["\t".join(reports[0][1].header(labels))]
    for flag, rep in reports:
        table.append("\t".join(rep.row(flag, labels)))
    with open(os.path.join(args.out, "overfit.tsv"), "w",
              encoding="utf-8") as fh:
        fh.write("\n".join(table) + "\n")

    topk_lines = ["k\tvalidation\tprecision\tquality"]
    for flag, rep in reports:
        for k in top_k:
            topk_lines.append(f"{k}\t{flag}\t{rep.precision_at[k]:.4f}\t"
                              f"{rep.quality_at[k]:.4f}")
    with open(os.path.join(args.out, "topk.tsv"), "w",
              encoding="utf-8") as fh:
        fh.write("\n".join(topk_lines) + "\n")

    factors = [float(x) for x in str(args.factors).split(",")]
    if split.valid_triples:
        rows = factor_sweep(rules, split, factors, cfg, measure, cache)
        with open(os.path.join(args.out, "factor_sweep.csv"), "w",
                  encoding="utf-8") as fh:
            fh.write("factor,rules_kept,orp_all,precision_at_50\n")
            for row in rows:
                fh.write(f"{row.factor},{row.n_kept},{row.orp_all:.4f},"
                         f"{row.precision_at_50:.4f}\n")
    print("\n".join(table))
    return 0


def cmd_kgc(args) -> int:
    split = SplitSet.load(args.data)
    kg = split.train
    targets = None if args.targets == "all" else [
        t.strip() for t in args.targets.split(",")]
    by_target, measure, _smoothing = read_rules_dir(args.rules_dir, kg,
                                                    targets)
    rules = [r for rs in by_target.values() for r in rs]
    if args.validation:
        if not split.valid_triples:
            raise SystemExit("--validation requires a valid.txt split")
        rules = validation_filter(rules, split, args.overfit_factor, measure,
                                  args.grounding_cap)
        log.info("validation filter kept %d rules", len(rules))
    cfg = KgcConfig(per_rule_cap=args.per_rule_cap,
                    per_query_ms=args.per_query_ms)
    os.makedirs(args.out, exist_ok=True)
    ctx = (open(args.dump_queries, "w", encoding="utf-8")
           if args.dump_queries else nullcontext())
    with ctx as dump:
        result = evaluate(split, rules, cfg, measure,
                          dump if args.dump_queries else None)
    table = result.to_tsv(kg)
    with open(os.path.join(args.out, "metrics.tsv"), "w",
              encoding="utf-8") as fh:
        fh.write(table)
    print(table, end="")
    if result.interrupted_queries:
        log.warning("%d queries hit the per-query time budget",
                    result.interrupted_queries)
    return 0


def cmd_resplit(args) -> int:
    ratio = tuple(int(x) for x in args.ratio.split(":"))
    if len(ratio) != 3:
        raise SystemExit("--ratio must look like 6:2:2")
    sizes = resplit(args.data, args.out, args.seed, ratio)
    print(" ".join(f"{k}={v}" for k, v in sizes.items()))
    return 0


PRESETS = {
    "tiny": dict(n_entities=300, n_predicates=6, n_train=2000, n_valid=150,
                 n_test=150, n_clusters=16),
    "small": dict(n_entities=5000, n_predicates=8, n_train=12_000,
                  n_valid=600, n_test=600, n_clusters=32),
    "bench": dict(n_entities=40_000, n_predicates=11, n_train=93_000,
                  n_valid=3000, n_test=3000, n_clusters=64),
}


def cmd_synth(args) -> int:
    split = benchmark_split(seed=args.seed, **PRESETS[args.preset])
    write_split(split, args.out)
    print(f"wrote {args.preset} dataset to {args.out} "
          f"({len(split.train.triples)} train / {len(split.valid_triples)} "
          f"valid / {len(split.test_triples)} test)")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        explicit = vars(build_parser(suppress=True).parse_args(argv))
        merged = vars(args).copy()
        for key, value in load_config_file(args.config).items():
            dest = key.replace("-", "_")
            if dest not in merged:
                log.warning("config key %s does not apply to %s; ignored",
                            key, args.command)
                continue
            merged[dest] = value
        merged.update(explicit)
        args = argparse.Namespace(**merged)
    level = (logging.DEBUG if args.verbose
             else logging.WARNING if args.quiet else logging.INFO)
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
