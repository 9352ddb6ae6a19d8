import json
import os

import pytest

from pathrules.cli import main
from pathrules.rulefiles import read_rule_file, read_rules_dir
from pathrules.store import SplitSet

FAST = ["--saturation", "0.7", "--batch-size", "200", "--paths-per-call",
        "20", "--max-len", "2", "--max-car-len", "2",
        "--max-instantiated-len", "2", "--supp-threshold", "2",
        "--conf-threshold", "0.02", "--max-rules", "3000",
        "--gen-time-ms", "3000", "--target-time-ms", "20000"]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "tiny"
    assert main(["synth", "--out", str(out), "--preset", "tiny",
                 "--seed", "5"]) == 0
    return out


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory, dataset):
    out = tmp_path_factory.mktemp("run")
    code = main(["learn", "--data", str(dataset), "--out", str(out),
                 "--seed", "3"] + FAST)
    assert code == 0
    return out


def read_all_rule_files(run_dir):
    rules_dir = run_dir / "rules"
    return {f: (rules_dir / f).read_bytes()
            for f in sorted(os.listdir(rules_dir))}


def test_learn_outputs(run_dir, dataset):
    rules_dir = run_dir / "rules"
    assert (rules_dir / "index.tsv").exists()
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["seed"] == 3
    assert manifest["rule_counts"]["all"]
    assert "train.txt" in manifest["dataset"]["files"]
    assert manifest["config_sha256"]
    split = SplitSet.load(dataset)
    loaded, measure, smoothing = read_rules_dir(rules_dir, split.train)
    assert measure == "smooth"
    assert sum(len(r) for r in loaded.values()) > 0


def test_learn_deterministic(tmp_path, dataset, run_dir):
    again = tmp_path / "again"
    assert main(["learn", "--data", str(dataset), "--out", str(again),
                 "--seed", "3"] + FAST) == 0
    assert read_all_rule_files(run_dir) == read_all_rule_files(again)


def test_learn_differs_across_seeds(tmp_path, dataset, run_dir):
    other = tmp_path / "other"
    assert main(["learn", "--data", str(dataset), "--out", str(other),
                 "--seed", "99"] + FAST) == 0
    # not byte-identical in general; just make sure files were written
    assert read_all_rule_files(other)


def test_learn_single_target(tmp_path, dataset):
    out = tmp_path / "one"
    assert main(["learn", "--data", str(dataset), "--out", str(out),
                 "--targets", "r00", "--seed", "1"] + FAST) == 0
    split = SplitSet.load(dataset)
    loaded, _, _ = read_rules_dir(out / "rules", split.train)
    assert list(loaded) == [split.train.predicates.id("r00")]


def test_learn_unknown_target(tmp_path, dataset):
    with pytest.raises(SystemExit):
        main(["learn", "--data", str(dataset), "--out", str(tmp_path / "x"),
              "--targets", "nope"] + FAST)


def test_round_trip_rule_file(run_dir, dataset):
    split = SplitSet.load(dataset)
    rules_dir = run_dir / "rules"
    index = [l.split("\t") for l in
             (rules_dir / "index.tsv").read_text().splitlines()]
    fname = index[0][1]
    rules, measure, smoothing = read_rule_file(rules_dir / fname, split.train)
    assert measure == "smooth" and smoothing == 5.0
    for rule in rules[:10]:
        assert rule.stats.support >= 1


def test_kgc_command(tmp_path, dataset, run_dir):
    out = tmp_path / "kgc"
    dump = tmp_path / "queries.log"
    code = main(["kgc", "--data", str(dataset), "--rules-dir",
                 str(run_dir / "rules"), "--out", str(out),
                 "--dump-queries", str(dump), "--per-query-ms", "2000"])
    assert code == 0
    lines = (out / "metrics.tsv").read_text().splitlines()
    assert lines[0].split("\t") == ["predicate", "queries", "mrr", "hits@1",
                                    "hits@3", "hits@10"]
    overall = lines[-1].split("\t")
    assert overall[0] == "<all>"
    mrr = float(overall[2])
    assert 0.0 <= mrr <= 1.0
    assert dump.exists()


def test_kgc_missing_rules(tmp_path, dataset):
    code = main(["kgc", "--data", str(dataset), "--rules-dir",
                 str(tmp_path / "absent"), "--out", str(tmp_path / "out")])
    assert code == 1


def test_kgc_missing_target_listed(tmp_path, dataset, run_dir, capsys):
    code = main(["kgc", "--data", str(dataset), "--rules-dir",
                 str(run_dir / "rules"), "--out", str(tmp_path / "out"),
                 "--targets", "r00,ghost"])
    assert code == 1
    assert "ghost" in capsys.readouterr().err


def test_analyze_overfit_command(tmp_path, dataset, run_dir):
    out = tmp_path / "overfit"
    code = main(["analyze-overfit", "--data", str(dataset), "--rules-dir",
                 str(run_dir / "rules"), "--out", str(out),
                 "--factors", "0,0.1"])
    assert code == 0
    table = (out / "overfit.tsv").read_text().splitlines()
    assert table[0].startswith("measure\tvalidation\trules\torp_all")
    assert [row.split("\t")[1] for row in table[1:]] == ["no", "yes"]
    sweep = (out / "factor_sweep.csv").read_text().splitlines()
    assert sweep[0] == "factor,rules_kept,orp_all,precision_at_50"
    assert len(sweep) == 3
    topk = (out / "topk.tsv").read_text().splitlines()
    assert topk[0] == "k\tvalidation\tprecision\tquality"


def test_bench_eval_command(tmp_path, dataset, run_dir):
    out = tmp_path / "bench.tsv"
    code = main(["bench-eval", "--data", str(dataset), "--rules",
                 str(run_dir / "rules"), "--out", str(out),
                 "--group-cap", "40"])
    assert code == 0
    lines = (out).read_text().splitlines()
    assert lines[0] == "group\trules\ttemplates\tbaseline_s\tcollective_s\tspeedup"
    assert len(lines) > 1


def test_resplit_command(tmp_path, dataset):
    out = tmp_path / "resplit"
    assert main(["resplit", "--data", str(dataset), "--out", str(out),
                 "--seed", "7"]) == 0
    split = SplitSet.load(out)
    n_train = len(split.train.triples)
    n_valid = len(split.valid_triples)
    n_test = len(split.test_triples)
    total = n_train + n_valid + n_test
    assert abs(n_train - total * 0.6) <= 2
    assert abs(n_valid - total * 0.2) <= 2
    again = tmp_path / "resplit2"
    assert main(["resplit", "--data", str(dataset), "--out", str(again),
                 "--seed", "7"]) == 0
    assert (out / "train.txt").read_bytes() == \
        (again / "train.txt").read_bytes()


def test_config_file_precedence(tmp_path, dataset):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed=11\nmax-len=2\nsupp-threshold=2\n"
                   "conf-threshold=0.02\nmax-rules=2000\n"
                   "saturation=0.7\nbatch-size=200\npaths-per-call=20\n"
                   "gen-time-ms=3000\nmax-car-len=2\n"
                   "max-instantiated-len=2\n")
    out1 = tmp_path / "from_config"
    assert main(["learn", "--data", str(dataset), "--out", str(out1),
                 "--config", str(cfg)]) == 0
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["seed"] == 11
    assert manifest["config"]["max_len"] == 2
    # explicit flag beats the file
    out2 = tmp_path / "flag_wins"
    assert main(["learn", "--data", str(dataset), "--out", str(out2),
                 "--config", str(cfg), "--seed", "12"]) == 0
    manifest2 = json.loads((out2 / "manifest.json").read_text())
    assert manifest2["seed"] == 12
