import pytest

from pathrules.store import (FORWARD, REVERSE, Interner, KnowledgeGraph,
                             ParseError, SplitSet, Triple, load_triples,
                             write_dictionaries)

from conftest import CAPITAL_TRIPLES, make_split


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def test_load_single_line(tmp_path):
    path = write_lines(tmp_path / "train.txt", ["Beijing\tCapital_of\tChina"])
    entities, predicates = Interner(), Interner()
    ts = load_triples(path, "train", entities, predicates)
    assert len(ts.triples) == 1
    assert len(entities) == 2
    assert len(predicates) == 1
    assert ts.lines_read == 1
    assert ts.duplicates == 0


def test_load_empty_file(tmp_path):
    path = write_lines(tmp_path / "train.txt", [])
    entities, predicates = Interner(), Interner()
    ts = load_triples(path, "train", entities, predicates)
    assert ts.triples == []
    assert len(entities) == 0


def test_load_duplicate_line(tmp_path):
    path = write_lines(tmp_path / "train.txt",
                       ["a\tr\tb", "a\tr\tb", "a\tr\tc"])
    ts = load_triples(path, "train", Interner(), Interner())
    assert len(ts.triples) == 2
    assert ts.duplicates == 1


def test_load_malformed_line(tmp_path):
    path = write_lines(tmp_path / "train.txt", ["a\tr\tb", "a\tb"])
    with pytest.raises(ParseError, match=":2"):
        load_triples(path, "train", Interner(), Interner())


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_triples(tmp_path / "nope.txt", "train", Interner(), Interner())


def test_interning_round_trip(capital_kg):
    for interner in (capital_kg.entities, capital_kg.predicates):
        for i, name in enumerate(interner.names):
            assert interner.id(name) == i
            assert interner.name(i) == name


def test_neighbors_capital_fixture(capital_kg):
    ent = capital_kg.entities.id
    pred = capital_kg.predicates.id
    beijing = set(capital_kg.neighbors(ent("Beijing")))
    assert (pred("City_in"), FORWARD, ent("China")) in beijing
    assert (pred("Capital_of"), FORWARD, ent("China")) in beijing
    assert (pred("Is_a"), FORWARD, ent("Political Center")) in beijing
    china = set(capital_kg.neighbors(ent("China")))
    assert (pred("City_in"), REVERSE, ent("Beijing")) in china


def test_neighbors_isolated_entity():
    split = make_split(CAPITAL_TRIPLES, valid=[("Tokyo", "City_in", "Japan")])
    kg = split.train
    assert kg.neighbors(kg.entities.id("Tokyo")) == ()


def test_neighbors_unknown_id(capital_kg):
    with pytest.raises(KeyError):
        capital_kg.neighbors(999)


def test_degree_identity(chain_kg):
    for e in range(chain_kg.n_entities):
        out_deg = sum(len(v) for (s, _), v in chain_kg.out_index.items()
                      if s == e)
        in_deg = sum(len(v) for (o, _), v in chain_kg.in_index.items()
                     if o == e)
        assert len(chain_kg.neighbors(e)) == out_deg + in_deg


def test_indexes_are_inverse(chain_kg):
    forward = {(s, p, o) for (s, p), objs in chain_kg.out_index.items()
               for o in objs}
    backward = {(s, p, o) for (o, p), subs in chain_kg.in_index.items()
                for s in subs}
    assert forward == backward


def test_by_predicate_counts(chain_kg):
    for p, pairs in chain_kg.by_predicate.items():
        n = sum(1 for t in chain_kg.triples if t.p == p)
        assert len(pairs) == n


def test_contains_scopes():
    split = make_split([("a", "r", "b")], valid=[("a", "r", "c")],
                       test=[("a", "r", "d")])
    kg = split.train
    t_train = Triple(kg.entities.id("a"), kg.predicates.id("r"),
                     kg.entities.id("b"))
    t_test = Triple(kg.entities.id("a"), kg.predicates.id("r"),
                    kg.entities.id("d"))
    assert split.contains(t_train, "train")
    assert not split.contains(t_train, "test")
    assert split.contains(t_test, "test")
    for t in (t_train, t_test):
        expected = (split.contains(t, "train") or split.contains(t, "valid")
                    or split.contains(t, "test"))
        assert split.contains(t, "all") == expected


def test_deterministic_rebuild(tmp_path):
    lines = [f"e{i}\tr{i % 3}\te{(i * 7) % 11}" for i in range(40) if i % 11]
    write_lines(tmp_path / "train.txt", lines)
    first = SplitSet.load(tmp_path)
    second = SplitSet.load(tmp_path)
    assert first.train.entities.names == second.train.entities.names
    assert first.train.out_index == second.train.out_index
    assert first.train.in_index == second.train.in_index
    assert first.train.triples == second.train.triples


def test_cross_split_duplicates_dropped(tmp_path):
    write_lines(tmp_path / "train.txt", ["a\tr\tb"])
    write_lines(tmp_path / "valid.txt", ["a\tr\tb", "a\tr\tc"])
    write_lines(tmp_path / "test.txt", ["a\tr\tc", "a\tr\td"])
    split = SplitSet.load(tmp_path)
    assert split.cross_split_duplicates == 2
    assert len(split.valid_triples) == 1
    assert len(split.test_triples) == 1
    # pairwise disjoint
    train = set(split.train.triples)
    assert not train & set(split.valid_triples)
    assert not set(split.valid_triples) & set(split.test_triples)


def test_entities_only_in_valid_are_interned():
    split = make_split([("a", "r", "b")], valid=[("x", "r", "y")])
    assert "x" in split.train.entities
    assert not split.train.adj.get(split.train.entities.id("x"))


def test_write_dictionaries(tmp_path, capital_kg):
    write_dictionaries(capital_kg, tmp_path)
    lines = (tmp_path / "entities.dict").read_text().splitlines()
    assert lines[0].split("\t") == ["0", capital_kg.entities.name(0)]
    assert len(lines) == capital_kg.n_entities
