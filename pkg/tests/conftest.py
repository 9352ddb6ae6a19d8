import pytest

from pathrules.store import SplitSet


def make_split(train, valid=(), test=()):
    return SplitSet.from_arrays(train, valid, test)


CAPITAL_TRIPLES = [
    ("Beijing", "Capital_of", "China"),
    ("Beijing", "City_in", "China"),
    ("Beijing", "Is_a", "Political Center"),
]

# A two-hop chain fixture with three target instances and exactly three
# groundings of the template  rt(X,Y) <- r1(Y,V0), r2(V0,V1).
CHAIN_JOIN_TRIPLES = [
    ("e0", "rt", "e1"),
    ("e0", "rt", "e2"),
    ("e1", "rt", "e3"),
    ("e1", "r1", "e2"),
    ("e2", "r1", "e6"),
    ("e3", "r1", "e7"),
    ("e2", "r2", "e4"),
    ("e6", "r2", "e3"),
    ("e7", "r2", "e5"),
]


@pytest.fixture
def capital_split():
    return make_split(CAPITAL_TRIPLES)


@pytest.fixture
def capital_kg(capital_split):
    return capital_split.train


@pytest.fixture
def chain_split():
    return make_split(CHAIN_JOIN_TRIPLES)


@pytest.fixture
def chain_kg(chain_split):
    return chain_split.train
