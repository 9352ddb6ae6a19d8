"""Input validation for the estimator-facing API."""

from __future__ import annotations


def check_triple_array(X, name: str = "X") -> list[tuple[str, str, str]]:
    """Coerce X to a list of (subject, predicate, object) string triples."""
    if hasattr(X, "to_numpy"):  # pandas
        X = X.to_numpy()
    try:
        rows = list(X)
    except TypeError:
        raise ValueError(f"{name} must be an iterable of triples") from None
    out = []
    for i, row in enumerate(rows):
        try:
            items = tuple(row)
        except TypeError:
            raise ValueError(
                f"{name}[{i}] is not a (subject, predicate, object) row")
        if len(items) != 3:
            raise ValueError(
                f"{name}[{i}] has {len(items)} fields, expected 3")
        out.append(tuple(str(v) for v in items))
    return out


def check_query_array(X, name: str = "X") -> list[tuple[str, str, str]]:
    """Like check_triple_array, but each row must have exactly one '?'."""
    rows = check_triple_array(X, name)
    for i, (s, p, o) in enumerate(rows):
        holes = (s == "?") + (o == "?")
        if p == "?" or holes != 1:
            raise ValueError(
                f"{name}[{i}] must leave exactly one of subject/object "
                f"as '?' with a concrete predicate")
    return rows
