import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import brute_force_sp, random_network
from multiclosure.multigraph import MultiEdgeNetwork, from_edge_list, karate_club
from multiclosure.statistics import (
    StatisticMatrix,
    attribute_match,
    compute,
    degree_covariate,
    read_dense_csv,
    shared_partners_unweighted,
    shared_partners_weighted,
    variance_explained,
    write_dense_csv,
    write_long_tsv,
)

SP_TABLE = np.array([[0, 2, 1, 1], [2, 0, 1, 1], [1, 1, 0, 2], [1, 1, 2, 0]])
WSP_TABLE = np.array([[0, 9, 4, 8], [9, 0, 6, 5], [4, 6, 0, 9], [8, 5, 9, 0]])


def test_unweighted_example(example):
    np.testing.assert_array_equal(shared_partners_unweighted(example).values, SP_TABLE)


def test_weighted_example(example):
    w = shared_partners_weighted(example)
    assert w.values[0, 2] == 4  # min(v(a,b), v(c,b)) = min(10, 4)
    np.testing.assert_array_equal(w.values, WSP_TABLE)


def test_star():
    net = from_edge_list([("h", "x"), ("h", "y"), ("h", "z")])
    sp = shared_partners_unweighted(net).values
    assert sp[1, 2] == sp[1, 3] == sp[2, 3] == 1
    assert not sp[0].any()


def test_oracle_random():
    rng = np.random.default_rng(11)
    for _ in range(25):
        net = random_network(rng, 6)
        np.testing.assert_array_equal(shared_partners_unweighted(net).values, brute_force_sp(net.counts, False))
        np.testing.assert_array_equal(shared_partners_weighted(net).values, brute_force_sp(net.counts, True))


def test_binary_counts_agree():
    rng = np.random.default_rng(3)
    net = random_network(rng, 7, max_count=1)
    np.testing.assert_array_equal(shared_partners_weighted(net).values, shared_partners_unweighted(net).values)


def test_attribute_match():
    net = MultiEdgeNetwork.from_matrix(np.zeros((4, 4), int), list("abcd"), {"faction": ["1", "1", "2", "2"]})
    m = attribute_match(net, "faction").values
    assert m[0, 1] == m[2, 3] == 1
    assert m[0, 2] == m[0, 3] == m[1, 2] == m[1, 3] == 0
    same = MultiEdgeNetwork.from_matrix(np.zeros((3, 3), int), attributes={"c": ["x"] * 3})
    assert (attribute_match(same, "c").values == 1 - np.eye(3)).all()
    with pytest.raises(KeyError, match="unknown attribute"):
        attribute_match(net, "class")


def test_karate_faction_matrix():
    net = karate_club()
    m = attribute_match(net, "faction").values
    f = np.array(net.attributes["faction"])
    assert (m == ((f[:, None] == f[None, :]) & ~np.eye(34, dtype=bool))).all()


def test_degree_covariate(example):
    d = degree_covariate(example).values
    assert d[0, 1] == 43
    assert not degree_covariate(from_edge_list([], nodes="abc")).values.any()
    ring = from_edge_list([("a", "b", 2), ("b", "c", 2), ("c", "a", 2)])
    assert (degree_covariate(ring).values == 8 * (1 - np.eye(3))).all()


def test_variance_explained(example):
    assert variance_explained(example, shared_partners_unweighted(example)) == pytest.approx(0.0126, abs=1e-4)
    assert variance_explained(example, shared_partners_weighted(example)) == pytest.approx(0.0414, abs=1e-4)
    same = StatisticMatrix(example.counts)
    assert variance_explained(example, same) == pytest.approx(1.0)
    flat = StatisticMatrix(1 - np.eye(4, dtype=int))
    assert variance_explained(example, flat) == 0.0


def test_variance_explained_matches_lstsq():
    rng = np.random.default_rng(5)
    net = random_network(rng, 8)
    stat = shared_partners_weighted(net)
    y = net.upper().astype(float)
    x = net.upper(stat.values).astype(float)
    design = np.column_stack([np.ones_like(x), x])
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    r2 = 1 - resid @ resid / ((y - y.mean()) @ (y - y.mean()))
    assert variance_explained(net, stat) == pytest.approx(r2)


def test_compute_names(example):
    assert compute(example, "weighted_sp").kind.value == "weighted_sp"
    with pytest.raises(KeyError):
        compute(example, "triangles")
    with pytest.raises(KeyError):
        compute(example, "match:")


def test_exports(tmp_path, example):
    w = shared_partners_weighted(example)
    write_dense_csv(w, example.labels, tmp_path / "w.csv")
    labels, values = read_dense_csv(tmp_path / "w.csv")
    assert labels == list("abcd")
    np.testing.assert_array_equal(values, WSP_TABLE)
    write_long_tsv(w, example.labels, tmp_path / "w.tsv")
    lines = (tmp_path / "w.tsv").read_text().splitlines()
    assert lines[0] == "node_i\tnode_j\tvalue"
    assert lines[1] == "a\tb\t9"
    assert len(lines) == 7


def test_log_scale():
    w = StatisticMatrix(np.array([[0, 9], [9, 0]]), "weighted_sp")
    assert w.log_scale()[0, 1] == pytest.approx(np.log(10))
    m = StatisticMatrix(np.array([[0, 1], [1, 0]]), "attribute_match")
    assert m.log_scale()[0, 1] == 1.0


# --- properties ---------------------------------------------------------------

count_matrices = st.integers(3, 7).flatmap(
    lambda n: arrays(np.int64, (n, n), elements=st.integers(0, 5))
).map(lambda a: np.triu(a, 1) + np.triu(a, 1).T)


@settings(max_examples=150, deadline=None)
@given(count_matrices)
def test_property_oracle(counts):
    net = MultiEdgeNetwork.from_matrix(counts)
    np.testing.assert_array_equal(shared_partners_unweighted(net).values, brute_force_sp(counts, False))
    np.testing.assert_array_equal(shared_partners_weighted(net).values, brute_force_sp(counts, True))


@settings(max_examples=100, deadline=None)
@given(count_matrices, st.data())
def test_property_focal_independence(counts, data):
    n = len(counts)
    a = data.draw(st.integers(0, n - 1))
    b = data.draw(st.integers(0, n - 1).filter(lambda x: x != a))
    value = data.draw(st.integers(0, 50))
    changed = counts.copy()
    changed[a, b] = changed[b, a] = value
    for f in (shared_partners_unweighted, shared_partners_weighted):
        before = f(MultiEdgeNetwork.from_matrix(counts)).values[a, b]
        after = f(MultiEdgeNetwork.from_matrix(changed)).values[a, b]
        assert before == after


@settings(max_examples=100, deadline=None)
@given(count_matrices, st.data())
def test_property_monotone(counts, data):
    n = len(counts)
    i = data.draw(st.integers(0, n - 1))
    j = data.draw(st.integers(0, n - 1).filter(lambda x: x != i))
    bumped = counts.copy()
    bumped[i, j] += 1
    bumped[j, i] += 1
    before = shared_partners_weighted(MultiEdgeNetwork.from_matrix(counts)).values
    after = shared_partners_weighted(MultiEdgeNetwork.from_matrix(bumped)).values
    assert (after >= before).all()


@settings(max_examples=100, deadline=None)
@given(count_matrices)
def test_property_weighted_dominates(counts):
    net = MultiEdgeNetwork.from_matrix(counts)
    w = shared_partners_weighted(net).values
    u = shared_partners_unweighted(net).values
    assert (w >= u).all()
    assert (u <= net.n - 2).all()
    assert (w <= (net.n - 2) * max(1, counts.max())).all()
    if counts.max() <= 1:
        assert (w == u).all()
