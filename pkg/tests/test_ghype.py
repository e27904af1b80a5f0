import itertools
import json
import math

import numpy as np
import pytest

from multiclosure import ghype
from multiclosure.ghype import (
    GhypeModel,
    build_xi_configuration,
    build_xi_mean_degree,
    log_likelihood,
    log_likelihood_multinomial,
    omega,
)
from multiclosure.mle import UnidentifiedError
from multiclosure.multigraph import MultiEdgeNetwork, NetworkInputError, from_edge_list
from multiclosure.statistics import StatisticMatrix, shared_partners_weighted
from multiclosure.synth import GeneratorSpec, generate


def sym(n, entries):
    """Symmetric n x n matrix from {(i, j): value} with i < j."""
    out = np.zeros((n, n))
    for (i, j), v in entries.items():
        out[i, j] = out[j, i] = v
    return out


def urn_sequence_probability(xi, om, outcome):
    """Exact P(outcome) of a sequential weighted urn by summing over all draw orders."""
    total = 0.0
    for order in set(itertools.permutations([d for d, c in enumerate(outcome) for _ in range(c)])):
        taken = [0] * len(xi)
        p = 1.0
        for d in order:
            weights = [(xi[k] - taken[k]) * om[k] for k in range(len(xi))]
            p *= weights[d] / sum(weights)
            taken[d] += 1
        total += p
    return total


def three_dyad_model(xi, om):
    """Nodes 0, 1, 2 with dyads (0,1), (0,2), (1,2) carrying the given Xi / Omega."""
    pairs = [(0, 1), (0, 2), (1, 2)]
    x = sym(3, {p: math.log(o) for p, o in zip(pairs, om)})
    return GhypeModel(sym(3, dict(zip(pairs, xi))), [("logom", x)], [1.0])


def three_dyad_network(outcome):
    return MultiEdgeNetwork.from_matrix(sym(3, dict(zip([(0, 1), (0, 2), (1, 2)], outcome))).astype(int))


# --- Xi and Omega ---------------------------------------------------------------

def test_xi_configuration(example):
    xi = build_xi_configuration(example)
    assert xi[0, 1] == 21 * 22 == 462
    assert np.allclose(np.diag(xi), 0)
    two = from_edge_list([("u", "v", 5)])
    assert build_xi_configuration(two)[0, 1] == 25
    tri = from_edge_list([("a", "b"), ("b", "c"), ("a", "c")])
    assert (build_xi_configuration(tri) == 4 * (1 - np.eye(3))).all()
    with pytest.raises(NetworkInputError):
        build_xi_configuration(from_edge_list([], nodes="ab"))


def test_xi_isolates_excluded():
    net = from_edge_list([("a", "b", 2), ("b", "c", 1)], nodes=["d"])
    xi = build_xi_configuration(net)
    assert not xi[3].any()


def test_xi_mean_degree(example):
    xi = build_xi_mean_degree(example)
    assert xi[0, 1] == pytest.approx(16.5**2) == 272.25
    assert (np.diag(xi) == 0).all()
    assert build_xi_mean_degree(from_edge_list([("u", "v", 4)]))[0, 1] == 16
    ring = from_edge_list([("a", "b", 3), ("b", "c", 3), ("c", "a", 3)])
    np.testing.assert_allclose(build_xi_mean_degree(ring), build_xi_configuration(ring))
    with pytest.raises(NetworkInputError):
        build_xi_mean_degree(from_edge_list([], nodes="ab"))


def test_omega(example):
    w = shared_partners_weighted(example)
    model = GhypeModel.from_network(example, [w])
    assert (omega(model) == 1).all()
    om = omega(model.with_theta([1.0]))
    assert om[0, 1] == pytest.approx(10) and om[2, 3] == pytest.approx(10)
    match = StatisticMatrix(sym(4, {(0, 1): 1, (2, 3): 1}).astype(int), "attribute_match")
    om = omega(GhypeModel.from_network(example, [match], theta=[0.7]))
    assert om[0, 1] == pytest.approx(math.exp(0.7))
    assert om[0, 2] == pytest.approx(1.0)


def test_omega_rejects_nonfinite():
    x = sym(3, {(0, 1): np.inf})
    with pytest.raises(ValueError):
        omega(GhypeModel(np.ones((3, 3)) - np.eye(3), [("x", x)], [1.0]))


# --- exact likelihood -------------------------------------------------------------

def test_two_identical_urns():
    model = GhypeModel(sym(3, {(0, 1): 1, (0, 2): 1}))
    net = MultiEdgeNetwork.from_matrix(sym(3, {(0, 1): 1}).astype(int))
    assert log_likelihood(model, net) == pytest.approx(math.log(0.5), abs=1e-10)


def test_theta_zero_equals_null(example):
    covs = [shared_partners_weighted(example)]
    with_cov = GhypeModel.from_network(example, covs)
    null = GhypeModel.from_network(example)
    assert log_likelihood(with_cov, example) == log_likelihood(null, example)


@pytest.mark.parametrize("outcome", [(3, 0, 0), (2, 1, 0), (1, 1, 1), (0, 2, 1), (0, 0, 3), (1, 0, 2)])
def test_matches_exact_sequential_urn(outcome):
    xi, om = (4, 4, 4), (2.0, 1.0, 1.0)
    expected = urn_sequence_probability(xi, om, outcome)
    got = math.exp(log_likelihood(three_dyad_model(xi, om), three_dyad_network(outcome)))
    assert got == pytest.approx(expected, rel=1e-7)


@pytest.mark.parametrize("seed", range(6))
def test_normalisation_small_instances(seed):
    rng = np.random.default_rng(seed)
    xi = tuple(int(v) for v in rng.integers(1, 5, size=3))
    om = tuple(float(v) for v in rng.uniform(0.2, 5.0, size=3))
    model = three_dyad_model(xi, om)
    m = int(rng.integers(1, min(4, sum(xi)) + 1))
    total = 0.0
    for outcome in itertools.product(*(range(x + 1) for x in xi)):
        if sum(outcome) == m:
            total += math.exp(log_likelihood(model, three_dyad_network(outcome)))
    assert sum(xi) <= 12
    assert total == pytest.approx(1.0, abs=1e-6)


def test_all_dyads_saturated():
    model = GhypeModel(sym(3, {(0, 1): 2, (0, 2): 1, (1, 2): 1}))
    net = MultiEdgeNetwork.from_matrix(sym(3, {(0, 1): 2, (0, 2): 1, (1, 2): 1}).astype(int))
    assert log_likelihood(model, net) == pytest.approx(0.0, abs=1e-12)


def test_edges_outside_sampling_space_rejected():
    model = GhypeModel(sym(3, {(0, 1): 2}))
    net = MultiEdgeNetwork.from_matrix(sym(3, {(0, 2): 1}).astype(int))
    with pytest.raises(NetworkInputError):
        log_likelihood(model, net)


def test_scale_invariance_of_omega(example):
    w = shared_partners_weighted(example)
    const = StatisticMatrix(1 - np.eye(4, dtype=int), "attribute_match", "const")
    base = GhypeModel.from_network(example, [w], theta=[0.4])
    scaled = GhypeModel.from_network(example, [w, const], theta=[0.4, 2.5])
    assert log_likelihood(scaled, example) == pytest.approx(log_likelihood(base, example), rel=1e-9)
    assert log_likelihood_multinomial(scaled, example) == pytest.approx(
        log_likelihood_multinomial(base, example), rel=1e-12)


# --- multinomial approximation ---------------------------------------------------

def test_multinomial_two_dyads():
    model = GhypeModel(sym(3, {(0, 1): 5, (0, 2): 5}))
    net = MultiEdgeNetwork.from_matrix(sym(3, {(0, 1): 1}).astype(int))
    assert log_likelihood_multinomial(model, net) == pytest.approx(math.log(0.5))


def test_multinomial_null_proportions(example):
    from scipy.stats import multinomial

    model = GhypeModel.from_network(example)
    xi = example.upper(model.xi)
    a = example.upper()
    expected = multinomial.logpmf(a, example.m, xi / xi.sum())
    assert log_likelihood_multinomial(model, example) == pytest.approx(expected)


def test_exact_vs_multinomial_large_xi():
    rng = np.random.default_rng(2)
    counts = np.triu(rng.integers(0, 6, size=(5, 5)), 1)
    net = MultiEdgeNetwork.from_matrix(counts + counts.T)
    xi = build_xi_configuration(net) * 100
    x = np.triu(rng.uniform(0, 2, size=(5, 5)), 1)
    x = x + x.T
    for theta in (-0.8, 0.5, 1.2):
        exact = [log_likelihood(GhypeModel(xi, [("x", x)], [t]), net) for t in (theta, 0.0)]
        approx = [log_likelihood_multinomial(GhypeModel(xi, [("x", x)], [t]), net) for t in (theta, 0.0)]
        d_exact, d_approx = exact[0] - exact[1], approx[0] - approx[1]
        assert d_approx == pytest.approx(d_exact, rel=0.01)


def _fd_check(loglik, theta, h=1e-5):
    g = np.array([(loglik(theta + h * e) - loglik(theta - h * e)) / (2 * h) for e in np.eye(len(theta))])
    return g


@pytest.mark.parametrize("mode", ["exact", "multinomial"])
def test_gradient_matches_finite_differences(mode):
    rng = np.random.default_rng(9)
    net = generate(GeneratorSpec("triangles", n=12, m=120, n_tri=6, seed=4))
    covs = [shared_partners_weighted(net)]
    x2 = np.triu(rng.uniform(0, 1, size=(12, 12)), 1)
    covs.append(StatisticMatrix(x2 + x2.T, name="noise"))
    model = GhypeModel.from_network(net, covs)
    d = ghype._Dyads.build(model, net)
    terms = ghype._exact_terms if mode == "exact" else ghype._multinomial_terms
    theta = rng.uniform(-0.5, 0.8, size=2)
    _, grad = terms(d, theta, want_grad=True)
    fd = _fd_check(lambda t: terms(d, t, want_grad=False)[0], theta)
    np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-7)


# --- fitting -----------------------------------------------------------------------

def test_constant_covariate_rejected(example):
    const = StatisticMatrix(3 * (1 - np.eye(4, dtype=int)), "weighted_sp")
    with pytest.raises(UnidentifiedError):
        ghype.fit(example, [const])


def test_requires_covariates(example):
    with pytest.raises(ValueError):
        ghype.fit(example, [])


def test_parameter_recovery_multinomial():
    rng = np.random.default_rng(42)
    n = 20
    x = np.triu(rng.uniform(0, 2, size=(n, n)), 1)
    x = x + x.T
    iu = np.triu_indices(n, 1)
    p = np.exp(0.8 * x[iu])
    draws = rng.multinomial(100_000, p / p.sum())
    counts = np.zeros((n, n), dtype=np.int64)
    counts[iu] = draws
    net = MultiEdgeNetwork.from_matrix(counts + counts.T)
    res = ghype.fit(net, [StatisticMatrix(x, name="x")], degree_corrected=False, likelihood="multinomial")
    assert res.converged
    assert abs(res.theta_hat[0] - 0.8) < 3 * res.std_err[0]


def test_fit_triangles_weighted_closure():
    net = generate(GeneratorSpec("triangles", seed=1))
    res = ghype.fit(net, [shared_partners_weighted(net)], degree_corrected=False)
    assert 0.88 <= res.theta_hat[0] <= 1.55
    assert res.p_value[0] < 0.001
    assert res.likelihood_mode == "exact"


def test_fit_improves_on_null(example):
    res = ghype.fit(example, [shared_partners_weighted(example)])
    assert res.log_lik >= res.null_log_lik
    assert res.null_aic == pytest.approx(-2 * res.null_log_lik)
    assert res.aic == pytest.approx(2 - 2 * res.log_lik)
    assert (res.aic < res.null_aic) == (res.log_lik - res.null_log_lik > 1)


def test_null_equivalence_in_fit(example):
    res = ghype.fit(example, [shared_partners_weighted(example)])
    null = log_likelihood(GhypeModel.from_network(example), example)
    assert res.null_log_lik == pytest.approx(null, rel=1e-12)


def test_auto_mode_switches_on_size():
    assert ghype.choose_mode(2000) == "exact"
    assert ghype.choose_mode(2001) == "multinomial"
    assert ghype.choose_mode(10, "multinomial") == "multinomial"
    with pytest.raises(ValueError):
        ghype.choose_mode(10, "poisson")


def test_fit_json_shape(example):
    res = ghype.fit(example, [shared_partners_weighted(example)])
    d = json.loads(res.to_json())
    assert set(d) >= {"coefficients", "log_lik", "aic", "null_aic", "likelihood_mode", "iterations", "converged"}
    row = d["coefficients"][0]
    assert set(row) == {"name", "estimate", "std_err", "p_value", "stars"}
    assert d["model"] == "ghype"


def test_large_network_multinomial_is_fast():
    import time

    net = generate(GeneratorSpec("mixed", n=327, m=190_000, n_tri=2000, seed=3))
    group = [str(i % 9) for i in range(net.n)]
    net = net.with_attributes({"class": group})
    from multiclosure.statistics import attribute_match

    t0 = time.perf_counter()
    res = ghype.fit(net, [shared_partners_weighted(net), attribute_match(net, "class")])
    assert res.likelihood_mode == "multinomial"
    assert time.perf_counter() - t0 < 120
