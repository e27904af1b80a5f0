"""Generalized hypergeometric ensembles of multi-edge networks.

A network with ``m`` edges is an ordered-free draw of ``m`` balls from an urn
in which dyad ``(i, j)`` owns ``Xi[i, j]`` balls of weight ``Omega[i, j]``
(multivariate Wallenius distribution). ``Xi`` carries the degree structure,
``Omega = exp(sum_r theta_r * x_r)`` the covariate propensities. Undirected
networks use each unordered dyad once.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln

from . import mle
from .mle import FitError, FitResult, UnidentifiedError
from .multigraph import MultiEdgeNetwork, NetworkInputError
from .statistics import StatisticMatrix

EXACT_MAX_DYADS = 2000
QUAD_EPSREL = 1e-8


class DegenerateModelError(FitError):
    pass


class QuadratureError(FitError):
    pass


def build_xi_configuration(net: MultiEdgeNetwork) -> np.ndarray:
    """Xi_ij = k_i * k_j; dyads touching a degree-0 node get 0 and drop out."""
    k = net.counts.sum(axis=1).astype(float)
    if np.count_nonzero(k) < 2:
        raise NetworkInputError("configuration Xi needs at least two nodes with positive degree")
    xi = np.outer(k, k)
    np.fill_diagonal(xi, 0.0)
    return xi


def build_xi_mean_degree(net: MultiEdgeNetwork) -> np.ndarray:
    """Xi_ij = <k>^2 everywhere off the diagonal (no degree correction)."""
    if net.m == 0:
        raise NetworkInputError("mean-degree Xi needs at least one edge")
    mean_k = net.counts.sum() / net.n
    xi = np.full((net.n, net.n), float(mean_k) ** 2)
    np.fill_diagonal(xi, 0.0)
    return xi


def build_xi(net: MultiEdgeNetwork, degree_corrected: bool = True) -> np.ndarray:
    return build_xi_configuration(net) if degree_corrected else build_xi_mean_degree(net)


@dataclass(eq=False)
class GhypeModel:
    xi: np.ndarray
    covariates: list[tuple[str, np.ndarray]] = field(default_factory=list)
    theta: np.ndarray | None = None
    degree_corrected: bool = True

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        if not np.allclose(self.xi, self.xi.T):
            raise ValueError("Xi must be symmetric")
        if (self.xi < 0).any():
            raise ValueError("Xi must be nonnegative")
        self.covariates = [(name, np.asarray(x, dtype=float)) for name, x in self.covariates]
        for name, x in self.covariates:
            if x.shape != self.xi.shape:
                raise ValueError(f"covariate {name!r} has shape {x.shape}, expected {self.xi.shape}")
        if self.theta is None:
            self.theta = np.zeros(len(self.covariates))
        self.theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if self.theta.size != len(self.covariates):
            raise ValueError("one coefficient per covariate required")

    @classmethod
    def from_network(cls, net: MultiEdgeNetwork, covariates: Sequence[StatisticMatrix] = (),
                     theta=None, degree_corrected: bool = True) -> "GhypeModel":
        return cls(
            build_xi(net, degree_corrected),
            [(c.name, c.log_scale()) for c in covariates],
            theta,
            degree_corrected,
        )

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.covariates]

    def with_theta(self, theta) -> "GhypeModel":
        return GhypeModel(self.xi, self.covariates, theta, self.degree_corrected)


def omega(model: GhypeModel) -> np.ndarray:
    """Propensity matrix exp(sum_r theta_r x_r), computed in log space."""
    log_om = np.zeros_like(model.xi)
    for t, (name, x) in zip(model.theta, model.covariates):
        if not np.isfinite(x).all():
            raise ValueError(f"covariate {name!r} has non-finite entries")
        log_om = log_om + t * x
    with np.errstate(over="raise"):
        try:
            return np.exp(log_om)
        except FloatingPointError:
            raise FloatingPointError("Omega overflows; coefficients are too large") from None


# --- dyad-level layout ------------------------------------------------------

@dataclass(frozen=True)
class _Dyads:
    """Upper-triangle dyads with Xi > 0, flattened to vectors."""

    xi: np.ndarray
    counts: np.ndarray
    x: np.ndarray  # (n_dyads, n_covariates)

    @classmethod
    def build(cls, model: GhypeModel, net: MultiEdgeNetwork) -> "_Dyads":
        if net.counts.shape != model.xi.shape:
            raise ValueError("network and model sizes differ")
        iu = np.triu_indices(net.n, k=1)
        xi = model.xi[iu]
        keep = xi > 0
        counts = net.counts[iu].astype(float)
        if (counts[~keep] > 0).any():
            raise NetworkInputError("edges on dyads outside the sampling space (Xi = 0)")
        x = np.column_stack([c[iu][keep] for _, c in model.covariates]) if model.covariates else np.zeros((int(keep.sum()), 0))
        return cls(xi[keep], counts[keep], x)

    def log_omega(self, theta) -> np.ndarray:
        return self.x @ np.asarray(theta, dtype=float)


def _log_binomials(xi: np.ndarray, a: np.ndarray) -> float:
    xi_int = np.ceil(xi - 1e-9)
    if (a > xi_int).any():
        raise NetworkInputError("a dyad holds more edges than its Xi allows")
    return float(np.sum(gammaln(xi_int + 1) - gammaln(a + 1) - gammaln(xi_int - a + 1)))


def _psi(v, w, a):
    """log of the integrand after z = exp(-e^v); includes the Jacobian e^v."""
    u = np.exp(v)
    return v - u + float(np.sum(a * np.log(-np.expm1(-u * w))))


def _psi_slope(v, w, a):
    u = np.exp(v)
    y = u * w
    return 1.0 - u + float(np.sum(a * _ratio(y)))


def _ratio(y):
    """y / (e^y - 1), equal to 1 at y = 0."""
    y = np.asarray(y, dtype=float)
    out = np.ones_like(y)
    nz = y > 1e-300
    out[nz] = y[nz] / np.expm1(y[nz])
    return out


def _log_integral(w: np.ndarray, a: np.ndarray, xdev: np.ndarray | None = None):
    """log of int_0^1 prod (1 - z^w)^a dz and, optionally, its gradient.

    ``xdev`` holds d w_d / d theta_r divided by w_d (one column per
    coefficient); the gradient is the integrand-weighted mean of
    sum_d a_d * g(u w_d) * xdev_dr with g(y) = y / (e^y - 1).
    """
    pos = a > 0
    w, a = w[pos], a[pos]
    xd = xdev[pos] if xdev is not None else None
    m = float(a.sum())
    k = 0 if xd is None else xd.shape[1]
    if m == 0:
        return 0.0, np.zeros(k)

    # psi is concave in v; its maximum lies in u in [1, 1 + m]
    lo, hi = 0.0, math.log1p(m)
    if _psi_slope(hi, w, a) >= 0:
        hi += 1.0
    v_star = optimize.brentq(_psi_slope, lo, hi, args=(w, a), xtol=1e-12, rtol=1e-12)
    peak = _psi(v_star, w, a)
    u = math.exp(v_star)
    curv = u + float(np.sum(a * _curv_term(u * w)))
    sigma = 1.0 / math.sqrt(max(curv, 1e-12))

    def scaled(v):
        return math.exp(_psi(v, w, a) - peak)

    left, right = v_star - 8 * sigma, v_star + 8 * sigma
    while scaled(left) > 1e-30:
        left -= 8 * sigma
    while scaled(right) > 1e-30:
        right += 8 * sigma

    def integrand(v):
        u = math.exp(v)
        val = math.exp(_psi(v, w, a) - peak)
        if k == 0:
            return np.array([val])
        g = (a * _ratio(u * w)) @ xd
        return np.concatenate(([val], val * g))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res, err = integrate.quad_vec(integrand, left, v_star, epsrel=QUAD_EPSREL, epsabs=0, norm="max", limit=400)
        res2, err2 = integrate.quad_vec(integrand, v_star, right, epsrel=QUAD_EPSREL, epsabs=0, norm="max", limit=400)
    total = res + res2
    if not np.isfinite(total).all() or total[0] <= 0:
        raise QuadratureError(f"quadrature failed: value={total[0]!r} at peak v={v_star:.4g}, sigma={sigma:.3g}")
    if (err + err2) > 1e-6 * max(abs(total).max(), 1e-300):
        raise QuadratureError(f"quadrature error estimate {err + err2:.3g} too large for value {total[0]:.6g}")
    return peak + math.log(total[0]), total[1:] / total[0]


def _curv_term(y):
    """Per-edge curvature contribution -y g'(y) of psi, with g(y) = y / (e^y - 1)."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    nz = y > 1e-12
    e = np.expm1(y[nz])
    out[nz] = -y[nz] * (e - y[nz] * (e + 1)) / e**2
    out[~nz] = y[~nz] / 2
    return out


def _exact_terms(d: _Dyads, theta, want_grad: bool):
    log_om = d.log_omega(theta)
    om = np.exp(log_om - log_om.max())  # Omega / S is scale-free; rescale for stability
    free = d.xi - d.counts
    s = float(np.sum(om * free))
    if s <= 0:
        if (free > 1e-9).any():
            raise DegenerateModelError("S_Omega vanishes with unsaturated dyads")
        return 0.0, np.zeros(d.x.shape[1])
    w = om / s
    xdev = None
    if want_grad and d.x.shape[1]:
        xbar = (om * free) @ d.x / s
        xdev = d.x - xbar
    return _log_integral(w, d.counts, xdev)


def log_likelihood(model: GhypeModel, net: MultiEdgeNetwork) -> float:
    """Exact log-probability of ``net`` under the Wallenius urn model."""
    d = _Dyads.build(model, net)
    li, _ = _exact_terms(d, model.theta, want_grad=False)
    return _log_binomials(d.xi, d.counts) + li


def log_likelihood_multinomial(model: GhypeModel, net: MultiEdgeNetwork) -> float:
    """Multinomial (large-Xi) approximation with cell probabilities ~ Xi * Omega."""
    d = _Dyads.build(model, net)
    ll, _ = _multinomial_terms(d, model.theta, want_grad=False)
    return ll


def _multinomial_terms(d: _Dyads, theta, want_grad: bool):
    m = float(d.counts.sum())
    if m <= 0:
        raise NetworkInputError("multinomial likelihood needs at least one edge")
    with np.errstate(divide="ignore"):
        logw = np.log(d.xi) + d.log_omega(theta)
    top = logw.max()
    logz = top + math.log(float(np.sum(np.exp(logw - top))))
    logp = logw - logz
    coef = gammaln(m + 1) - float(np.sum(gammaln(d.counts + 1)))
    pos = d.counts > 0
    if np.isneginf(logp[pos]).any():
        return -np.inf, np.zeros(d.x.shape[1])
    ll = coef + float(np.sum(d.counts[pos] * logp[pos]))
    grad = np.zeros(d.x.shape[1])
    if want_grad and d.x.shape[1]:
        p = np.exp(logp)
        grad = d.counts @ d.x - m * (p @ d.x)
    return ll, grad


def choose_mode(n_dyads: int, likelihood: str = "auto") -> str:
    if likelihood == "auto":
        return "exact" if n_dyads <= EXACT_MAX_DYADS else "multinomial"
    if likelihood not in ("exact", "multinomial"):
        raise ValueError(f"unknown likelihood mode {likelihood!r}")
    return likelihood


def fit(net: MultiEdgeNetwork, covariates: Sequence[StatisticMatrix], degree_corrected: bool = True,
        likelihood: str = "auto") -> FitResult:
    """Maximum-likelihood estimate of the covariate coefficients, starting from the null model."""
    if not covariates:
        raise ValueError("at least one covariate is required")
    if net.m == 0:
        raise NetworkInputError("cannot fit a network without edges")
    model = GhypeModel.from_network(net, covariates, degree_corrected=degree_corrected)
    d = _Dyads.build(model, net)
    names = model.names
    for r, name in enumerate(names):
        col = d.x[:, r]
        if np.ptp(col) == 0:
            raise UnidentifiedError(f"covariate {name!r} is constant over the sampling space")
    mode = choose_mode(len(d.xi), likelihood)
    binom = _log_binomials(d.xi, d.counts) if mode == "exact" else 0.0

    def loglik_grad(theta):
        if mode == "exact":
            li, g = _exact_terms(d, theta, want_grad=True)
            return binom + li, g
        return _multinomial_terms(d, theta, want_grad=True)

    def grad(theta):
        return loglik_grad(theta)[1]

    theta0 = np.zeros(len(names))
    null_ll = loglik_grad(theta0)[0]
    theta, ll, nit, converged, _ = mle.maximize(loglik_grad, theta0)
    hess = mle.numerical_hessian(grad, theta)
    se, p, unidentified = mle.wald(theta, hess, names)
    return FitResult(
        names=names,
        theta_hat=theta,
        std_err=se,
        p_value=p,
        log_lik=ll,
        aic=mle.aic(ll, len(names)),
        null_log_lik=null_ll,
        null_aic=mle.aic(null_ll, 0),
        converged=converged,
        iterations=nit,
        model="ghype" if degree_corrected else "ghype-meandeg",
        likelihood_mode=mode,
        unidentified=unidentified,
    )
