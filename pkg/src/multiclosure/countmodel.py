"""Dyad-independent count ERGM with a Poisson reference measure.

Each dyad count is independent with

    P(A = a) = lambda^a / a! * exp(theta_nz * 1[a > 0]) / Z,
    Z = 1 + exp(theta_nz) * (exp(lambda) - 1),
    log lambda = theta_sum + sum_r theta_r * x_r.

``theta_nz`` is the ``nonzero`` term (zero modification), ``theta_sum`` the
``sum`` term. Covariates enter on their raw scale.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from . import mle
from .mle import FitResult, UnidentifiedError
from .multigraph import MultiEdgeNetwork
from .statistics import StatisticMatrix

MODEL_TAG = "count-poisson"


def _log_expm1(lam):
    lam = np.asarray(lam, dtype=float)
    return np.where(lam > 30, lam + np.log1p(-np.exp(-np.minimum(lam, 700))), np.log(np.expm1(np.maximum(lam, 1e-300))))


def log_normalizer(lam, theta_nonzero):
    return np.logaddexp(0.0, theta_nonzero + _log_expm1(lam))


def dyad_log_pmf(a, lam, theta_nonzero: float = 0.0):
    """log P(A = a) for one or many dyads."""
    lam = np.asarray(lam, dtype=float)
    if not np.isfinite(lam).all() or (lam <= 0).any():
        raise ValueError("lambda must be positive and finite")
    a = np.asarray(a, dtype=float)
    return a * np.log(lam) - gammaln(a + 1) + theta_nonzero * (a > 0) - log_normalizer(lam, theta_nonzero)


def expected_count(lam, theta_nonzero: float = 0.0):
    lam = np.asarray(lam, dtype=float)
    return lam * np.exp(theta_nonzero + lam - log_normalizer(lam, theta_nonzero))


@dataclass(eq=False)
class CountModel:
    covariates: list[tuple[str, np.ndarray]] = field(default_factory=list)
    include_nonzero: bool = False
    theta_sum: float = 0.0
    theta_nonzero: float = 0.0
    theta_cov: np.ndarray | None = None

    def __post_init__(self):
        self.covariates = [(name, np.asarray(x, dtype=float)) for name, x in self.covariates]
        if self.theta_cov is None:
            self.theta_cov = np.zeros(len(self.covariates))
        self.theta_cov = np.asarray(self.theta_cov, dtype=float).reshape(-1)

    @classmethod
    def from_stats(cls, covariates: Sequence[StatisticMatrix], include_nonzero=False, **theta) -> "CountModel":
        return cls([(c.name, c.values) for c in covariates], include_nonzero, **theta)

    def rates(self, n: int) -> np.ndarray:
        """Upper-triangle rates lambda_ij in dyad order."""
        iu = np.triu_indices(n, k=1)
        eta = np.full(len(iu[0]), self.theta_sum)
        for t, (_, x) in zip(self.theta_cov, self.covariates):
            eta = eta + t * x[iu]
        return np.exp(eta)

    def log_likelihood(self, net: MultiEdgeNetwork) -> float:
        tnz = self.theta_nonzero if self.include_nonzero else 0.0
        return float(np.sum(dyad_log_pmf(net.upper(), self.rates(net.n), tnz)))

    def simulate(self, n: int, rng: np.random.Generator, labels=None) -> MultiEdgeNetwork:
        """Draw a network: zero with probability 1/Z, otherwise zero-truncated Poisson."""
        lam = self.rates(n)
        tnz = self.theta_nonzero if self.include_nonzero else 0.0
        p_zero = np.exp(-log_normalizer(lam, tnz))
        nonzero = rng.random(lam.size) >= p_zero
        draws = np.zeros(lam.size, dtype=np.int64)
        todo = np.flatnonzero(nonzero)
        # rejection sampling of the zero-truncated Poisson
        while todo.size:
            trial = rng.poisson(lam[todo])
            ok = trial > 0
            draws[todo[ok]] = trial[ok]
            todo = todo[~ok]
        counts = np.zeros((n, n), dtype=np.int64)
        counts[np.triu_indices(n, k=1)] = draws
        counts = counts + counts.T
        return MultiEdgeNetwork.from_matrix(counts, labels)


def _design(net: MultiEdgeNetwork, covariates: Sequence[StatisticMatrix]) -> np.ndarray:
    iu = np.triu_indices(net.n, k=1)
    cols = [np.ones(len(iu[0]))] + [np.asarray(c.values, dtype=float)[iu] for c in covariates]
    return np.column_stack(cols)


def _loglik_grad(theta, a, x, nonzero: str):
    """Log-likelihood and gradient for parameters (sum, [nonzero], covariates...).

    ``nonzero`` is "off", "free", or "truncated" (theta_nz at +infinity).
    """
    if nonzero == "free":
        beta = np.concatenate(([theta[0]], theta[2:]))
        tnz = theta[1]
    else:
        beta, tnz = theta, 0.0
    eta = x @ beta
    lam = np.exp(eta)
    pos = a > 0
    if nonzero == "truncated":
        logz = _log_expm1(lam)
        ll = float(np.sum(a * eta - gammaln(a + 1) - logz))
        d_eta = a - lam * np.exp(lam - logz)
        return ll, x.T @ d_eta
    logz = log_normalizer(lam, tnz)
    ll = float(np.sum(a * eta - gammaln(a + 1) + tnz * pos - logz))
    d_eta = a - lam * np.exp(tnz + lam - logz)
    g_beta = x.T @ d_eta
    if nonzero == "off":
        return ll, g_beta
    d_nz = float(np.sum(pos - (1.0 - np.exp(-logz))))
    return ll, np.concatenate(([g_beta[0], d_nz], g_beta[1:]))


def fit(net: MultiEdgeNetwork, covariates: Sequence[StatisticMatrix] = (), include_nonzero: bool = False) -> FitResult:
    """Exact MLE for the dyad-independent count model (no MCMC needed)."""
    a = net.upper().astype(float)
    if a.size == 0 or a.sum() == 0:
        raise UnidentifiedError("all dyads are empty; the sum term diverges")
    x = _design(net, covariates)
    names = ["sum"] + (["nonzero"] if include_nonzero else []) + [c.name for c in covariates]
    for c, col in zip(covariates, x[:, 1:].T):
        if np.ptp(col) == 0:
            raise UnidentifiedError(f"covariate {c.name!r} is constant across dyads")

    nonzero = "off"
    if include_nonzero:
        nonzero = "truncated" if (a > 0).all() else "free"

    def ll_grad(theta):
        return _loglik_grad(theta, a, x, nonzero)

    k_free = x.shape[1] + (1 if nonzero == "free" else 0)
    theta, ll, nit, converged, _ = mle.maximize(ll_grad, np.zeros(k_free))
    hess = mle.numerical_hessian(lambda t: ll_grad(t)[1], theta)
    free_names = names if nonzero != "truncated" else [n for n in names if n != "nonzero"]
    se, p, unidentified = mle.wald(theta, hess, free_names)
    if nonzero == "truncated":
        # every dyad is nonzero: theta_nz sits at +infinity
        theta = np.insert(theta, 1, np.inf)
        se = np.insert(se, 1, np.nan)
        p = np.insert(p, 1, np.nan)
        unidentified = ["nonzero"] + unidentified

    null_ll = float(np.sum(dyad_log_pmf(a, np.ones_like(a), 0.0)))
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
        model=MODEL_TAG,
        likelihood_mode="exact",
        unidentified=unidentified,
    )


def model_from_fit(result: FitResult, covariates: Sequence[StatisticMatrix]) -> CountModel:
    names = result.names
    include_nonzero = "nonzero" in names
    tnz = result.coefficient("nonzero") if include_nonzero else 0.0
    cov = [result.coefficient(c.name) for c in covariates]
    return CountModel.from_stats(covariates, include_nonzero, theta_sum=result.coefficient("sum"),
                                 theta_nonzero=tnz, theta_cov=cov)
