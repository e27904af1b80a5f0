"""Shared maximum-likelihood machinery: quasi-Newton ascent, numerical
observed information, Wald tests and the serialisable fit result."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize, stats

MAX_ITER = 500
GTOL = 1e-6
FTOL_REL = 1e-10


class FitError(RuntimeError):
    """Optimisation failed (non-convergence, degenerate model)."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class UnidentifiedError(FitError):
    """A coefficient has no contrast in the data and cannot be estimated."""


def stars(p: float) -> str:
    if p is None or not math.isfinite(p):
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    if p < 0.1:
        return "."
    return ""


@dataclass
class FitResult:
    names: list[str]
    theta_hat: np.ndarray
    std_err: np.ndarray
    p_value: np.ndarray
    log_lik: float
    aic: float
    null_log_lik: float
    null_aic: float
    converged: bool
    iterations: int
    model: str = "ghype"
    likelihood_mode: str = "exact"
    unidentified: list[str] = field(default_factory=list)

    def coefficient(self, name: str) -> float:
        return float(self.theta_hat[self.names.index(name)])

    def row(self, name: str) -> dict:
        i = self.names.index(name)
        return {
            "name": name,
            "estimate": float(self.theta_hat[i]),
            "std_err": float(self.std_err[i]),
            "p_value": float(self.p_value[i]),
            "stars": stars(float(self.p_value[i])),
        }

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "likelihood_mode": self.likelihood_mode,
            "coefficients": [self.row(n) for n in self.names],
            "log_lik": float(self.log_lik),
            "aic": float(self.aic),
            "null_log_lik": float(self.null_log_lik),
            "null_aic": float(self.null_aic),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "unidentified": list(self.unidentified),
        }

    def to_json(self) -> str:
        # NaN is not valid JSON; unidentified standard errors serialise as null
        def clean(obj):
            if isinstance(obj, float) and not math.isfinite(obj):
                return None
            if isinstance(obj, dict):
                return {k: clean(v) for k, v in obj.items()}
            if isinstance(obj, list):
                return [clean(v) for v in obj]
            return obj

        return json.dumps(clean(self.to_dict()), indent=2, sort_keys=False) + "\n"

    def table(self) -> str:
        lines = [f"{'term':<18}{'estimate':>12}{'':<4}{'std.err':>10}{'p':>12}"]
        for n in self.names:
            r = self.row(n)
            lines.append(
                f"{n:<18}{r['estimate']:>12.4f}{r['stars']:<4}{r['std_err']:>10.4f}{r['p_value']:>12.4g}"
            )
        lines.append(f"{'log-lik':<18}{self.log_lik:>12.2f}")
        lines.append(f"{'AIC':<18}{self.aic:>12.2f}")
        lines.append(f"{'null AIC':<18}{self.null_aic:>12.2f}")
        lines.append(f"likelihood: {self.likelihood_mode}; iterations: {self.iterations}; converged: {self.converged}")
        return "\n".join(lines)


def maximize(loglik_grad: Callable[[np.ndarray], tuple[float, np.ndarray]], x0) -> tuple[np.ndarray, float, int, bool, list]:
    """BFGS ascent on ``loglik_grad`` (returning value and gradient).

    Converged when the gradient max-norm drops below ``GTOL`` or the relative
    change of the log-likelihood between iterations falls below ``FTOL_REL``.
    """
    trace: list[tuple[int, float, float]] = []

    cache: dict[bytes, tuple[float, np.ndarray]] = {}

    def evaluate(theta):
        key = np.asarray(theta, dtype=float).tobytes()
        if key not in cache:
            cache.clear()
            ll, g = loglik_grad(theta)
            cache[key] = (float(ll), np.asarray(g, dtype=float))
        return cache[key]

    def neg(theta):
        ll, g = evaluate(theta)
        if not math.isfinite(ll):
            return np.inf, np.zeros_like(theta)
        return -ll, -np.asarray(g, dtype=float)

    def callback(intermediate_result):
        ll, g = evaluate(intermediate_result.x)
        trace.append((len(trace) + 1, float(ll), float(np.max(np.abs(g))) if len(g) else 0.0))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = optimize.minimize(
            neg,
            np.asarray(x0, dtype=float),
            jac=True,
            method="BFGS",
            callback=callback,
            options={"gtol": GTOL, "maxiter": MAX_ITER, "norm": np.inf},
        )
    ll = -float(res.fun)
    gmax = float(np.max(np.abs(res.jac))) if res.jac.size else 0.0
    converged = gmax < GTOL
    if not converged and len(trace) >= 2:
        prev, last = trace[-2][1], trace[-1][1]
        converged = abs(last - prev) <= FTOL_REL * max(1.0, abs(last))
    if not converged and res.nit < MAX_ITER and res.status == 2:
        # line search stalled: accept when the gradient is tiny relative to the objective scale
        converged = gmax <= 1e-6 * max(1.0, abs(ll))
    if not converged:
        raise FitError(
            f"optimiser did not converge after {res.nit} iterations ({res.message}); |grad|max={gmax:.3g}",
            trace,
        )
    return np.asarray(res.x, dtype=float), ll, int(res.nit), True, trace


def numerical_hessian(grad: Callable[[np.ndarray], np.ndarray], theta: np.ndarray) -> np.ndarray:
    """Central differences of the gradient with step 1e-4 * (1 + |theta|)."""
    theta = np.asarray(theta, dtype=float)
    k = theta.size
    h = np.empty((k, k))
    for r in range(k):
        step = 1e-4 * (1.0 + abs(theta[r]))
        up, down = theta.copy(), theta.copy()
        up[r] += step
        down[r] -= step
        h[:, r] = (np.asarray(grad(up)) - np.asarray(grad(down))) / (2 * step)
    return 0.5 * (h + h.T)


def wald(theta: np.ndarray, hessian: np.ndarray, names: list[str]) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Standard errors and two-sided normal p-values from the observed information.

    Coefficients loading on a non-positive eigen-direction of the information
    get NaN and are reported as unidentified.
    """
    info = -np.asarray(hessian, dtype=float)
    k = theta.size
    se = np.full(k, np.nan)
    unidentified: list[str] = []
    if k == 0:
        return se, se.copy(), unidentified
    evals, evecs = np.linalg.eigh(info)
    scale = max(1.0, float(np.max(np.abs(evals))))
    bad = evals <= 1e-10 * scale
    if bad.any():
        load = np.abs(evecs[:, bad]).max(axis=1)
        flagged = load > 1e-3
        unidentified = [n for n, f in zip(names, flagged) if f]
        good = ~flagged
        if good.any():
            sub = info[np.ix_(good, good)]
            cov = np.linalg.inv(sub)
            se[good] = np.sqrt(np.clip(np.diag(cov), 0, None))
    else:
        cov = evecs @ np.diag(1.0 / evals) @ evecs.T
        se = np.sqrt(np.diag(cov))
    with np.errstate(invalid="ignore", divide="ignore"):
        z = theta / se
    p = 2 * stats.norm.sf(np.abs(z))
    return se, p, unidentified


def aic(log_lik: float, n_params: int) -> float:
    return 2.0 * n_params - 2.0 * log_lik


def result_to_plain(result: FitResult) -> dict:
    d = asdict(result)
    for key in ("theta_hat", "std_err", "p_value"):
        d[key] = [float(v) for v in d[key]]
    return d
