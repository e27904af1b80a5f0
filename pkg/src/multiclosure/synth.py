"""Seeded synthetic multi-edge networks and a replication harness.

Randomness comes from numpy's PCG64 bit generator (``numpy.random.default_rng``),
whose streams are platform independent for a given 64-bit seed.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import statistics as pystats
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations
from pathlib import Path

import numpy as np

from . import ghype
from .mle import FitError
from .multigraph import MultiEdgeNetwork
from .statistics import shared_partners_unweighted, shared_partners_weighted

log = logging.getLogger(__name__)

KINDS = ("random_complete", "triangles", "mixed")
SIGNIFICANCE = 0.001


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int = 34
    m: int = 1000
    n_tri: int = 26
    seed: int = 0
    complete_baseline: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GeneratorError(f"unknown generator kind {self.kind!r}")
        if self.n < 3:
            raise GeneratorError("n must be at least 3")
        if self.m < 1:
            raise GeneratorError("m must be at least 1")
        if self.kind != "random_complete" and self.n_tri < 1:
            raise GeneratorError("n_tri must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise GeneratorError("seed must be an unsigned 64-bit integer")

    def with_seed(self, seed: int) -> "GeneratorSpec":
        return replace(self, seed=seed % 2**64)


def _labels(n: int) -> list[str]:
    return [str(i) for i in range(1, n + 1)]


def _allocate(counts: np.ndarray, dyads: np.ndarray, extra: int, rng: np.random.Generator) -> None:
    """Add ``extra`` edges i.i.d. uniformly over the given (i, j) dyad rows."""
    picks = rng.integers(0, len(dyads), size=extra)
    add = np.bincount(picks, minlength=len(dyads))
    counts[dyads[:, 0], dyads[:, 1]] += add
    counts[dyads[:, 1], dyads[:, 0]] += add


def random_complete(n: int, m: int, rng: np.random.Generator, baseline: bool = False) -> np.ndarray:
    """``m`` edges placed i.i.d. uniformly over all dyads.

    With ``baseline`` every dyad first receives one edge (binary density 1)
    and only the remaining ``m - n(n-1)/2`` edges are placed at random.
    """
    dyads = np.array(list(combinations(range(n), 2)))
    counts = np.zeros((n, n), dtype=np.int64)
    if baseline:
        if m < len(dyads):
            raise GeneratorError(f"a complete baseline needs m >= {len(dyads)} for n = {n}, got {m}")
        counts[dyads[:, 0], dyads[:, 1]] = 1
        counts[dyads[:, 1], dyads[:, 0]] = 1
        m -= len(dyads)
    _allocate(counts, dyads, m, rng)
    return counts


def sample_triangles(n: int, n_tri: int, rng: np.random.Generator) -> list[tuple[int, int, int]]:
    """``n_tri`` distinct node triples, uniformly at random (triples may share nodes)."""
    if n_tri > math.comb(n, 3):
        raise GeneratorError(f"only {math.comb(n, 3)} distinct triangles exist on {n} nodes")
    chosen: dict[tuple[int, int, int], None] = {}
    while len(chosen) < n_tri:
        tri = tuple(sorted(int(v) for v in rng.choice(n, size=3, replace=False)))
        chosen.setdefault(tri, None)
    return list(chosen)


def triangles(n: int, m: int, n_tri: int, rng: np.random.Generator) -> tuple[np.ndarray, list]:
    tris = sample_triangles(n, n_tri, rng)
    allowed = sorted({pair for t in tris for pair in combinations(t, 2)})
    dyads = np.array(allowed)
    if m < len(dyads):
        raise GeneratorError(f"triangles need m >= {len(dyads)} to realise every sampled triangle, got {m}")
    counts = np.zeros((n, n), dtype=np.int64)
    counts[dyads[:, 0], dyads[:, 1]] = 1
    counts[dyads[:, 1], dyads[:, 0]] = 1
    _allocate(counts, dyads, m - len(dyads), rng)
    return counts, tris


def generate(spec: GeneratorSpec) -> MultiEdgeNetwork:
    if spec.kind == "random_complete":
        counts = random_complete(spec.n, spec.m, np.random.default_rng(spec.seed), spec.complete_baseline)
    elif spec.kind == "triangles":
        counts, _ = triangles(spec.n, spec.m, spec.n_tri, np.random.default_rng(spec.seed))
    else:
        half = spec.m // 2
        counts = random_complete(spec.n, half, np.random.default_rng(spec.seed), spec.complete_baseline)
        tri, _ = triangles(spec.n, spec.m - half, spec.n_tri, np.random.default_rng((spec.seed + 1) % 2**64))
        counts = counts + tri
    return MultiEdgeNetwork.from_matrix(counts, _labels(spec.n))


# --- replication ------------------------------------------------------------

COVARIATES = {
    "weighted_sp": shared_partners_weighted,
    "unweighted_sp": shared_partners_unweighted,
}


@dataclass
class ReplicationSummary:
    spec: GeneratorSpec
    covariate: str
    coefficients: dict[int, float]
    std_errors: dict[int, float]
    p_values: dict[int, float]
    failures: dict[int, str] = field(default_factory=dict)

    @property
    def values(self) -> list[float]:
        return [self.coefficients[k] for k in sorted(self.coefficients)]

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def min(self) -> float:
        return float(np.min(self.values))

    @property
    def max(self) -> float:
        return float(np.max(self.values))

    @property
    def sd(self) -> float:
        vals = self.values
        return float(pystats.stdev(vals)) if len(vals) > 1 else 0.0

    @property
    def significant_fraction(self) -> float:
        ps = [self.p_values[k] for k in sorted(self.p_values)]
        return float(np.mean([p < SIGNIFICANCE for p in ps]))

    def to_dict(self) -> dict:
        return {
            "spec": {
                "kind": self.spec.kind, "n": self.spec.n, "m": self.spec.m,
                "n_tri": self.spec.n_tri, "seed": self.spec.seed,
                "complete_baseline": self.spec.complete_baseline,
            },
            "covariate": self.covariate,
            "replications": len(self.coefficients) + len(self.failures),
            "failures": len(self.failures),
            "mean": self.mean,
            "min": self.min,
            "max": self.max,
            "sd": self.sd,
            "significant_fraction": self.significant_fraction,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def write_tsv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(["replication", "seed", "coefficient", "std_err", "p_value"])
            for r in sorted(self.coefficients):
                w.writerow([r, (self.spec.seed + r) % 2**64, repr(self.coefficients[r]),
                            repr(self.std_errors[r]), repr(self.p_values[r])])


def _one(args):
    spec, r, covariate, degree_corrected, likelihood = args
    net = generate(spec.with_seed(spec.seed + r))
    stat = COVARIATES[covariate](net)
    try:
        res = ghype.fit(net, [stat], degree_corrected=degree_corrected, likelihood=likelihood)
    except (FitError, ValueError) as exc:
        return r, None, f"{type(exc).__name__}: {exc}"
    return r, (float(res.theta_hat[0]), float(res.std_err[0]), float(res.p_value[0])), None


def replicate(spec: GeneratorSpec, reps: int, covariate: str = "weighted_sp", degree_corrected: bool = True,
              likelihood: str = "auto", threads: int = 1) -> ReplicationSummary:
    """Fit the closure coefficient on ``reps`` fresh networks seeded spec.seed + 1 .. spec.seed + reps."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if covariate not in COVARIATES:
        raise ValueError(f"unknown closure covariate {covariate!r}")
    jobs = [(spec, r, covariate, degree_corrected, likelihood) for r in range(1, reps + 1)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_one, jobs, chunksize=max(1, reps // (4 * threads))))
    else:
        results = [_one(j) for j in jobs]
    coefs, ses, ps, failures = {}, {}, {}, {}
    for r, est, err in results:
        if est is None:
            failures[r] = err
            log.warning("replication %d failed: %s", r, err)
            continue
        coefs[r], ses[r], ps[r] = est
    if len(failures) > 0.1 * reps:
        raise FitError(f"{len(failures)} of {reps} replications failed; first: {next(iter(failures.values()))}")
    return ReplicationSummary(spec, covariate, coefs, ses, ps, failures)
