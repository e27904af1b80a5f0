"""Dyad-level change statistics.

All matrices here are symmetric with a zero diagonal, and none of the
shared-partner values depend on the focal dyad's own edge count.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .multigraph import MultiEdgeNetwork, NetworkInputError


class StatKind(str, enum.Enum):
    UNWEIGHTED_SP = "unweighted_sp"
    WEIGHTED_SP = "weighted_sp"
    ATTRIBUTE_MATCH = "attribute_match"
    DEGREE_COVARIATE = "degree_covariate"
    CUSTOM = "custom"


# count-valued kinds enter log-linear models through log(1 + h)
COUNT_KINDS = frozenset({StatKind.UNWEIGHTED_SP, StatKind.WEIGHTED_SP, StatKind.DEGREE_COVARIATE})


@dataclass(frozen=True, eq=False)
class StatisticMatrix:
    values: np.ndarray
    kind: StatKind = StatKind.CUSTOM
    name: str = ""

    def __post_init__(self):
        values = np.array(self.values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("statistic matrix must be square")
        if not np.array_equal(values, values.T):
            raise ValueError("statistic matrix must be symmetric")
        if np.diagonal(values).any():
            raise ValueError("statistic matrix must have a zero diagonal")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", StatKind(self.kind))
        if not self.name:
            object.__setattr__(self, "name", self.kind.value)

    def log_scale(self) -> np.ndarray:
        """Covariate used inside exp(theta * x): log(1 + h) for counts, the raw value otherwise."""
        if self.kind in COUNT_KINDS:
            return np.log1p(self.values.astype(float))
        return self.values.astype(float)

    def renamed(self, name: str) -> "StatisticMatrix":
        return StatisticMatrix(self.values, self.kind, name)


def _two_path_mask(counts: np.ndarray) -> np.ndarray:
    return counts > 0


def shared_partners_unweighted(net: MultiEdgeNetwork) -> StatisticMatrix:
    """Number of common neighbours of every dyad."""
    if net.n < 2:
        raise NetworkInputError("shared partners need at least two nodes")
    b = _two_path_mask(net.counts).astype(np.int64)
    sp = b @ b
    np.fill_diagonal(sp, 0)
    return StatisticMatrix(sp, StatKind.UNWEIGHTED_SP)


def shared_partners_weighted(net: MultiEdgeNetwork) -> StatisticMatrix:
    """Sum over common neighbours i of min(v(a, i), v(b, i)).

    Works one intermediate node at a time, so memory stays O(n^2). The diagonal
    of ``counts`` is zero, which removes i == a and i == b from the sum for free.
    """
    if net.n < 2:
        raise NetworkInputError("shared partners need at least two nodes")
    c = net.counts
    out = np.zeros_like(c)
    for i in range(net.n):
        col = c[:, i]
        out += np.minimum.outer(col, col)
    np.fill_diagonal(out, 0)
    return StatisticMatrix(out, StatKind.WEIGHTED_SP)


def attribute_match(net: MultiEdgeNetwork, attr: str) -> StatisticMatrix:
    if attr not in net.attributes:
        known = ", ".join(sorted(net.attributes)) or "none"
        raise KeyError(f"unknown attribute {attr!r} (known: {known})")
    values = np.asarray(net.attributes[attr], dtype=object)
    match = (values[:, None] == values[None, :]).astype(np.int64)
    np.fill_diagonal(match, 0)
    return StatisticMatrix(match, StatKind.ATTRIBUTE_MATCH, f"match:{attr}")


def degree_covariate(net: MultiEdgeNetwork) -> StatisticMatrix:
    """k_i + k_j for every dyad (multi-edge degrees)."""
    if net.n < 2:
        raise NetworkInputError("degree covariate needs at least two nodes")
    k = net.counts.sum(axis=1)
    out = k[:, None] + k[None, :]
    np.fill_diagonal(out, 0)
    return StatisticMatrix(out, StatKind.DEGREE_COVARIATE, "degree")


def variance_explained(net: MultiEdgeNetwork, stat: StatisticMatrix) -> float:
    """R^2 of the OLS fit counts ~ 1 + stat over the upper triangle."""
    if net.n < 3:
        raise NetworkInputError("variance explained needs at least three dyads")
    y = net.upper().astype(float)
    x = net.upper(stat.values).astype(float)
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        return 0.0
    return float((xc @ yc) ** 2 / (sxx * syy))


def compute(net: MultiEdgeNetwork, name: str) -> StatisticMatrix:
    """Resolve a covariate name: weighted_sp, unweighted_sp, degree, match:<attr>."""
    if name == "weighted_sp":
        return shared_partners_weighted(net)
    if name == "unweighted_sp":
        return shared_partners_unweighted(net)
    if name == "degree":
        return degree_covariate(net)
    if name.startswith("match:") and len(name) > 6:
        return attribute_match(net, name[6:])
    raise KeyError(f"unknown statistic {name!r}; expected weighted_sp, unweighted_sp, degree or match:<attr>")


def _fmt(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def write_dense_csv(stat: StatisticMatrix, labels, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["", *labels])
        for label, row in zip(labels, stat.values):
            w.writerow([label, *(_fmt(v) for v in row)])


def write_long_tsv(stat: StatisticMatrix, labels, path) -> None:
    n = len(labels)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["node_i", "node_j", "value"])
        for i in range(n):
            for j in range(i + 1, n):
                w.writerow([labels[i], labels[j], _fmt(stat.values[i, j])])


def read_dense_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    labels = rows[0][1:]
    values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return labels, values
