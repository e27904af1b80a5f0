"""Undirected multi-edge networks and their edge-list / attribute ingestion."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


class NetworkInputError(ValueError):
    """Raised for malformed edge lists or attribute tables."""


@dataclass(frozen=True)
class DegreeSequence:
    degrees: np.ndarray
    mean_degree: Fraction


@dataclass(frozen=True, eq=False)
class MultiEdgeNetwork:
    """Immutable undirected multigraph stored as a dense symmetric count matrix.

    ``counts[i, j]`` is the number of parallel edges between nodes ``i`` and
    ``j``; the diagonal is always zero. Node order follows ``labels``.
    """

    labels: tuple[str, ...]
    counts: np.ndarray
    attributes: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        n = len(self.labels)
        if counts.shape != (n, n):
            raise NetworkInputError(f"count matrix shape {counts.shape} does not match {n} labels")
        if len(set(self.labels)) != n:
            raise NetworkInputError("duplicate node labels")
        if (counts < 0).any():
            raise NetworkInputError("negative edge count")
        if not np.array_equal(counts, counts.T):
            raise NetworkInputError("count matrix is not symmetric")
        if np.diagonal(counts).any():
            raise NetworkInputError("self-loops are not supported")
        counts.setflags(write=False)
        attrs = {}
        for name, values in self.attributes.items():
            values = tuple(str(v) for v in values)
            if len(values) != n:
                raise NetworkInputError(f"attribute {name!r} has {len(values)} values for {n} nodes")
            attrs[name] = values
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "attributes", attrs)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def m(self) -> int:
        """Total number of edges."""
        return int(self.counts.sum() // 2)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def count(self, a: str, b: str) -> int:
        return int(self.counts[self.index(a), self.index(b)])

    def upper(self, matrix: np.ndarray | None = None) -> np.ndarray:
        """Upper-triangle entries (one per unordered dyad) of ``matrix``, default the counts."""
        matrix = self.counts if matrix is None else np.asarray(matrix)
        return matrix[np.triu_indices(self.n, k=1)]

    def with_attributes(self, attributes: Mapping[str, Sequence[str]]) -> "MultiEdgeNetwork":
        merged = dict(self.attributes)
        merged.update({k: tuple(v) for k, v in attributes.items()})
        return MultiEdgeNetwork(self.labels, self.counts, merged)

    def with_counts(self, counts: np.ndarray) -> "MultiEdgeNetwork":
        return MultiEdgeNetwork(self.labels, counts, self.attributes)

    def edge_rows(self) -> list[tuple[str, str, int]]:
        iu, ju = np.triu_indices(self.n, k=1)
        return [
            (self.labels[i], self.labels[j], int(self.counts[i, j]))
            for i, j in zip(iu, ju)
            if self.counts[i, j] > 0
        ]

    @classmethod
    def from_matrix(cls, counts, labels: Sequence[str] | None = None, attributes=None) -> "MultiEdgeNetwork":
        counts = np.asarray(counts)
        if labels is None:
            labels = [str(i) for i in range(counts.shape[0])]
        return cls(tuple(labels), counts, attributes or {})


def from_edge_list(
    rows: Iterable[Sequence],
    nodes: Iterable[str] = (),
    attributes: Mapping[str, Sequence[str]] | None = None,
) -> MultiEdgeNetwork:
    """Build a network from ``(source, target[, count])`` rows.

    Rows for the same unordered dyad accumulate. A row without a count adds
    one edge. ``nodes`` declares extra (possibly isolated) nodes, which are
    appended after the nodes seen in the edge list unless already present.
    """
    order: dict[str, int] = {}
    dyads: dict[tuple[int, int], int] = {}

    def node_id(label) -> int:
        if label not in order:
            order[label] = len(order)
        return order[label]

    for idx, row in enumerate(rows):
        row = tuple(row)
        if len(row) not in (2, 3):
            raise NetworkInputError(f"row {idx}: expected 2 or 3 fields, got {len(row)}")
        src, dst = (str(x).strip() for x in row[:2])
        if not src or not dst:
            raise NetworkInputError(f"row {idx}: empty node label")
        if src == dst:
            raise NetworkInputError(f"row {idx}: self-loop on {src!r}")
        count = 1
        if len(row) == 3 and row[2] is not None and str(row[2]).strip() != "":
            raw = row[2]
            try:
                if isinstance(raw, float) and not raw.is_integer():
                    raise ValueError
                count = int(raw.strip() if isinstance(raw, str) else raw)
            except (TypeError, ValueError):
                raise NetworkInputError(f"row {idx}: count {raw!r} is not an integer") from None
            if count <= 0:
                raise NetworkInputError(f"row {idx}: count must be positive, got {count}")
        i, j = node_id(src), node_id(dst)
        key = (min(i, j), max(i, j))
        dyads[key] = dyads.get(key, 0) + count

    for label in nodes:
        label = str(label).strip()
        if not label:
            raise NetworkInputError("declared node with empty label")
        node_id(label)

    n = len(order)
    counts = np.zeros((n, n), dtype=np.int64)
    for (i, j), c in dyads.items():
        counts[i, j] = counts[j, i] = c
    labels = tuple(order)
    net = MultiEdgeNetwork(labels, counts)
    if attributes:
        net = net.with_attributes({k: list(v) for k, v in attributes.items()})
    return net


def degrees(net: MultiEdgeNetwork) -> DegreeSequence:
    k = net.counts.sum(axis=1)
    mean = Fraction(int(k.sum()), net.n) if net.n else Fraction(0)
    return DegreeSequence(k, mean)


def binary_density(net: MultiEdgeNetwork) -> Fraction:
    """Fraction of dyads carrying at least one edge."""
    if net.n < 2:
        raise NetworkInputError("density is undefined for fewer than two nodes")
    realized = int(np.count_nonzero(net.upper()))
    return Fraction(realized, net.n * (net.n - 1) // 2)


# --- file formats -----------------------------------------------------------

def read_edge_csv(path, nodes: Iterable[str] = ()) -> MultiEdgeNetwork:
    """Read a ``source,target[,count]`` CSV with a header row."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise NetworkInputError(f"{path}: empty file (header required)") from None
        if header[:2] != ["source", "target"] or len(header) > 3 or (len(header) == 3 and header[2] != "count"):
            raise NetworkInputError(f"{path}: header must be source,target[,count], got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise NetworkInputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append(row)
    return from_edge_list(rows, nodes=nodes)


def write_edge_csv(net: MultiEdgeNetwork, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source", "target", "count"])
        writer.writerows(net.edge_rows())


def read_attribute_csv(path) -> tuple[list[str], dict[str, list[str]]]:
    """Read ``node,<attr1>,...``; returns node order and per-attribute value lists."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise NetworkInputError(f"{path}: empty attribute file") from None
        if not header or header[0].lower() != "node" or len(header) < 2:
            raise NetworkInputError(f"{path}: header must be node,<attr>[,...]")
        nodes: list[str] = []
        values: dict[str, list[str]] = {name: [] for name in header[1:]}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise NetworkInputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            nodes.append(row[0].strip())
            for name, v in zip(header[1:], row[1:]):
                values[name].append(v.strip())
    if len(set(nodes)) != len(nodes):
        raise NetworkInputError(f"{path}: duplicate node rows")
    return nodes, values


def attach_attributes(net: MultiEdgeNetwork, nodes: Sequence[str], values: Mapping[str, Sequence[str]]) -> MultiEdgeNetwork:
    """Align attribute rows to the network's node order; every node must appear exactly once."""
    unknown = sorted(set(nodes) - set(net.labels))
    if unknown:
        raise NetworkInputError(f"attribute rows for unknown nodes: {', '.join(unknown[:5])}")
    missing = [x for x in net.labels if x not in set(nodes)]
    if missing:
        raise NetworkInputError(f"attribute rows missing for nodes: {', '.join(missing[:5])}")
    pos = {label: i for i, label in enumerate(nodes)}
    aligned = {name: [vals[pos[label]] for label in net.labels] for name, vals in values.items()}
    return net.with_attributes(aligned)


def read_network(edges_path, attrs_path=None) -> MultiEdgeNetwork:
    """Edge list plus optional attribute file; nodes only named in the attribute file become isolates."""
    if attrs_path is None:
        return read_edge_csv(edges_path)
    nodes, values = read_attribute_csv(attrs_path)
    net = read_edge_csv(edges_path, nodes=nodes)
    return attach_attributes(net, nodes, values)


def read_contact_records(path, metadata_path=None, class_attr: str = "class") -> MultiEdgeNetwork:
    """Aggregate whitespace-separated ``t i j Ci Cj`` contact records into dyad counts.

    Each record adds one edge. Class labels come from the record columns
    and, when given, from a ``node class [gender]`` metadata file, which also
    contributes nodes without any recorded contact.
    """
    rows = []
    classes: dict[str, str] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 3:
                raise NetworkInputError(f"{path}:{lineno}: expected 't i j [Ci Cj]'")
            _, i, j = parts[:3]
            if i == j:
                continue
            rows.append((i, j))
            if len(parts) >= 5:
                classes.setdefault(i, parts[3])
                classes.setdefault(j, parts[4])
    declared: list[str] = []
    if metadata_path is not None:
        with Path(metadata_path).open(encoding="utf-8") as fh:
            for line in fh:
                parts = line.split()
                if len(parts) >= 2:
                    declared.append(parts[0])
                    classes[parts[0]] = parts[1]
    net = from_edge_list(rows, nodes=declared)
    if classes and all(label in classes for label in net.labels):
        net = net.with_attributes({class_attr: [classes[label] for label in net.labels]})
    return net


def _data_path(name: str) -> Path:
    return Path(__file__).with_name("data") / name


def karate_club() -> MultiEdgeNetwork:
    """Zachary's karate club with context co-occurrence counts and the two factions."""
    return read_network(_data_path("karate_edges.csv"), _data_path("karate_factions.csv"))


def example_network() -> MultiEdgeNetwork:
    """The four-node worked example (a, b, c, d) used throughout the docs."""
    rows = [("a", "b", 10), ("a", "c", 6), ("a", "d", 5), ("b", "c", 4), ("b", "d", 8)]
    return from_edge_list(rows)
