import itertools

import numpy as np
import pytest

from multiclosure.multigraph import MultiEdgeNetwork, example_network

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def example():
    return example_network()


def random_network(rng, n, max_count=5, p_zero=0.4):
    counts = rng.integers(1, max_count + 1, size=(n, n))
    counts[rng.random((n, n)) < p_zero] = 0
    counts = np.triu(counts, 1)
    return MultiEdgeNetwork.from_matrix(counts + counts.T)


def brute_force_sp(counts, weighted):
    """Enumerate every (a, b, i) triple; independent of the matrix formulation."""
    n = len(counts)
    out = np.zeros((n, n), dtype=np.int64)
    for a, b, i in itertools.permutations(range(n), 3):
        if counts[a][i] > 0 and counts[b][i] > 0:
            out[a][b] += min(counts[a][i], counts[b][i]) if weighted else 1
    return out


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
