"""Shared builders for randomized graph tests.

Graphs come out of a seeded generator so every run sees the same family.
Non-source nodes always get at least one in-edge from an earlier node,
which makes the instances valid broadcast networks by construction.
"""

from fractions import Fraction

import numpy as np
import pytest

from dagcast import network


def random_dag(rng, max_nodes=8, max_extra=6, unit=False, parallel=False):
    n = int(rng.integers(2, max_nodes + 1))
    names = tuple("r" if i == 0 else f"v{i}" for i in range(n))
    pairs = []
    for j in range(1, n):
        pairs.append((int(rng.integers(0, j)), j))
    for _ in range(int(rng.integers(0, max_extra + 1))):
        j = int(rng.integers(1, n))
        tail = int(rng.integers(0, j))
        if not parallel and (tail, j) in pairs:
            continue
        pairs.append((tail, j))
    triples = []
    for tail, head in pairs:
        if unit:
            cap = Fraction(1)
        else:
            cap = Fraction(int(rng.integers(1, 5)), int(rng.integers(1, 4)))
        triples.append((tail, head, cap))
    return network(names, triples)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
