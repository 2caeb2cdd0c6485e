"""Small synthetic DAGs used by tests, benchmarks and ``verify``."""

from __future__ import annotations

import numpy as np

from .dag import Dag, PairSet


def chain(k: int, prefix: str = "n") -> Dag:
    """``n0 -> n1 -> ... -> n{k-1}``; node 0 is the most specific."""
    names = [f"{prefix}{i}" for i in range(k)]
    return Dag(names, [(i, i + 1) for i in range(k - 1)])


def balanced_tree(branching: int, depth: int) -> Dag:
    """Complete tree with edges child -> parent; node 0 is the root."""
    n = sum(branching ** d for d in range(depth + 1))
    names = [f"t{i}" for i in range(n)]
    edges = [(i, (i - 1) // branching) for i in range(1, n)]
    return Dag(names, edges)


def random_dag(n: int, n_edges: int, rng: np.random.Generator) -> Dag:
    """Uniform random edges oriented by a random node permutation."""
    max_edges = n * (n - 1) // 2
    n_edges = min(n_edges, max_edges)
    order = rng.permutation(n)
    codes = set()
    while len(codes) < n_edges:
        a, b = rng.integers(0, n, size=2)
        if a == b:
            continue
        lo, hi = (a, b) if a < b else (b, a)
        codes.add(int(order[lo]) * n + int(order[hi]))
    return Dag([f"v{i}" for i in range(n)], PairSet(n, np.fromiter(codes, dtype=np.int64, count=len(codes))))


def random_dag_fast(n: int, n_edges: int, rng: np.random.Generator) -> Dag:
    """Vectorized variant of :func:`random_dag` for large graphs."""
    order = rng.permutation(n)
    codes = np.empty(0, dtype=np.int64)
    while len(codes) < n_edges:
        a = rng.integers(0, n, size=2 * n_edges)
        b = rng.integers(0, n, size=2 * n_edges)
        keep = a != b
        lo = np.minimum(a, b)[keep]
        hi = np.maximum(a, b)[keep]
        codes = np.unique(np.concatenate([codes, order[lo].astype(np.int64) * n + order[hi]]))
    codes = rng.permutation(codes)[:n_edges]
    return Dag([f"v{i}" for i in range(n)], PairSet(n, codes))


def layered_dag(layers: int, width: int, density: float, rng: np.random.Generator) -> Dag:
    """Each node of layer k links to each node of layer k+1 with probability ``density``.

    Layer 0 is the most specific. Every non-top node gets at least one parent
    so no node is isolated from the hierarchy.
    """
    names = [f"L{k}_{i}" for k in range(layers) for i in range(width)]
    edges = []
    for k in range(layers - 1):
        for i in range(width):
            u = k * width + i
            mask = rng.random(width) < density
            if not mask.any():
                mask[rng.integers(width)] = True
            edges.extend((u, (k + 1) * width + int(j)) for j in np.flatnonzero(mask))
    return Dag(names, edges)
