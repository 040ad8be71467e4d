"""Sparse undirected graph storage, the degree-based noise distribution and
seeded random sources."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    """Raised for malformed graph input."""


def make_rng(seed: int | None) -> np.random.Generator:
    """Deterministic random source; identical seeds give identical streams."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph in CSR form.

    ``indptr``/``indices`` hold both orientations of every edge, with each
    neighbor list sorted ascending.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    degrees: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        deg = np.diff(self.indptr)
        deg.setflags(write=False)
        object.__setattr__(self, "degrees", deg)

    @property
    def num_edges(self) -> int:
        return int(self.indices.size // 2)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edge_rows(self) -> np.ndarray:
        """Source node of every stored (directed) edge, aligned with ``indices``."""
        return np.repeat(np.arange(self.n), self.degrees)

    def edge_list(self) -> np.ndarray:
        """Canonical ``(|E|, 2)`` array of undirected edges with ``u < v``."""
        rows = self.edge_rows()
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.indices.size)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def is_symmetric(self) -> bool:
        a = self.adjacency()
        return (a != a.T).nnz == 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.num_edges})"


def build_graph(edges: Iterable[Sequence[int]] | np.ndarray, n: int) -> Graph:
    """Build a canonical graph: self-loops dropped, duplicates and both
    orientations merged, symmetric CSR."""
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GraphError(f"edge list must have shape (k, 2), got {arr.shape}")
    bad = np.flatnonzero((arr < 0).any(axis=1) | (arr >= n).any(axis=1))
    if bad.size:
        u, v = arr[bad[0]]
        raise GraphError(f"edge ({u}, {v}) at position {bad[0]} has an endpoint outside [0, {n})")

    arr = arr[arr[:, 0] != arr[:, 1]]
    both = np.concatenate([arr, arr[:, ::-1]])
    # dedup on the flattened key, which also sorts rows then columns
    keys = np.unique(both[:, 0] * n + both[:, 1])
    rows, cols = keys // n, keys % n
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return Graph(n, indptr, cols.astype(np.int64))


class AliasTable:
    """Walker/Vose alias table over ``len(weights)`` outcomes.

    Zero-weight outcomes are never drawn. Construction is O(k) and each draw
    is O(1).
    """

    def __init__(self, weights: np.ndarray):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-d array")
        if (w < 0).any() or not np.isfinite(w).all():
            raise ValueError("weights must be finite and non-negative")
        total = w.sum()
        if total <= 0:
            raise ValueError("at least one weight must be positive")
        self.probabilities = w / total
        k = w.size
        scaled = self.probabilities * k
        prob = np.ones(k)
        alias = np.arange(k)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            s, l = small.pop(), large.pop()
            prob[s] = scaled[s]
            alias[s] = l
            scaled[l] = (scaled[l] + scaled[s]) - 1.0
            (small if scaled[l] < 1.0 else large).append(l)
        # leftovers are 1 up to rounding; a zero-weight slot must never keep itself
        fallback = int(np.argmax(w))
        for i in small + large:
            if self.probabilities[i] > 0:
                prob[i] = 1.0
            else:
                prob[i], alias[i] = 0.0, fallback
        self.prob = prob
        self.alias = alias

    def __len__(self) -> int:
        return self.prob.size

    def sample(self, rng: np.random.Generator, size: int | None = None):
        slot = rng.integers(0, self.prob.size, size=size)
        coin = rng.random(size=size)
        return np.where(coin < self.prob[slot], slot, self.alias[slot])


class NoiseDistribution:
    """Negative-sampling distribution over nodes, proportional to degree^(3/4)."""

    power = 0.75

    def __init__(self, degrees: np.ndarray):
        deg = np.asarray(degrees, dtype=np.float64)
        if not (deg > 0).any():
            raise GraphError("graph has no edges; negative-sample pool is empty")
        self.weights = deg ** self.power
        self.normalizer = float(self.weights.sum())
        self.table = AliasTable(self.weights)

    @property
    def probabilities(self) -> np.ndarray:
        return self.weights / self.normalizer

    def sample(self, rng: np.random.Generator, size: int | None = None):
        return self.table.sample(rng, size)


def build_noise_distribution(g: Graph) -> NoiseDistribution:
    return NoiseDistribution(g.degrees)


def sample_noise(dist: NoiseDistribution, rng: np.random.Generator) -> int:
    return int(dist.sample(rng))
