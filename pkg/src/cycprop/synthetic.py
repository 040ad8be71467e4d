"""Planted-partition (stochastic block model) datasets with noisy,
class-indicative attributes."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .graph import build_graph, make_rng
from .ingest import Dataset


def sbm_dataset(n: int = 100, num_classes: int = 2, p_in: float = 0.1, p_out: float = 0.005,
                num_attrs: int = 20, signal: float = 1.0, noise: float = 1.0,
                seed: int = 0) -> Dataset:
    """Balanced SBM; each class owns a block of attribute columns whose
    entries are shifted by ``signal`` on top of Gaussian ``noise``."""
    rng = make_rng(seed)
    labels = np.arange(n) % num_classes
    labels = labels[rng.permutation(n)]
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, k=1)
    edges = np.argwhere(upper)

    block = max(num_attrs // num_classes, 1)
    x = noise * rng.standard_normal((n, num_attrs))
    for k in range(num_classes):
        cols = slice(k * block, min((k + 1) * block, num_attrs))
        x[labels == k, cols] += signal
    return Dataset(build_graph(edges, n), sp.csr_matrix(x), labels.astype(np.int64), np.arange(n))
