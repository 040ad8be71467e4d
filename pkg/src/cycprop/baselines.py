"""Classic label propagation over raw-attribute edge weights: the harmonic
function method (GFHF) and local/global consistency (LLGC)."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .graph import Graph
from .ingest import LabelSplit
from .propagation import WeightedGraph, compute_weights

log = logging.getLogger(__name__)

METHODS = ("gfhf", "llgc")


@dataclass(frozen=True)
class BaselineConfig:
    method: str = "llgc"
    beta: float = 0.2
    delta_raw: float | str = "median-heuristic"
    max_iters: int = 1000
    tolerance: float = 1e-6

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")


def _labeled_rows(split: LabelSplit) -> tuple[np.ndarray, np.ndarray]:
    if split.train.size == 0:
        raise ValueError("baselines need at least one labeled node")
    Y0 = np.zeros_like(split.y)
    Y0[split.train] = split.y[split.train]
    return split.train, Y0


def gfhf(W: sp.spmatrix, labeled: np.ndarray, Y0: np.ndarray, max_iters: int = 1000,
         tolerance: float = 1e-6) -> np.ndarray:
    """Harmonic solution by fixed-point iteration on a weight matrix.

    Unlabeled rows are replaced by the weighted mean of their neighbors while
    labeled rows stay clamped, until the largest change drops below
    ``tolerance``. Unlabeled nodes with no path to a label get uniform rows.
    """
    W = sp.csr_matrix(W)
    n, k = Y0.shape
    is_lab = np.zeros(n, dtype=bool)
    is_lab[labeled] = True

    _, comp = connected_components(W, directed=False)
    reachable = np.isin(comp, np.unique(comp[is_lab]))
    free = ~is_lab & reachable
    deg = np.asarray(W.sum(axis=1)).ravel()
    free &= deg > 0

    F = np.full((n, k), 1.0 / k)
    F[is_lab] = Y0[is_lab]
    inv_deg = np.zeros(n)
    inv_deg[free] = 1.0 / deg[free]
    P = sp.diags(inv_deg) @ W
    for it in range(max_iters):
        new = P @ F
        change = np.abs(new[free] - F[free]).max(initial=0.0)
        F[free] = new[free]
        if change < tolerance:
            break
    else:
        log.warning("gfhf stopped after %d iterations (last change %.3g)", max_iters, change)
    return F


def llgc(W: sp.spmatrix, Y0: np.ndarray, beta: float = 0.2, max_iters: int = 1000,
         tolerance: float = 1e-6, return_trace: bool = False):
    """Iterate ``F <- beta * S F + (1 - beta) * Y0`` with the symmetrically
    normalized weights ``S = D^-1/2 W D^-1/2``; rows are then renormalized.

    Rows that never receive mass become uniform. Iteration stops when the
    largest entry change drops below ``tolerance``. The optional trace holds
    the Frobenius norm of each change, the norm in which ``S`` is
    nonexpansive, so it shrinks by at least ``beta`` per step.
    """
    W = sp.csr_matrix(W)
    deg = np.asarray(W.sum(axis=1)).ravel()
    d = np.zeros_like(deg)
    d[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    S = sp.diags(d) @ W @ sp.diags(d)
    F = Y0.astype(np.float64).copy()
    trace = []
    for _ in range(max_iters):
        new = beta * (S @ F) + (1.0 - beta) * Y0
        delta = new - F
        change = np.abs(delta).max()
        trace.append(float(np.linalg.norm(delta)))
        F = new
        if change < tolerance:
            break
    else:
        log.info("llgc reached max_iters=%d (last change %.3g)", max_iters, change)
    out = normalize_rows(F)
    return (out, np.array(trace)) if return_trace else out


def normalize_rows(F: np.ndarray) -> np.ndarray:
    F = np.maximum(F, 0.0)
    sums = F.sum(axis=1, keepdims=True)
    out = np.full_like(F, 1.0 / F.shape[1])
    np.divide(F, sums, out=out, where=sums > 0)
    return out


def raw_attribute_weights(g: Graph, X, delta: float | str = "median-heuristic") -> WeightedGraph:
    return compute_weights(X, g, delta)


def run_gfhf(g: Graph, X, split: LabelSplit, cfg: BaselineConfig | None = None) -> np.ndarray:
    cfg = cfg or BaselineConfig(method="gfhf")
    labeled, Y0 = _labeled_rows(split)
    W = raw_attribute_weights(g, X, cfg.delta_raw).matrix()
    return gfhf(W, labeled, Y0, cfg.max_iters, cfg.tolerance)


def run_llgc(g: Graph, X, split: LabelSplit, cfg: BaselineConfig | None = None) -> np.ndarray:
    cfg = cfg or BaselineConfig(method="llgc")
    _, Y0 = _labeled_rows(split)
    W = raw_attribute_weights(g, X, cfg.delta_raw).matrix()
    return llgc(W, Y0, cfg.beta, cfg.max_iters, cfg.tolerance)


def run_baseline(g: Graph, X, split: LabelSplit, cfg: BaselineConfig) -> np.ndarray:
    return (run_gfhf if cfg.method == "gfhf" else run_llgc)(g, X, split, cfg)
