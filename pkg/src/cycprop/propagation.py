"""Embedding-adaptive label propagation.

Edge weights come from a Gaussian kernel on embedding distances; the label
distribution matrix ``F`` is updated by projected (proximal) gradient steps
on a smoothness + fitness + self-paced entropy objective, and the
self-paced indicator ``phi`` has a closed-form threshold update.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph

LOG_CLAMP = 1e-12
MEDIAN_FLOOR = 1e-6


class InfeasibleError(ValueError):
    """A label distribution row is off the probability simplex."""


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Graph structure with one kernel weight per stored (directed) edge."""

    graph: Graph
    weights: np.ndarray  # aligned with graph.indices
    delta: float

    def matrix(self) -> sp.csr_matrix:
        g = self.graph
        return sp.csr_matrix((self.weights, g.indices, g.indptr), shape=(g.n, g.n))


def edge_sq_distances(Z, g: Graph) -> np.ndarray:
    """Squared distance ``|z_i - z_j|^2`` for every stored edge, computed once
    per unordered pair so both orientations are bit-identical."""
    rows = g.edge_rows()
    cols = g.indices
    lower = rows < cols
    u, v = rows[lower], cols[lower]
    if sp.issparse(Z):
        Z = sp.csr_matrix(Z)
        diff = Z[u] - Z[v]
        d2_half = np.asarray(diff.multiply(diff).sum(axis=1)).ravel()
    else:
        diff = Z[u] - Z[v]
        d2_half = np.einsum("ij,ij->i", diff, diff)
    # map each directed edge to its unordered pair
    key_half = u * g.n + v
    key_all = np.minimum(rows, cols) * g.n + np.maximum(rows, cols)
    return d2_half[np.searchsorted(key_half, key_all)] if key_half.size else np.zeros(0)


def median_delta(sq_dist: np.ndarray) -> float:
    """Length scale set to the median edge distance, floored."""
    if sq_dist.size == 0:
        return 1.0
    return max(float(np.median(np.sqrt(sq_dist))), MEDIAN_FLOOR)


def compute_weights(E, g: Graph, delta: float | str = 0.1) -> WeightedGraph:
    """``s_ij = exp(-|e_i - e_j|^2 / (2 delta^2))`` on the existing edges.

    ``delta="median-heuristic"`` uses the median edge distance.
    """
    d2 = edge_sq_distances(E, g)
    if delta == "median-heuristic":
        delta = median_delta(d2)
    delta = float(delta)
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    return WeightedGraph(g, np.exp(-d2 / (2.0 * delta * delta)), delta)


def entropy(f: np.ndarray) -> np.ndarray | float:
    """Shannon entropy (natural log) of a simplex row, or of each row of a matrix."""
    f = np.asarray(f, dtype=np.float64)
    terms = np.where(f > 0, -f * np.log(np.where(f > 0, f, 1.0)), 0.0)
    out = terms.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def check_feasible(F: np.ndarray, tol: float = 1e-9) -> None:
    F = np.asarray(F)
    if not np.isfinite(F).all():
        raise InfeasibleError("label distribution has non-finite entries")
    bad = np.flatnonzero((F.min(axis=1) < -tol) | (np.abs(F.sum(axis=1) - 1.0) > tol))
    if bad.size:
        i = bad[0]
        raise InfeasibleError(f"row {i} is not on the simplex (min={F[i].min():.3g}, sum={F[i].sum():.12g})")


def simplex_project(z: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Sort descending, take the largest ``rho`` with
    ``u_rho + (1 - sum_{i<=rho} u_i) / rho > 0``, shift by
    ``eta = (1 - sum_{i<=rho} u_i) / rho`` and clip at zero. Works row-wise on
    2-d input. Rows already on the simplex, up to rounding in their sum,
    come back unchanged, so the map is exactly idempotent.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        return simplex_project(z[None, :])[0]
    k = z.shape[1]
    on = (z.min(axis=1) >= 0) & (np.abs(z.sum(axis=1) - 1.0) <= 4 * k * np.finfo(np.float64).eps)
    u = -np.sort(-z, axis=1)
    css = np.cumsum(u, axis=1)
    j = np.arange(1, k + 1)
    cond = u + (1.0 - css) / j > 0
    rho = k - np.argmax(cond[:, ::-1], axis=1)
    eta = (1.0 - css[np.arange(z.shape[0]), rho - 1]) / rho
    return np.where(on[:, None], z, np.maximum(z + eta[:, None], 0.0))


def _fitness_mask(train_mask, n: int) -> np.ndarray:
    return np.zeros(n, dtype=bool) if train_mask is None else np.asarray(train_mask, dtype=bool)


def lp_objective(F, W: WeightedGraph, Y, phi, mu: float, lam: float, train_mask=None,
                 check: bool = True) -> float:
    """Smoothness over undirected edges + fitness on training rows
    + phi-weighted entropy - lam * |phi|."""
    F = np.asarray(F, dtype=np.float64)
    if check:
        check_feasible(F)
    g = W.graph
    rows = g.edge_rows()
    lower = rows < g.indices
    diff = F[rows[lower]] - F[g.indices[lower]]
    smooth = float(np.sum(W.weights[lower] * np.einsum("ij,ij->i", diff, diff)))
    mask = _fitness_mask(train_mask, F.shape[0])
    fit = mu * float(np.sum((F[mask] - Y[mask]) ** 2))
    phi = np.asarray(phi, dtype=np.float64)
    reg = float(np.sum(phi * entropy(F))) - lam * float(phi.sum())
    return smooth + fit + reg


def lp_gradient_all(F, W: WeightedGraph, Y, phi, mu: float, train_mask=None) -> np.ndarray:
    """Gradient of the objective for every row at once."""
    F = np.asarray(F, dtype=np.float64)
    S = W.matrix()
    deg = np.asarray(S.sum(axis=1)).ravel()
    grad = 2.0 * (deg[:, None] * F - S @ F)
    mask = _fitness_mask(train_mask, F.shape[0])
    grad[mask] += 2.0 * mu * (F[mask] - Y[mask])
    phi = np.asarray(phi, dtype=np.float64)
    on = phi != 0
    if on.any():
        grad[on] -= phi[on, None] * (np.log(np.maximum(F[on], LOG_CLAMP)) + 1.0)
    return grad


def lp_gradient(F, W: WeightedGraph, Y, phi, mu: float, i: int, train_mask=None) -> np.ndarray:
    """Gradient w.r.t. row ``i`` only."""
    F = np.asarray(F, dtype=np.float64)
    g = W.graph
    lo, hi = g.indptr[i], g.indptr[i + 1]
    nb, s = g.indices[lo:hi], W.weights[lo:hi]
    grad = 2.0 * (s[:, None] * (F[i] - F[nb])).sum(axis=0) if nb.size else np.zeros(F.shape[1])
    if _fitness_mask(train_mask, F.shape[0])[i]:
        grad = grad + 2.0 * mu * (F[i] - Y[i])
    if phi[i]:
        grad = grad - phi[i] * (np.log(np.maximum(F[i], LOG_CLAMP)) + 1.0)
    return grad


def lp_step(F, W: WeightedGraph, Y, phi, mu: float, lr: float, train_mask=None) -> np.ndarray:
    """One synchronous proximal-gradient sweep; returns a new feasible F."""
    grad = lp_gradient_all(F, W, Y, phi, mu, train_mask)
    return simplex_project(np.asarray(F) - lr * grad)


def update_indicator(F, lam: float, labeled_mask) -> np.ndarray:
    """``phi_i = 1`` iff ``H(f_i) <= lam``; training-labeled nodes are always 1."""
    phi = (entropy(F) <= lam).astype(np.int64)
    phi[np.asarray(labeled_mask, dtype=bool)] = 1
    return phi
