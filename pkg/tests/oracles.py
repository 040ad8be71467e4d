"""Independent reference computations used as test oracles.

Each one is deliberately naive: dense linear algebra, exhaustive search or
finite differences, sharing no code with the package beyond plain data.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def simplex_project_bruteforce(z: np.ndarray) -> np.ndarray:
    """Exact projection by enumerating every support set.

    On support S the KKT conditions give f_S = z_S + eta with
    eta = (1 - sum z_S) / |S| and f = 0 elsewhere; the projection is the
    feasible candidate (f_S >= 0) closest to z.
    """
    z = np.asarray(z, dtype=np.float64)
    k = z.size
    best, best_d = None, math.inf
    for size in range(1, k + 1):
        for support in itertools.combinations(range(k), size):
            s = list(support)
            eta = (1.0 - z[s].sum()) / size
            f = np.zeros(k)
            f[s] = z[s] + eta
            if f[s].min() < -1e-15:
                continue
            f = np.maximum(f, 0.0)
            d = float(np.sum((f - z) ** 2))
            if d < best_d:
                best, best_d = f, d
    return best


def harmonic_solve(W: np.ndarray, labeled: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """F_u = (D_uu - W_uu)^-1 W_ul Y_l with labeled rows clamped."""
    n = W.shape[0]
    is_lab = np.zeros(n, dtype=bool)
    is_lab[labeled] = True
    u = ~is_lab
    D = np.diag(W.sum(axis=1))
    F = Y.astype(np.float64).copy()
    F[u] = np.linalg.solve((D - W)[np.ix_(u, u)], W[np.ix_(u, is_lab)] @ Y[is_lab])
    return F


def quadratic_lp_minimizer(W: np.ndarray, Y: np.ndarray, train_mask: np.ndarray, mu: float):
    """Unconstrained minimizer of sum_{i<j} w_ij |f_i - f_j|^2 + mu sum_train |f_i - y_i|^2.

    Stationarity: (L + mu M) F = mu M Y with L = D - W, M = diag(train_mask).
    When every component holds a training node the solution has rows on the
    simplex, so it is also the constrained minimizer.
    """
    L = np.diag(W.sum(axis=1)) - W
    M = np.diag(train_mask.astype(np.float64))
    return np.linalg.solve(L + mu * M, mu * M @ Y)


def lp_objective_dense(F, W: np.ndarray, Y, phi, mu, lam, train_mask) -> float:
    """Term-by-term evaluation with explicit loops."""
    n, k = F.shape
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            if W[i, j] != 0.0:
                total += W[i, j] * sum((F[i, c] - F[j, c]) ** 2 for c in range(k))
    for i in range(n):
        if train_mask[i]:
            total += mu * sum((F[i, c] - Y[i, c]) ** 2 for c in range(k))
        if phi[i]:
            h = -sum(p * math.log(p) for p in F[i] if p > 0)
            total += h - lam
    return total


def central_difference(fun, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Gradient of ``fun`` at ``x`` by central differences (x is restored)."""
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    for t in range(flat.size):
        old = flat[t]
        flat[t] = old + eps
        up = fun()
        flat[t] = old - eps
        down = fun()
        flat[t] = old
        g[t] = (up - down) / (2 * eps)
    return grad


def rel_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    """Largest per-coordinate relative error. Coordinates whose magnitude is
    below ``floor`` are compared absolutely: central differences carry
    roundoff near 1e-10 there, so a ratio would only measure noise."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / scale))


def encoder_chain(x_v, x_nbr_mean, h_nbr_mean, W1, b1, W2, b2):
    """Two-layer mean-concat chain for one node written out by hand:
    hidden ReLU, linear output, L2 normalization."""
    h = np.maximum(np.concatenate([x_v, x_nbr_mean]) @ W1 + b1, 0.0)
    z = np.concatenate([h, h_nbr_mean]) @ W2 + b2
    return h, z / np.linalg.norm(z)


def neg_log_sigmoid(x: float) -> float:
    return -math.log(1.0 / (1.0 + math.exp(-x)))
