"""Two-hop mean-concat neighborhood encoder trained with the negative-sampling
context loss. Forward and backward passes are written out by hand.

The hidden layer computes ``relu([x ; A1 x] @ W1 + b1)`` and the output
layer ``[h ; A2 h] @ W2 + b2``, L2 normalized per row. ``A1``/``A2`` are
row-normalized neighbor aggregation matrices: sampled during training, the
full neighbor mean for inference. The output layer is linear; a ReLU there
confines embeddings to the nonnegative orthant, where negative pairs cannot
score below zero and dead units leave whole rows at zero.

All arithmetic runs in the parameters' dtype.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph
from .sampler import ContextPairs

LOG_EPS = 1e-12
NORM_EPS = 1e-12


class EncoderError(RuntimeError):
    pass


@dataclass
class EncoderParams:
    W1: np.ndarray  # (2m, hidden)
    b1: np.ndarray
    W2: np.ndarray  # (2 * hidden, d)
    b2: np.ndarray

    @property
    def shapes(self) -> tuple[int, int, int]:
        return self.W1.shape[0] // 2, self.W1.shape[1], self.W2.shape[1]

    def arrays(self) -> list[np.ndarray]:
        return [self.W1, self.b1, self.W2, self.b2]

    def copy(self) -> "EncoderParams":
        return EncoderParams(*(a.copy() for a in self.arrays()))

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays())

    @property
    def dtype(self) -> np.dtype:
        return self.W1.dtype

    def astype(self, dtype) -> "EncoderParams":
        return EncoderParams(*(a.astype(dtype) for a in self.arrays()))


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(m: int, hidden_dim: int, d: int, seed: int | np.random.Generator,
                dtype=np.float64) -> EncoderParams:
    """Glorot-uniform weights, zero biases."""
    if min(m, hidden_dim, d) < 1:
        raise ValueError("encoder dimensions must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return EncoderParams(
        W1=_glorot(rng, 2 * m, hidden_dim),
        b1=np.zeros(hidden_dim),
        W2=_glorot(rng, 2 * hidden_dim, d),
        b2=np.zeros(d),
    ).astype(dtype)


def mean_aggregator(g: Graph, dtype=np.float64) -> sp.csr_matrix:
    """Full-neighborhood mean; isolated nodes get an all-zero row."""
    deg = g.degrees.astype(np.float64)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    data = np.repeat(inv, g.degrees).astype(dtype)
    return sp.csr_matrix((data, g.indices, g.indptr), shape=(g.n, g.n))


def sampled_aggregator(g: Graph, k: int, rng: np.random.Generator, dtype=np.float64) -> sp.csr_matrix:
    """Mean over ``k`` sampled neighbors per node.

    Nodes with degree >= k sample without replacement, smaller neighborhoods
    with replacement. Isolated nodes get an all-zero row.
    """
    deg = g.degrees
    n = g.n
    cols = np.empty((n, k), dtype=np.int64)
    small = np.flatnonzero((deg > 0) & (deg < k))
    if small.size:
        offs = (rng.random((small.size, k)) * deg[small, None]).astype(np.int64)
        cols[small] = g.indices[g.indptr[small, None] + offs]
    big = np.flatnonzero(deg >= k)
    if big.size:
        # k smallest random keys per row = uniform draw without replacement
        keys = rng.random(int(deg[big].sum()))
        starts = np.concatenate([[0], np.cumsum(deg[big])[:-1]])
        for node, s in zip(big, starts):
            pick = np.argpartition(keys[s:s + deg[node]], k - 1)[:k] if deg[node] > k else np.arange(k)
            cols[node] = g.indices[g.indptr[node] + pick]
    has = deg > 0
    rows = np.repeat(np.flatnonzero(has), k)
    a = sp.csr_matrix((np.full(rows.size, 1.0 / k, dtype=dtype), (rows, cols[has].ravel())), shape=(n, n))
    a.sum_duplicates()
    return a


@dataclass
class ForwardCache:
    X: sp.csr_matrix
    XT: sp.csr_matrix
    A1: sp.csr_matrix
    A2: sp.csr_matrix
    pre1: np.ndarray
    h1: np.ndarray
    Ah1: np.ndarray
    norm: np.ndarray
    E: np.ndarray


def prepare_attributes(X, dtype=np.float64) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """CSR attributes and their CSR transpose in the working dtype."""
    X = sp.csr_matrix(X, dtype=dtype)
    return X, X.T.tocsr()


def forward(params: EncoderParams, X, A1, A2, XT=None) -> ForwardCache:
    """Full-graph forward pass. ``XT`` is an optional cached CSR transpose of X."""
    m, h, _ = params.shapes
    if XT is None or not sp.issparse(X) or X.dtype != params.dtype:
        X, XT = prepare_attributes(X, params.dtype)
    # one pass over X for both halves of W1; A1 @ (X W) stays sparse-dense
    XW = X @ np.hstack([params.W1[:m], params.W1[m:]])
    pre1 = XW[:, :h] + A1 @ XW[:, h:] + params.b1
    h1 = np.maximum(pre1, 0)
    Ah1 = A2 @ h1
    z = h1 @ params.W2[:h] + Ah1 @ params.W2[h:] + params.b2
    norm = np.linalg.norm(z, axis=1)
    safe = np.where(norm > NORM_EPS, norm, 1)
    E = z / safe[:, None]
    return ForwardCache(X, XT, A1, A2, pre1, h1, Ah1, norm, E)


def backward(params: EncoderParams, cache: ForwardCache, grad_E: np.ndarray) -> EncoderParams:
    """Gradient of a scalar loss w.r.t. the parameters, given dL/dE."""
    m, h, _ = params.shapes
    E, norm = cache.E, cache.norm
    live = norm > NORM_EPS
    # d(z/|z|)/dz = (I - e e^T)/|z|; an all-zero z passes no gradient
    g_z = np.zeros_like(grad_E)
    g_z[live] = (grad_E[live] - E[live] * np.sum(grad_E[live] * E[live], axis=1, keepdims=True)) / norm[live, None]

    gW2 = np.vstack([cache.h1.T @ g_z, cache.Ah1.T @ g_z])
    gb2 = g_z.sum(axis=0)
    g_h1 = g_z @ params.W2[:h].T + cache.A2.T @ (g_z @ params.W2[h:].T)
    g_pre1 = g_h1 * (cache.pre1 > 0)
    G = cache.XT @ np.hstack([g_pre1, cache.A1.T @ g_pre1])
    gW1 = np.vstack([G[:, :h], G[:, h:]])
    gb1 = g_pre1.sum(axis=0)
    return EncoderParams(gW1, gb1, gW2, gb2)


def embed_all(params: EncoderParams, g: Graph, X, XT=None) -> np.ndarray:
    """Deterministic embeddings over full neighborhoods."""
    A = mean_aggregator(g, params.dtype)
    return forward(params, X, A, A, XT).E


def embed_node(params: EncoderParams, g: Graph, X, v: int, neighbor_samples: int | None = None,
               rng: np.random.Generator | None = None) -> np.ndarray:
    """Embedding of a single node, evaluated over its two-hop receptive field.

    With ``neighbor_samples`` and ``rng`` the neighborhoods at each hop are
    sampled; otherwise the full neighborhoods are used.
    """
    X = sp.csr_matrix(X)
    m, h, _ = params.shapes

    def hop(u: int) -> np.ndarray:
        nb = g.neighbors(u)
        if nb.size == 0 or neighbor_samples is None or rng is None:
            return nb
        if nb.size >= neighbor_samples:
            return rng.choice(nb, size=neighbor_samples, replace=False)
        return rng.choice(nb, size=neighbor_samples, replace=True)

    def layer1(u: int) -> np.ndarray:
        nb = hop(u)
        x_u = X[u].toarray().ravel()
        agg = np.asarray(X[nb].mean(axis=0)).ravel() if nb.size else np.zeros(m)
        return np.maximum(np.concatenate([x_u, agg]) @ params.W1 + params.b1, 0.0)

    nb = hop(v)
    h_v = layer1(v)
    agg = np.mean([layer1(u) for u in nb], axis=0) if nb.size else np.zeros(h)
    z = np.concatenate([h_v, agg]) @ params.W2 + params.b2
    norm = np.linalg.norm(z)
    return z / norm if norm > NORM_EPS else z


def _neg_log_sigmoid(x: np.ndarray) -> np.ndarray:
    return np.minimum(np.logaddexp(0.0, -x), -np.log(LOG_EPS))


def context_loss(E: np.ndarray, pairs: ContextPairs) -> float:
    """Mean of -log sigmoid(gamma * <e_c, e_i>) over the pairs."""
    scores = np.einsum("ij,ij->i", E[pairs.anchor], E[pairs.context])
    return float(np.mean(_neg_log_sigmoid(pairs.gamma * scores)))


def context_loss_grad(E: np.ndarray, pairs: ContextPairs) -> tuple[float, np.ndarray]:
    """Loss and its gradient w.r.t. the embedding matrix."""
    a, c = pairs.anchor, pairs.context
    gamma = pairs.gamma.astype(np.float64)
    scores = np.einsum("ij,ij->i", E[a], E[c])
    loss = float(np.mean(_neg_log_sigmoid(gamma * scores)))
    # d/ds of -log sigmoid(gamma s) = -gamma * sigmoid(-gamma s)
    coef = -gamma * np.exp(-np.logaddexp(0.0, gamma * scores)) / len(pairs)
    n = E.shape[0]
    coef = coef.astype(E.dtype)
    M = sp.csr_matrix((np.concatenate([coef, coef]), (np.concatenate([a, c]), np.concatenate([c, a]))),
                      shape=(n, n))
    return loss, M @ E


def loss_and_grad(params: EncoderParams, X, A1, A2, pairs: ContextPairs,
                  XT=None) -> tuple[float, EncoderParams]:
    cache = forward(params, X, A1, A2, XT)
    loss, grad_E = context_loss_grad(cache.E, pairs)
    return loss, backward(params, cache, grad_E)


def train_step(params: EncoderParams, g: Graph, X, pairs: ContextPairs, lr: float,
               neighbor_sample_size: int, rng: np.random.Generator,
               aggregators: tuple | None = None, XT=None) -> float:
    """One SGD step on the batch context loss; updates ``params`` in place.

    Returns the batch loss before the update.
    """
    if aggregators is None:
        aggregators = (sampled_aggregator(g, neighbor_sample_size, rng, params.dtype),
                       sampled_aggregator(g, neighbor_sample_size, rng, params.dtype))
    loss, grad = loss_and_grad(params, X, *aggregators, pairs, XT)
    if not (np.isfinite(loss) and grad.is_finite()):
        raise EncoderError(f"non-finite encoder gradient (loss={loss}); lower lr_enc (currently {lr})")
    for p, gp in zip(params.arrays(), grad.arrays()):
        p -= lr * gp
    return loss
