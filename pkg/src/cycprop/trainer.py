"""The cyclic training loop.

Every outer iteration runs ``T1`` encoder steps on freshly sampled context
pairs, re-embeds all nodes, recomputes edge weights from the embeddings,
runs ``T2`` proximal label-propagation steps, refreshes the self-paced
indicator and raises its threshold. The best iteration on the validation
split is returned.

Variants: ``lp-only`` skips the encoder and propagates over raw-attribute
weights; ``gnn-only`` skips propagation and classifies embeddings with a
one-vs-rest logistic regression.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.multiclass import OneVsRestClassifier

from . import encoder as enc
from .config import Hyperparams
from .graph import NoiseDistribution, build_noise_distribution
from .ingest import Dataset, LabelSplit
from .metrics import micro_macro_f1, predict
from .propagation import (
    WeightedGraph,
    compute_weights,
    lp_objective,
    lp_step,
    update_indicator,
)
from .sampler import LabelContextIndex, hard_labels, rebuild_label_index, sample_batch

log = logging.getLogger(__name__)

IMPROVEMENT_EPS = 1e-4
ENCODER_DTYPE = np.float32
UNDERFLOW_WARN = 1e-6


@dataclass
class Snapshot:
    F: np.ndarray
    E: np.ndarray
    metric: float
    iteration: int


@dataclass
class TrainState:
    params: enc.EncoderParams
    F: np.ndarray
    phi: np.ndarray
    lam: float
    iteration: int = 0
    best: Snapshot | None = None
    history: list[dict] = field(default_factory=list)


@dataclass
class TrainResult:
    E: np.ndarray
    F: np.ndarray
    history: list[dict]
    selected_iteration: int
    aborted: str | None = None


def initial_distribution(split: LabelSplit) -> np.ndarray:
    """One-hot rows for training nodes, uniform 1/K elsewhere."""
    n, k = split.y.shape
    F = np.full((n, k), 1.0 / k)
    F[split.train] = split.y[split.train]
    return F


def initialize(data: Dataset, split: LabelSplit, hp: Hyperparams) -> TrainState:
    seeds = np.random.SeedSequence(hp.seed).spawn(2)
    params = enc.init_params(data.attributes.shape[1], hp.hidden_dim, hp.d,
                             np.random.Generator(np.random.PCG64(seeds[0])), ENCODER_DTYPE)
    return TrainState(
        params=params,
        F=initial_distribution(split),
        phi=split.train_mask.astype(np.int64),
        lam=hp.lambda0,
    )


def converged(history: list[float], patience: int) -> bool:
    """True once the metric has gone ``patience`` consecutive iterations
    without beating its running best by more than ``IMPROVEMENT_EPS``."""
    if patience <= 0 or not history:
        return False
    best = -math.inf
    stale = 0
    for value in history:
        if value > best + IMPROVEMENT_EPS:
            best = value
            stale = 0
        else:
            stale += 1
    return stale >= patience


def lambda_schedule(hp: Hyperparams, num_classes: int, t: int) -> float:
    """Threshold after ``t`` augmentations."""
    return min(hp.lambda0 * hp.lambda_growth ** t, hp.resolved_lambda_cap(num_classes))


class Trainer:
    def __init__(self, data: Dataset, split: LabelSplit, hp: Hyperparams):
        self.hp = hp
        self.data = data.normalized() if hp.normalize_attrs else data
        self.split = split
        self.g = self.data.graph
        self.K = split.num_classes
        self.train_mask = split.train_mask
        self.Y = np.zeros_like(split.y)
        self.Y[split.train] = split.y[split.train]
        self.val_truth = data.labels[split.val]
        self.X, self.XT = enc.prepare_attributes(self.data.attributes, ENCODER_DTYPE)
        self.rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(hp.seed).spawn(2)[1]))
        self.dist: NoiseDistribution | None = build_noise_distribution(self.g) if self.g.num_edges else None
        self._raw_weights: WeightedGraph | None = None
        self._warned = False
        if hp.variant != "lp-only" and self.dist is None:
            raise ValueError("the encoder needs a graph with at least one edge")

    @property
    def delta(self):
        return self.hp.delta if self.hp.delta_mode == "fixed" else "median-heuristic"

    def curriculum_done(self, state: TrainState) -> bool:
        if self.hp.variant == "gnn-only":
            return True
        return state.lam >= self.hp.resolved_lambda_cap(self.K)

    def val_metric(self, F: np.ndarray) -> float:
        if self.split.val.size == 0:
            return 0.0
        return micro_macro_f1(predict(F, self.split.val), self.val_truth, self.K).micro_f1

    def label_index(self, state: TrainState) -> LabelContextIndex:
        return rebuild_label_index(state.phi, hard_labels(state.F), self.K, self.dist)

    def encoder_phase(self, state: TrainState, idx: LabelContextIndex) -> float:
        hp = self.hp
        # the total loss weighs the context loss by alpha, so the encoder descends alpha * L_GE
        lr = hp.alpha * hp.lr_enc
        losses = []
        for _ in range(hp.T1):
            pairs = sample_batch(self.g, idx, self.dist, hp.B, hp.s_neg, hp.r, self.rng)
            losses.append(enc.train_step(state.params, self.g, self.X, pairs, lr,
                                         hp.neighbor_sample_size, self.rng, XT=self.XT))
        return float(np.mean(losses))

    def embed(self, state: TrainState) -> np.ndarray:
        return enc.embed_all(state.params, self.g, self.X, self.XT).astype(np.float64)

    def raw_weights(self) -> WeightedGraph:
        if self._raw_weights is None:
            self._raw_weights = compute_weights(self.data.attributes, self.g, "median-heuristic")
        return self._raw_weights

    def propagation_phase(self, state: TrainState, W: WeightedGraph) -> float:
        hp = self.hp
        F = state.F
        for _ in range(hp.T2):
            F = lp_step(F, W, self.Y, state.phi, hp.mu, hp.lr_lp, self.train_mask)
        state.F = F
        return lp_objective(F, W, self.Y, state.phi, hp.mu, state.lam, self.train_mask, check=False)

    def classifier_head(self, E: np.ndarray) -> np.ndarray:
        """One-vs-rest logistic regression on the training embeddings."""
        train = self.split.train
        y = self.data.labels[train]
        F = np.zeros((self.g.n, self.K))
        classes = np.unique(y)
        if classes.size == 1:
            F[:, classes[0]] = 1.0
            return F
        clf = OneVsRestClassifier(LogisticRegression(max_iter=1000)).fit(E[train], y)
        proba = clf.predict_proba(E)
        if classes.size == 2:
            proba = proba if proba.shape[1] == 2 else np.column_stack([1 - proba[:, 0], proba[:, 0]])
        F[:, classes] = proba
        return F / F.sum(axis=1, keepdims=True)

    def outer_iteration(self, state: TrainState, idx: LabelContextIndex | None) -> dict:
        hp = self.hp
        variant = hp.variant
        l_ge = None
        l_lp = None
        lam_used = state.lam
        E = None
        if variant != "lp-only":
            l_ge = self.encoder_phase(state, idx)
            E = self.embed(state)
            if not np.isfinite(E).all():
                raise enc.EncoderError("non-finite embeddings")
        if variant == "gnn-only":
            state.F = self.classifier_head(E)
        else:
            W = self.raw_weights() if variant == "lp-only" else compute_weights(E, self.g, self.delta)
            if W.weights.size and np.median(W.weights) < UNDERFLOW_WARN and not self._warned:
                self._warned = True
                log.warning("median edge weight is below %.0e with delta=%g; propagation will barely "
                            "move (delta_mode=median-heuristic adapts the scale)",
                            UNDERFLOW_WARN, W.delta)
            l_lp = self.propagation_phase(state, W)
            if not np.isfinite(l_lp):
                raise FloatingPointError("non-finite propagation objective")
            state.phi = update_indicator(state.F, state.lam, self.train_mask)
            state.lam = min(state.lam * hp.lambda_growth, hp.resolved_lambda_cap(self.K))
        state.iteration += 1

        metric = self.val_metric(state.F)
        if state.best is None or metric >= state.best.metric:
            state.best = Snapshot(state.F.copy(), self.embed(state) if E is None else E, metric,
                                  state.iteration)
        l_total = None
        if l_lp is not None or l_ge is not None:
            l_total = (l_lp or 0.0) + hp.alpha * (l_ge or 0.0)
        record = {
            "iter": state.iteration,
            "l_lp": l_lp,
            "l_ge": l_ge,
            "l_total": l_total,
            "val_micro_f1": metric,
            "phi_count": int(state.phi.sum()),
            "lambda": lam_used,
        }
        state.history.append(record)
        return record

    def run(self, state: TrainState) -> TrainResult:
        hp = self.hp
        aborted = None
        idx = self.label_index(state) if hp.variant != "lp-only" else None
        while state.iteration < hp.max_outer_iters:
            try:
                rec = self.outer_iteration(state, idx)
            except (enc.EncoderError, FloatingPointError) as exc:
                aborted = f"aborted at outer iteration {state.iteration + 1}: {exc}"
                log.error(aborted)
                break
            log.info("iter %d  val_micro_f1=%.4f  |phi|=%d  l_lp=%s  l_ge=%s", rec["iter"],
                     rec["val_micro_f1"], rec["phi_count"], rec["l_lp"], rec["l_ge"])
            # early stopping waits until the curriculum stops admitting new nodes
            if self.curriculum_done(state) and converged(
                    [h["val_micro_f1"] for h in state.history], hp.patience):
                break
            if hp.variant == "full":
                idx = self.label_index(state)

        if state.best is None:
            return TrainResult(self.embed(state), state.F.copy(), state.history, 0, aborted)
        return TrainResult(state.best.E, state.best.F, state.history, state.best.iteration, aborted)


def train(data: Dataset, split: LabelSplit, hp: Hyperparams) -> TrainResult:
    trainer = Trainer(data, split, hp)
    return trainer.run(initialize(data, split, hp))
