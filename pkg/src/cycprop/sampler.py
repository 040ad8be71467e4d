"""Structure/label-aware graph context sampling.

Each anchor draws a branch: with probability ``r`` a structure context (an
edge as positive, degree^(3/4) noise nodes as negatives), otherwise a label
context among the reliable nodes (``phi == 1``): a same-label positive and
negatives from other labels, weighted by the noise distribution restricted
to that pool.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .graph import AliasTable, Graph, NoiseDistribution

MAX_ANCHOR_RETRIES = 8


@dataclass(frozen=True)
class ContextPairs:
    """A batch of ``(anchor, context, gamma)`` triples as parallel arrays.

    ``structure`` flags pairs produced by the structure branch.
    """

    anchor: np.ndarray
    context: np.ndarray
    gamma: np.ndarray
    structure: np.ndarray

    def __len__(self) -> int:
        return self.anchor.size

    def __iter__(self) -> Iterator[tuple[int, int, int]]:
        return zip(self.anchor.tolist(), self.context.tolist(), self.gamma.tolist())

    @property
    def num_positive(self) -> int:
        return int((self.gamma > 0).sum())


class LabelContextIndex:
    """Reliable nodes grouped by their current hard label.

    ``members`` lists the candidate nodes sorted by (label, id); class ``k``
    occupies ``members[offsets[k]:offsets[k + 1]]``.
    """

    def __init__(self, phi: np.ndarray, hard_labels: np.ndarray, num_classes: int,
                 noise_weights: np.ndarray | None = None):
        phi = np.asarray(phi).astype(bool)
        hard = np.asarray(hard_labels, dtype=np.int64)
        cand = np.flatnonzero(phi)
        order = np.lexsort((cand, hard[cand]))
        self.num_classes = num_classes
        self.members = cand[order]
        self.member_label = hard[self.members]
        counts = np.bincount(self.member_label, minlength=num_classes)
        self.offsets = np.concatenate([[0], np.cumsum(counts)])
        self.position = np.full(hard.size, -1, dtype=np.int64)
        self.position[self.members] = np.arange(self.members.size)
        self._negatives: list[tuple[np.ndarray, AliasTable] | None] | None = None
        if noise_weights is not None:
            self.attach_noise(noise_weights)

    def __len__(self) -> int:
        return self.members.size

    def class_members(self, k: int) -> np.ndarray:
        return self.members[self.offsets[k]:self.offsets[k + 1]]

    def class_sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def attach_noise(self, noise_weights: np.ndarray) -> None:
        """Build, per class, the other-label pool and its restricted noise table."""
        self._negatives = []
        for k in range(self.num_classes):
            pool = self.members[self.member_label != k]
            w = noise_weights[pool]
            self._negatives.append((pool, AliasTable(w)) if (w > 0).any() else None)

    @property
    def has_noise(self) -> bool:
        return self._negatives is not None

    def negative_pool(self, k: int):
        return self._negatives[k]

    def usable_labels(self) -> np.ndarray:
        """Per class: can an anchor of this class get a positive and negatives?"""
        ok = self.class_sizes() >= 2
        ok &= np.array([p is not None for p in self._negatives], dtype=bool)
        return ok


def rebuild_label_index(phi: np.ndarray, hard_labels: np.ndarray, num_classes: int,
                        dist: NoiseDistribution | None = None) -> LabelContextIndex:
    return LabelContextIndex(phi, hard_labels, num_classes,
                             None if dist is None else dist.weights)


def hard_labels(F: np.ndarray) -> np.ndarray:
    """Row argmax; ties go to the lowest class index."""
    return np.argmax(F, axis=1)


def _structure_pairs(g: Graph, rows: np.ndarray, count: int, s_neg: int,
                     dist: NoiseDistribution, rng: np.random.Generator):
    edge = rng.integers(0, g.indices.size, size=count)
    anchors = rows[edge]
    positives = g.indices[edge]
    negatives = dist.sample(rng, size=(count, s_neg))
    return anchors, positives, negatives


def _label_pairs(idx: LabelContextIndex, count: int, s_neg: int, rng: np.random.Generator):
    """Returns (anchors, positives, negatives, n_failed)."""
    usable = idx.usable_labels()
    total = len(idx)
    anchors = idx.members[rng.integers(0, total, size=count)]
    ok = usable[idx.member_label[idx.position[anchors]]]
    for _ in range(MAX_ANCHOR_RETRIES):
        bad = np.flatnonzero(~ok)
        if bad.size == 0:
            break
        anchors[bad] = idx.members[rng.integers(0, total, size=bad.size)]
        ok[bad] = usable[idx.member_label[idx.position[anchors[bad]]]]
    anchors = anchors[ok]
    m = anchors.size

    pos_in = idx.position[anchors]
    lab = idx.member_label[pos_in]
    start = idx.offsets[lab]
    size = idx.offsets[lab + 1] - start
    j = (rng.random(m) * (size - 1)).astype(np.int64)
    j = np.minimum(j, size - 2)
    # skip the anchor's own slot
    j += j >= (pos_in - start)
    positives = idx.members[start + j]

    negatives = np.empty((m, s_neg), dtype=np.int64)
    for k in np.unique(lab):
        rows = np.flatnonzero(lab == k)
        pool, table = idx.negative_pool(k)
        negatives[rows] = pool[table.sample(rng, size=(rows.size, s_neg))]
    return anchors, positives, negatives, count - m


def sample_batch(g: Graph, idx: LabelContextIndex | None, dist: NoiseDistribution,
                 batch_size: int, s_neg: int, r: float, rng: np.random.Generator) -> ContextPairs:
    """Draw ``batch_size`` positive anchors, each with ``s_neg`` negatives.

    Label-branch anchors whose class cannot supply a positive or a negative
    are redrawn up to ``MAX_ANCHOR_RETRIES`` times and then fall back to the
    structure branch.
    """
    if g.indices.size == 0:
        raise ValueError("context sampling needs a graph with at least one edge")
    n_label = int((rng.random(batch_size) >= r).sum())
    if n_label and (idx is None or len(idx) == 0):
        raise ValueError("label branch is reachable but the label-context index is empty")

    if n_label and not idx.has_noise:
        idx.attach_noise(dist.weights)

    parts = []
    n_structure = batch_size - n_label
    if n_label:
        a, p, neg, failed = _label_pairs(idx, n_label, s_neg, rng)
        n_structure += failed
        parts.append((a, p, neg, False))
    if n_structure:
        a, p, neg = _structure_pairs(g, g.edge_rows(), n_structure, s_neg, dist, rng)
        parts.insert(0, (a, p, neg, True))

    anchor, context, gamma, structure = [], [], [], []
    for a, p, neg, is_struct in parts:
        k = a.size
        anchor += [a, np.repeat(a, s_neg)]
        context += [p, neg.ravel()]
        gamma += [np.ones(k, dtype=np.int64), -np.ones(k * s_neg, dtype=np.int64)]
        structure.append(np.full(k * (1 + s_neg), is_struct))
    return ContextPairs(np.concatenate(anchor), np.concatenate(context),
                        np.concatenate(gamma), np.concatenate(structure))
