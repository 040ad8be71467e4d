import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cycprop.graph import build_graph, build_noise_distribution, make_rng
from cycprop.sampler import hard_labels, rebuild_label_index, sample_batch
from conftest import random_graph


def edge_set(g):
    return {tuple(e) for e in g.edge_list().tolist()} | {tuple(e[::-1]) for e in g.edge_list().tolist()}


def four_node():
    g = build_graph([(0, 1), (1, 2), (2, 3), (3, 0)], 4)
    phi = np.array([1, 1, 1, 1])
    labels = np.array([0, 0, 1, 1])
    return g, rebuild_label_index(phi, labels, 2, build_noise_distribution(g))


def test_structure_only_pairs_are_edges(sbm):
    g = sbm.graph
    dist = build_noise_distribution(g)
    pairs = sample_batch(g, None, dist, 200, 5, 1.0, make_rng(0))
    edges = edge_set(g)
    pos = pairs.gamma > 0
    assert pos.sum() == 200
    assert all((a, c) in edges for a, c in zip(pairs.anchor[pos], pairs.context[pos]))
    assert pairs.structure.all()


def test_label_branch_two_classes():
    g, idx = four_node()
    labels = np.array([0, 0, 1, 1])
    pairs = sample_batch(g, idx, build_noise_distribution(g), 300, 3, 0.0, make_rng(1))
    pos = pairs.gamma > 0
    assert not pairs.structure.any()
    assert np.all(labels[pairs.anchor[pos]] == labels[pairs.context[pos]])
    assert np.all(pairs.anchor[pos] != pairs.context[pos])
    assert np.all(labels[pairs.anchor[~pos]] != labels[pairs.context[~pos]])


def test_triangle_enumeration(triangle):
    pairs = sample_batch(triangle, None, build_noise_distribution(triangle), 3, 2, 1.0, make_rng(2))
    assert len(pairs) == 9
    assert pairs.num_positive == 3
    pos = pairs.gamma > 0
    assert all((a, c) in edge_set(triangle) for a, c in zip(pairs.anchor[pos], pairs.context[pos]))
    # each anchor carries exactly two negatives
    assert sorted(np.bincount(pairs.anchor[~pos], minlength=3)) == sorted(
        2 * np.bincount(pairs.anchor[pos], minlength=3))


def test_label_branch_needs_candidates(triangle):
    idx = rebuild_label_index(np.zeros(3), np.zeros(3, dtype=int), 2)
    with pytest.raises(ValueError):
        sample_batch(triangle, idx, build_noise_distribution(triangle), 4, 1, 0.0, make_rng(0))


def test_degenerate_label_pool_falls_back_to_structure():
    # one reliable node per class: no label positive exists anywhere
    g = build_graph([(0, 1), (1, 2)], 3)
    idx = rebuild_label_index(np.array([1, 0, 1]), np.array([0, 0, 1]), 2, build_noise_distribution(g))
    pairs = sample_batch(g, idx, build_noise_distribution(g), 50, 2, 0.0, make_rng(3))
    assert pairs.num_positive == 50
    assert pairs.structure.all()


def test_empty_index():
    idx = rebuild_label_index(np.zeros(5), np.zeros(5, dtype=int), 3)
    assert len(idx) == 0
    assert idx.class_sizes().tolist() == [0, 0, 0]


def test_index_at_initialization_holds_training_nodes():
    phi = np.array([1, 0, 1, 1, 0, 1])
    F = np.eye(3)[[0, 1, 2, 0, 1, 2]]
    idx = rebuild_label_index(phi, hard_labels(F), 3)
    assert idx.class_members(0).tolist() == [0, 3]
    assert idx.class_members(1).tolist() == []
    assert idx.class_members(2).tolist() == [2, 5]


def test_newly_reliable_node_joins_its_argmax_class():
    F = np.full((6, 3), 1 / 3)
    F[5] = [0.1, 0.2, 0.7]
    phi = np.zeros(6)
    phi[5] = 1
    assert 5 in rebuild_label_index(phi, hard_labels(F), 3).class_members(2)


def test_hard_label_ties_go_low():
    assert hard_labels(np.array([[0.5, 0.5], [0.2, 0.8]])).tolist() == [0, 1]


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_batch_audit(seed, r):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 30, 0.2)
    if g.num_edges == 0:
        return
    phi = (rng.random(30) < 0.6).astype(int)
    labels = rng.integers(0, 3, size=30)
    dist = build_noise_distribution(g)
    idx = rebuild_label_index(phi, labels, 3, dist)
    if len(idx) == 0:
        r = 1.0
    pairs = sample_batch(g, idx, dist, 40, 3, r, make_rng(seed))
    assert pairs.num_positive == 40 and len(pairs) == 40 * 4
    edges = edge_set(g)
    for a, c, gamma, s in zip(pairs.anchor, pairs.context, pairs.gamma, pairs.structure):
        if gamma > 0 and s:
            assert (a, c) in edges
        elif gamma > 0:
            assert phi[a] and phi[c] and labels[a] == labels[c] and a != c
        elif not s:
            assert phi[a] and phi[c] and labels[a] != labels[c]
        else:
            assert g.degrees[c] > 0
    again = sample_batch(g, rebuild_label_index(phi, labels, 3, dist), dist, 40, 3, r, make_rng(seed))
    assert np.array_equal(pairs.context, again.context)


def test_branch_frequency_matches_r(cora):
    g = cora.graph
    dist = build_noise_distribution(g)
    idx = rebuild_label_index(np.ones(g.n), cora.labels, cora.num_classes, dist)
    for r in (0.2, 0.5, 0.9):
        pairs = sample_batch(g, idx, dist, 10_000, 1, r, make_rng(4))
        frac = pairs.structure[pairs.gamma > 0].mean()
        assert abs(frac - r) <= 0.02
