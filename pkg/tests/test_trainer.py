import logging
import math

import numpy as np
import pytest

from cycprop import encoder as enc
from cycprop.config import Hyperparams
from cycprop.ingest import split_labels
from cycprop.propagation import check_feasible
from cycprop.trainer import Trainer, converged, initial_distribution, initialize, lambda_schedule, train

FAST = dict(T1=10, T2=20, B=64, d=8, hidden_dim=16, max_outer_iters=6, delta_mode="median-heuristic")
HISTORY_KEYS = {"iter", "l_lp", "l_ge", "l_total", "val_micro_f1", "phi_count", "lambda"}


@pytest.fixture
def sbm_split(sbm):
    return split_labels(sbm.labels, 0.1, 10, seed=0)


def test_initial_distribution():
    labels = np.array([2, 0, 1, 3, 2, 1, 0, 3, 1, 2])
    split = split_labels(labels, 0.3, 2, seed=1, num_classes=4)
    F = initial_distribution(split)
    for i in range(10):
        expected = np.eye(4)[labels[i]] if i in split.train else np.full(4, 0.25)
        assert np.array_equal(F[i], expected)


def test_initialize_state(sbm, sbm_split):
    state = initialize(sbm, sbm_split, Hyperparams(**FAST))
    assert state.phi.sum() == sbm_split.train.size
    assert state.lam == 0.1 and state.iteration == 0


def test_zero_iterations_returns_initialization(sbm, sbm_split):
    result = train(sbm, sbm_split, Hyperparams(**{**FAST, "max_outer_iters": 0}))
    assert result.history == []
    assert np.array_equal(result.F, initial_distribution(sbm_split))
    assert result.E.shape == (sbm.n, 8)


def test_converged_examples():
    assert not converged([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7], 5)
    assert converged([0.5] * 6, 5)
    assert not converged([0.5, 0.5, 0.5, 0.5, 0.6, 0.6, 0.6], 5)
    assert not converged([0.5] * 20, 0)
    assert not converged([0.5, 0.50005, 0.50009, 0.5, 0.5], 5)
    assert converged([0.5, 0.50005, 0.50009, 0.5, 0.5, 0.5], 5)


def test_lambda_schedule():
    hp = Hyperparams()
    cap = 0.9 * math.log(7)
    assert lambda_schedule(hp, 7, 0) == 0.1
    assert math.isclose(lambda_schedule(hp, 7, 3), 0.1 * 1.25 ** 3)
    assert lambda_schedule(hp, 7, 40) == cap


@pytest.mark.parametrize("variant", ["full", "lp-only", "gnn-only"])
def test_run_invariants(sbm, sbm_split, variant):
    hp = Hyperparams(**{**FAST, "variant": variant, "patience": 0})
    result = train(sbm, sbm_split, hp)
    assert len(result.history) == hp.max_outer_iters
    check_feasible(result.F)
    assert np.isfinite(result.E).all()
    vals = [h["val_micro_f1"] for h in result.history]
    best = result.history[result.selected_iteration - 1]
    assert best["val_micro_f1"] == max(vals)
    for t, h in enumerate(result.history):
        assert set(h) == HISTORY_KEYS
        assert h["phi_count"] >= sbm_split.train.size
        if variant != "gnn-only":
            assert math.isclose(h["lambda"], lambda_schedule(hp, 2, t))
    if variant == "lp-only":
        assert all(h["l_ge"] is None for h in result.history)
    if variant == "gnn-only":
        assert all(h["l_lp"] is None for h in result.history)
        assert all(h["phi_count"] == sbm_split.train.size for h in result.history)
    if variant == "full":
        h = result.history[0]
        assert math.isclose(h["l_total"], h["l_lp"] + hp.alpha * h["l_ge"])


def test_full_run_is_deterministic(sbm, sbm_split):
    hp = Hyperparams(**FAST)
    a, b = train(sbm, sbm_split, hp), train(sbm, sbm_split, hp)
    assert a.history == b.history
    assert np.array_equal(a.F, b.F) and np.array_equal(a.E, b.E)


def test_sbm_accuracy(sbm, sbm_split):
    result = train(sbm, sbm_split, Hyperparams(delta_mode="median-heuristic", seed=0))
    acc = np.mean(np.argmax(result.F[sbm_split.test], axis=1) == sbm.labels[sbm_split.test])
    assert acc >= 0.95


def test_encoder_failure_returns_last_good_snapshot(sbm, sbm_split, monkeypatch):
    calls = {"n": 0}
    real = enc.train_step

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] > FAST["T1"]:
            raise enc.EncoderError("non-finite encoder gradient")
        return real(*args, **kwargs)

    monkeypatch.setattr(enc, "train_step", flaky)
    result = train(sbm, sbm_split, Hyperparams(**{**FAST, "patience": 0}))
    assert "outer iteration 2" in result.aborted
    assert len(result.history) == 1 and result.selected_iteration == 1
    check_feasible(result.F)


def test_fixed_delta_underflow_is_reported(sbm, sbm_split, caplog):
    hp = Hyperparams(delta_mode="fixed", max_outer_iters=1)
    with caplog.at_level(logging.WARNING, logger="cycprop.trainer"):
        train(sbm, sbm_split, hp)
    assert "median-heuristic" in caplog.text


def test_early_stopping_waits_for_the_curriculum(sbm, sbm_split):
    hp = Hyperparams(**{**FAST, "max_outer_iters": 30, "patience": 2, "variant": "lp-only"})
    trainer = Trainer(sbm, sbm_split, hp)
    result = trainer.run(initialize(sbm, sbm_split, hp))
    cap = hp.resolved_lambda_cap(2)
    # lambda reaches its cap at iteration t with 0.1 * 1.25^t >= cap
    t_cap = math.ceil(math.log(cap / hp.lambda0) / math.log(hp.lambda_growth))
    assert len(result.history) >= t_cap
    assert len(result.history) < 30
