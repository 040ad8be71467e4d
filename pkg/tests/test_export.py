import json

import numpy as np

from cycprop import export
from cycprop.metrics import micro_macro_f1


def test_predictions_round_trip(tmp_path):
    F = np.array([[0.25, 0.75], [1.0, 0.0], [0.1 + 0.2, 0.7]])
    ids = np.array([7, 3, 11])
    path = tmp_path / "p.tsv"
    export.write_predictions(path, ids, F)
    got_ids, classes, rows = export.read_predictions(path)
    assert got_ids.tolist() == [7, 3, 11]
    assert classes.tolist() == [1, 0, 1]
    assert np.array_equal(rows, F)
    assert path.read_text().splitlines()[0] == "7\t1\t0.25,0.75"


def test_embeddings_round_trip(tmp_path):
    E = np.random.default_rng(0).normal(size=(4, 3))
    path = tmp_path / "e.tsv"
    export.write_embeddings(path, np.arange(4) * 10, E)
    ids, back = export.read_embeddings(path)
    assert ids.tolist() == [0, 10, 20, 30]
    assert np.array_equal(back, E)
    assert len(path.read_text().splitlines()[0].split("\t")) == 4


def test_history_and_metrics(tmp_path):
    hist = [{"iter": 1, "l_lp": None, "l_ge": np.float64(0.5), "l_total": float("nan")}]
    export.write_history(tmp_path / "h.jsonl", hist)
    assert export.read_history(tmp_path / "h.jsonl") == [
        {"iter": 1, "l_lp": None, "l_ge": 0.5, "l_total": None}]
    report = micro_macro_f1([0, 1], [0, 0], seed=3, variant="full", config={"alpha": 0.1})
    export.write_metrics(tmp_path / "m.json", report)
    data = json.loads((tmp_path / "m.json").read_text())
    assert set(data) == {"micro_f1", "macro_f1", "per_class", "n_eval", "seed", "variant", "config"}
    assert data["micro_f1"] == 0.5 and data["config"] == {"alpha": 0.1}
