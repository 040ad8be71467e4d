"""Run artifacts: predictions, embeddings, history and metrics files.

Floats are written with ``repr`` so identical runs give identical bytes.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .metrics import MetricsReport


def _fmt(v: float) -> str:
    return repr(float(v))


def write_predictions(path, node_ids: np.ndarray, F: np.ndarray) -> None:
    """``node_id<TAB>argmax_class<TAB>p1,...,pK`` for every node."""
    F = np.asarray(F, dtype=np.float64)
    pred = np.argmax(F, axis=1)
    with open(path, "w", encoding="utf-8") as fh:
        for ext, c, row in zip(node_ids, pred, F):
            fh.write(f"{int(ext)}\t{int(c)}\t{','.join(_fmt(p) for p in row)}\n")


def read_predictions(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (node_ids, argmax classes, probability rows)."""
    ids, classes, rows = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
            try:
                ids.append(int(parts[0]))
                classes.append(int(parts[1]))
                rows.append([float(p) for p in parts[2].split(",")])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if len({len(r) for r in rows}) > 1:
        raise ValueError(f"{path}: rows have differing numbers of class probabilities")
    return np.array(ids, dtype=np.int64), np.array(classes, dtype=np.int64), np.array(rows)


def write_embeddings(path, node_ids: np.ndarray, E: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ext, row in zip(node_ids, np.asarray(E, dtype=np.float64)):
            fh.write(str(int(ext)) + "\t" + "\t".join(_fmt(v) for v in row) + "\n")


def read_embeddings(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter="\t", ndmin=2)
    return data[:, 0].astype(np.int64), data[:, 1:]


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_history(path, history: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in history:
            fh.write(json.dumps(_jsonable(rec)) + "\n")


def read_history(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_json(path, obj: Any) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2) + "\n", encoding="utf-8")


def write_metrics(path, report: MetricsReport) -> None:
    write_json(path, report.to_dict())


def write_ids(path, ids: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{int(i)}\n" for i in ids)
