"""Dataset loading and writing in the canonical TSV formats, plus seeded
train/validation/test splits.

File formats
------------
graph:      ``src<TAB>dst`` per line, integer ids, ``#`` comments ignored.
attributes: ``node_id<TAB>col:val col:val ...`` (sparse) or
            ``node_id<TAB>v1,v2,...`` (dense), detected from the first data
            line. An optional ``# columns: m`` header fixes the column count
            of sparse files.
labels:     ``node_id<TAB>class_id`` with dense 0-based classes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .graph import Graph, build_graph, make_rng


class DatasetError(ValueError):
    """Malformed or inconsistent dataset files."""


class SplitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    """Graph, attributes and ground-truth labels over dense node ids.

    ``node_ids[i]`` is the external id of dense node ``i``; ``labels[i]`` is
    its class, or -1 when unknown.
    """

    graph: Graph
    attributes: sp.csr_matrix
    labels: np.ndarray
    node_ids: np.ndarray

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def num_classes(self) -> int:
        known = self.labels[self.labels >= 0]
        return int(known.max()) + 1 if known.size else 0

    @property
    def labeled_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.labels >= 0)

    def index_of(self, external_ids) -> np.ndarray:
        ext = np.asarray(external_ids, dtype=np.int64)
        pos = np.searchsorted(self.node_ids, ext)
        pos = np.clip(pos, 0, self.node_ids.size - 1)
        missing = self.node_ids[pos] != ext
        if missing.any():
            raise DatasetError(f"unknown node id {ext[missing][0]}")
        return pos

    def normalized(self) -> "Dataset":
        """Copy with attribute rows scaled to unit L2 norm (zero rows kept)."""
        x = self.attributes.tocsr(copy=True)
        norms = np.sqrt(np.asarray(x.multiply(x).sum(axis=1)).ravel())
        norms[norms == 0] = 1.0
        x = sp.csr_matrix(sp.diags(1.0 / norms) @ x)
        return Dataset(self.graph, x, self.labels, self.node_ids)


@dataclass(frozen=True, eq=False)
class LabelSplit:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    num_classes: int
    y: np.ndarray  # (n, K) one-hot on train and val rows, zero elsewhere

    @property
    def train_mask(self) -> np.ndarray:
        mask = np.zeros(self.y.shape[0], dtype=bool)
        mask[self.train] = True
        return mask


def _data_lines(path: Path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.rstrip("\n")
            if not text.strip() or text.lstrip().startswith("#"):
                continue
            yield lineno, text


def _parse_int(token: str, path: Path, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise DatasetError(f"{path}:{lineno}: bad {what} {token!r}") from None


def read_edges(path: str | Path) -> np.ndarray:
    path = Path(path)
    out = []
    for lineno, text in _data_lines(path):
        parts = text.split()
        if len(parts) != 2:
            raise DatasetError(f"{path}:{lineno}: expected 'src<TAB>dst', got {text!r}")
        out.append((_parse_int(parts[0], path, lineno, "node id"), _parse_int(parts[1], path, lineno, "node id")))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def read_attributes(path: str | Path) -> tuple[np.ndarray, sp.csr_matrix]:
    """Return external ids (file order) and the attribute rows in that order."""
    path = Path(path)
    declared_cols = None
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") and "columns:" in line:
                declared_cols = int(line.split("columns:", 1)[1])
                break

    ids, rows, cols, vals = [], [], [], []
    dense_width = None
    mode = None
    for lineno, text in _data_lines(path):
        parts = text.split(None, 1)
        node = _parse_int(parts[0], path, lineno, "node id")
        body = parts[1].strip() if len(parts) > 1 else ""
        if mode is None:
            mode = "dense" if body and ":" not in body else "sparse"
        row = len(ids)
        ids.append(node)
        if not body:
            if mode == "dense":
                raise DatasetError(f"{path}:{lineno}: empty dense attribute row")
            continue
        try:
            if mode == "sparse":
                for item in body.split():
                    c, v = item.split(":")
                    rows.append(row)
                    cols.append(int(c))
                    vals.append(float(v))
            else:
                values = [float(v) for v in body.split(",")]
                if dense_width is None:
                    dense_width = len(values)
                elif len(values) != dense_width:
                    raise DatasetError(f"{path}:{lineno}: expected {dense_width} values, got {len(values)}")
                rows.extend([row] * len(values))
                cols.extend(range(len(values)))
                vals.extend(values)
        except ValueError as exc:
            if isinstance(exc, DatasetError):
                raise
            raise DatasetError(f"{path}:{lineno}: cannot parse attributes ({exc})") from None

    vals_arr = np.asarray(vals, dtype=np.float64)
    cols_arr = np.asarray(cols, dtype=np.int64)
    if not np.isfinite(vals_arr).all():
        raise DatasetError(f"{path}: non-finite attribute value")
    if (cols_arr < 0).any():
        raise DatasetError(f"{path}: negative column index")
    if mode == "dense":
        m = dense_width or 0
    else:
        m = int(cols_arr.max()) + 1 if cols_arr.size else 0
        if declared_cols is not None:
            if m > declared_cols:
                raise DatasetError(f"{path}: column index {m - 1} >= declared columns {declared_cols}")
            m = declared_cols
    x = sp.csr_matrix((vals_arr, (np.asarray(rows, dtype=np.int64), cols_arr)), shape=(len(ids), m))
    x.sum_duplicates()
    return np.asarray(ids, dtype=np.int64), x


def read_labels(path: str | Path) -> dict[int, int]:
    path = Path(path)
    out: dict[int, int] = {}
    for lineno, text in _data_lines(path):
        parts = text.split()
        if len(parts) != 2:
            raise DatasetError(f"{path}:{lineno}: expected 'node_id<TAB>class_id', got {text!r}")
        node = _parse_int(parts[0], path, lineno, "node id")
        cls = _parse_int(parts[1], path, lineno, "class id")
        if cls < 0:
            raise DatasetError(f"{path}:{lineno}: negative class id {cls}")
        if node in out and out[node] != cls:
            raise DatasetError(f"{path}:{lineno}: conflicting label for node {node}")
        out[node] = cls
    return out


def load_dataset(graph_path, attr_path, label_path) -> Dataset:
    """Load the three files into a consistent :class:`Dataset`.

    The node set is the set of ids in the attribute file; dense ids follow
    ascending external id, so loading ignores line order.
    """
    raw_ids, raw_x = read_attributes(attr_path)
    order = np.argsort(raw_ids, kind="stable")
    node_ids = raw_ids[order]
    dup = np.flatnonzero(np.diff(node_ids) == 0)
    if dup.size:
        raise DatasetError(f"{attr_path}: duplicate attribute row for node {node_ids[dup[0]]}")
    x = raw_x[order]

    def to_dense(ext: np.ndarray, source) -> np.ndarray:
        if ext.size == 0:
            return ext
        pos = np.clip(np.searchsorted(node_ids, ext), 0, max(node_ids.size - 1, 0))
        bad = node_ids[pos] != ext if node_ids.size else np.ones(ext.shape, dtype=bool)
        if bad.any():
            raise DatasetError(f"{source}: node id {ext[bad][0]} has no attribute row")
        return pos

    edges = read_edges(graph_path)
    graph = build_graph(to_dense(edges.ravel(), graph_path).reshape(-1, 2), node_ids.size)

    label_map = read_labels(label_path)
    labels = np.full(node_ids.size, -1, dtype=np.int64)
    if label_map:
        ext = np.fromiter(label_map.keys(), dtype=np.int64, count=len(label_map))
        cls = np.fromiter(label_map.values(), dtype=np.int64, count=len(label_map))
        labels[to_dense(ext, label_path)] = cls
        present = np.unique(cls)
        if present.size != present[-1] + 1:
            missing = sorted(set(range(present[-1] + 1)) - set(present.tolist()))
            raise DatasetError(f"{label_path}: class ids are not dense, missing {missing}")
    return Dataset(graph, sp.csr_matrix(x), labels, node_ids)


def _format_value(v: float) -> str:
    return repr(float(v))


def write_dataset(ds: Dataset, graph_path, attr_path, label_path, dense: bool = False) -> None:
    """Write the canonical form: sorted ids, ``u < v`` edges, sorted columns."""
    ids = ds.node_ids
    edges = ds.graph.edge_list()
    with open(graph_path, "w") as fh:
        for u, v in edges:
            fh.write(f"{ids[u]}\t{ids[v]}\n")

    x = ds.attributes.tocsr()
    x.sort_indices()
    with open(attr_path, "w") as fh:
        if dense:
            arr = x.toarray()
            for i in range(ds.n):
                fh.write(f"{ids[i]}\t{','.join(_format_value(v) for v in arr[i])}\n")
        else:
            fh.write(f"# columns: {x.shape[1]}\n")
            for i in range(ds.n):
                lo, hi = x.indptr[i], x.indptr[i + 1]
                items = " ".join(f"{c}:{_format_value(v)}" for c, v in zip(x.indices[lo:hi], x.data[lo:hi]))
                fh.write(f"{ids[i]}\t{items}\n")

    with open(label_path, "w") as fh:
        for i in np.flatnonzero(ds.labels >= 0):
            fh.write(f"{ids[i]}\t{ds.labels[i]}\n")


def split_labels(labels: np.ndarray, train_fraction: float, val_count: int, seed: int,
                 num_classes: int | None = None) -> LabelSplit:
    """Uniform (not stratified) random split of the labeled nodes."""
    labels = np.asarray(labels)
    if not 0.0 < train_fraction < 1.0:
        raise SplitError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    labeled = np.flatnonzero(labels >= 0)
    n_train = int(math.floor(train_fraction * labeled.size + 0.5))
    if n_train < 1:
        raise SplitError(f"{labeled.size} labeled nodes give an empty training set")
    if val_count < 0 or val_count >= labeled.size - n_train:
        raise SplitError(
            f"val_count={val_count} needs fewer than {labeled.size - n_train} remaining labeled nodes"
        )
    rng = make_rng(seed)
    perm = rng.permutation(labeled)
    train = np.sort(perm[:n_train])
    val = np.sort(perm[n_train:n_train + val_count])
    test = np.sort(perm[n_train + val_count:])
    k = num_classes if num_classes is not None else int(labels[labeled].max()) + 1
    y = np.zeros((labels.size, k))
    known = np.concatenate([train, val])
    y[known, labels[known]] = 1.0
    return LabelSplit(train, val, test, k, y)


def read_id_list(path) -> np.ndarray:
    path = Path(path)
    return np.array([_parse_int(t.split()[0], path, n, "node id") for n, t in _data_lines(path)], dtype=np.int64)
