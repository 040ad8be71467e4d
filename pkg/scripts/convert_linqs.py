#!/usr/bin/env python3
"""Convert a LINQS citation dataset (``<name>.content`` + ``<name>.cites``)
into the canonical TSV files read by ``cycprop``.

Papers without citations are dropped and only the largest connected
component is kept. Class names are mapped to 0-based ids in sorted order;
document ids are kept as external node ids.

    python scripts/convert_linqs.py /path/to/cora/cora data/cora
"""
import argparse
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from cycprop.graph import build_graph
from cycprop.ingest import Dataset, write_dataset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("prefix", help="path prefix, e.g. raw/cora/cora")
    ap.add_argument("out", type=Path)
    args = ap.parse_args()

    doc_ids, rows, classes = [], [], []
    with open(args.prefix + ".content") as fh:
        for line in fh:
            parts = line.split()
            doc_ids.append(parts[0])
            rows.append([float(v) for v in parts[1:-1]])
            classes.append(parts[-1])
    index = {p: i for i, p in enumerate(doc_ids)}
    edges = []
    with open(args.prefix + ".cites") as fh:
        for line in fh:
            a, b = line.split()
            if a in index and b in index:
                edges.append((index[a], index[b]))

    g = build_graph(edges, len(doc_ids))
    _, comp = connected_components(g.adjacency(), directed=False)
    sizes = np.bincount(comp)
    sizes[comp[g.degrees == 0]] = 0
    keep = np.flatnonzero(comp == np.argmax(sizes))
    remap = -np.ones(len(doc_ids), dtype=np.int64)
    remap[keep] = np.arange(keep.size)
    el = g.edge_list()
    el = remap[el]
    el = el[(el >= 0).all(axis=1)]

    names = sorted(set(classes))
    labels = np.array([names.index(classes[i]) for i in keep])
    x = sp.csr_matrix(np.array(rows)[keep])
    ids = np.array([int(doc_ids[i]) for i in keep], dtype=np.int64)
    order = np.argsort(ids)
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    ds = Dataset(build_graph(inv[el], keep.size), x[order], labels[order], ids[order])

    args.out.mkdir(parents=True, exist_ok=True)
    write_dataset(ds, args.out / "graph.tsv", args.out / "attrs.tsv", args.out / "labels.tsv")
    (args.out / "classes.txt").write_text("\n".join(names) + "\n")
    print(f"{args.out}: n={ds.n} edges={ds.graph.num_edges} attrs={x.shape[1]} classes={len(names)}")


if __name__ == "__main__":
    main()
