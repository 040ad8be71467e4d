"""Graph semi-supervised node classification by alternating a label-aware
GNN encoder with embedding-weighted label propagation."""

from .config import Hyperparams, load_config
from .graph import Graph, build_graph
from .ingest import Dataset, LabelSplit, load_dataset, split_labels
from .trainer import TrainResult, train

__all__ = [
    "Dataset",
    "Graph",
    "Hyperparams",
    "LabelSplit",
    "TrainResult",
    "build_graph",
    "load_config",
    "load_dataset",
    "split_labels",
    "train",
]
__version__ = "0.1.0"
