"""Anomaly detection on attributed graphs from node motif degrees and attributes."""

from .graph import AttributedGraph, DatasetBundle, load_edge_list, load_attributes, normalize_adjacency
from .inject import InjectionSpec, InjectionResult, inject
from .metrics import ScoredRanking, pr_auc, recall_at_k, roc_auc
from .model import GuideModel, ModelConfig, score_nodes, train
from .motifs import StructureMatrix, build_structure_matrix, count_nmd

__version__ = "0.1.0"

__all__ = [
    "AttributedGraph", "DatasetBundle", "load_edge_list", "load_attributes", "normalize_adjacency",
    "InjectionSpec", "InjectionResult", "inject",
    "ScoredRanking", "pr_auc", "recall_at_k", "roc_auc",
    "GuideModel", "ModelConfig", "score_nodes", "train",
    "StructureMatrix", "build_structure_matrix", "count_nmd",
]
