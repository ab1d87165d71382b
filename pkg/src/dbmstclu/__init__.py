"""Streaming graph sketches and validity-driven spanning tree clustering."""

__version__ = "0.1.0"

from .clustering import ClusterPartition, CutScan, dbmstclu, double_dfs, evaluate_cut, find_best_cut, semst
from .estimators import DBMSTClu, SEMST
from .forest import SpanningForest, exact_mst
from .l0 import L0Sampler, OneSparseCell, cell_update, recover_one_sparse
from .metrics import adjusted_rand_index, dbcvi_score, silhouette
from .sketch import GraphSketch, NodeSketch
from .stream import EdgeUpdate, WeightGrid, canonical_edge_id, edge_from_id, parse_stream

__all__ = [
    "ClusterPartition", "CutScan", "DBMSTClu", "EdgeUpdate", "GraphSketch", "L0Sampler",
    "NodeSketch", "OneSparseCell", "SEMST", "SpanningForest", "WeightGrid",
    "adjusted_rand_index", "canonical_edge_id", "cell_update", "dbcvi_score", "dbmstclu",
    "double_dfs", "edge_from_id", "evaluate_cut", "exact_mst", "find_best_cut",
    "parse_stream", "recover_one_sparse", "semst", "silhouette",
]
