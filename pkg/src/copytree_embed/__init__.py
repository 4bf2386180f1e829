"""Deterministic copy tree embeddings and the online and demand-robust
group Steiner solvers built on top of them."""

from .decomposition import (
    GoodStartError,
    HierarchicalDecomposition,
    PaddedFamily,
    calibrate_alpha,
    derandomized_decomposition,
    padded_family,
    pessimistic_estimate,
)
from .embedding import (
    CopyTreeEmbedding,
    EmbeddingError,
    build_construction1,
    build_construction2,
    build_demand_robust,
    verify_embedding,
)
from .graph import GraphError, Metric, RootedTree, WeightedGraph, shortest_path_metric
from .online import (
    ContractViolation,
    greedy_tree_solver,
    online_gsf_driver,
    online_gst_driver,
    partial_gst_general,
    water_fill_reveal,
)
from .robust import RobustInstance, Scenario, solve_robust_general, solve_robust_tree

__version__ = "0.1.0"

__all__ = [
    "ContractViolation",
    "CopyTreeEmbedding",
    "EmbeddingError",
    "GoodStartError",
    "GraphError",
    "HierarchicalDecomposition",
    "Metric",
    "PaddedFamily",
    "RobustInstance",
    "RootedTree",
    "Scenario",
    "WeightedGraph",
    "build_construction1",
    "build_construction2",
    "build_demand_robust",
    "calibrate_alpha",
    "derandomized_decomposition",
    "greedy_tree_solver",
    "online_gsf_driver",
    "online_gst_driver",
    "padded_family",
    "partial_gst_general",
    "pessimistic_estimate",
    "shortest_path_metric",
    "solve_robust_general",
    "solve_robust_tree",
    "verify_embedding",
    "water_fill_reveal",
]
