"""Structure, order and partition MCMC for Bayesian-network structure learning."""

__version__ = "0.1.0"

from .chain import ChainConfig, ChainTrace, edge_posterior, summarize_posterior
from .graph import (Dag, LabelledPartition, ancestor_matrix, is_acyclic,
                    outpoint_decomposition, structure_neighborhood)
from .scoring import (BgeParams, DataSet, ScoreTable, build_score_table,
                      constrained_log_score_sum, dag_log_score, node_log_score)

__all__ = [
    "ChainConfig", "ChainTrace", "edge_posterior", "summarize_posterior",
    "Dag", "LabelledPartition", "ancestor_matrix", "is_acyclic",
    "outpoint_decomposition", "structure_neighborhood",
    "BgeParams", "DataSet", "ScoreTable", "build_score_table",
    "constrained_log_score_sum", "dag_log_score", "node_log_score",
]
