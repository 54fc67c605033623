"""Consensus embedding of multi-view graph collections.

Stacks each view's symmetric affinity matrices into a partially symmetric
tensor, factors all views jointly with a consensus-regularized rank-R
model, and clusters the shared subject embedding.
"""

from .cluster import (BinaryMetrics, ClusteringReport, KmeansResult, LabelMatch,
                      binary_metrics, cluster_and_score, kmeans, lloyd, match_labels)
from .cp import AlsOptions, CpFactors, CpFit, cp_als_fit, cp_relative_error
from .datagen import SyntheticSpec, bp_shape_preset, generate, hiv_shape_preset
from .dataio import Dataset, DatasetError, load_dataset, load_matrix, save_dataset, save_matrix
from .runner import (GridSpec, RunConfig, run_cluster, run_cp, run_evaluate,
                     run_fit, run_gridsearch)
from .solver import (M2eConfig, M2eSolution, M2eState, SolverNumericsError,
                     balanced_penalty, coupling_residual, lipschitz_constant,
                     m2e_ds_fit, m2e_fit, m2e_ts_fit, objective_value,
                     proximal_step, quadratic_objective, spectral_start,
                     update_consensus, update_dual, update_node_factor,
                     update_aux_factor, update_subject_factor)
from .tensors import (GraphViewTensor, check_partial_symmetry, cp_reconstruct,
                      frobenius_norm, hadamard, khatri_rao, matricize, refold,
                      symmetrize_slices)

__version__ = "0.1.0"

__all__ = [
    "AlsOptions", "BinaryMetrics", "ClusteringReport", "CpFactors", "CpFit",
    "Dataset", "DatasetError", "GraphViewTensor", "GridSpec", "KmeansResult",
    "LabelMatch", "M2eConfig", "M2eSolution", "M2eState", "RunConfig",
    "SolverNumericsError", "SyntheticSpec", "balanced_penalty", "binary_metrics",
    "bp_shape_preset",
    "check_partial_symmetry", "cluster_and_score", "coupling_residual",
    "cp_als_fit", "cp_reconstruct", "cp_relative_error", "frobenius_norm",
    "generate", "hadamard", "hiv_shape_preset", "khatri_rao", "kmeans",
    "lipschitz_constant", "lloyd", "load_dataset", "load_matrix", "m2e_ds_fit",
    "m2e_fit", "m2e_ts_fit", "match_labels", "matricize", "objective_value",
    "proximal_step", "quadratic_objective", "refold", "run_cluster", "run_cp",
    "spectral_start",
    "run_evaluate", "run_fit", "run_gridsearch", "save_dataset", "save_matrix",
    "symmetrize_slices", "update_aux_factor", "update_consensus", "update_dual",
    "update_node_factor", "update_subject_factor",
]
