"""Metric perturbations: first-order variations, splitting constructions, classification."""
from .classify import CONDITIONS, Condition, GammaReport, classify_metric
from .obstruction import ObstructionPairing, hodge_obstruction_pairing
from .splitting import (
    PipelineReport,
    SplitReport,
    default_margin_target,
    full_pipeline,
    split_clusters,
    split_exact_coexact,
    split_pm_degeneracy,
)
from .transport import TransportTensor, construct_transport_tensor, transport_matrix
from .variation import (
    DEFAULT_STEPS,
    PerturbationDirection,
    PerturbationReport,
    beltrami_variation,
    degenerate_cluster_matrix,
    derivative_report,
    eigenfunction_variation,
    eigenvalue_derivative_curl,
    eigenvalue_derivative_scalar,
    scalar_cluster_matrix,
)

__all__ = [
    "CONDITIONS", "Condition", "GammaReport", "classify_metric",
    "ObstructionPairing", "hodge_obstruction_pairing",
    "PipelineReport", "SplitReport", "default_margin_target", "full_pipeline",
    "split_clusters", "split_exact_coexact", "split_pm_degeneracy",
    "TransportTensor", "construct_transport_tensor", "transport_matrix",
    "DEFAULT_STEPS", "PerturbationDirection", "PerturbationReport", "beltrami_variation",
    "degenerate_cluster_matrix", "derivative_report", "eigenfunction_variation",
    "eigenvalue_derivative_curl", "eigenvalue_derivative_scalar", "scalar_cluster_matrix",
]
