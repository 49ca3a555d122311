"""Sample-size bias analysis for confusion-matrix classification metrics:
matrix-space enumeration, hole audits, the MATCH significance test, and
cross-prior smoothing, plus a Monte-Carlo study harness.
"""
from .core import (
    CellProbabilities,
    ConfusionMatrix,
    cell_value_count,
    enumerate_matrices,
    matrix_probability,
    space_cardinality,
)
from .cps import CpsConfig, prior_comparison, reference_from_totals, smooth, theoretical_bias, theoretical_variance
from .match import MatchQuery, MatchResult, run_match
from .metrics import (
    Family,
    MetricId,
    MetricResult,
    count_holes_closed_form,
    count_holes_enumerated,
    count_holes_enumerated_pair,
    evaluate,
    evaluate_pair,
)
from .experiments import (
    ExperimentRecord,
    GroupSpec,
    Policy,
    StudyConfig,
    compas_groups,
    ingest_groups,
    run_study,
    score_distribution,
    write_records,
)

__all__ = [
    "CellProbabilities",
    "ConfusionMatrix",
    "CpsConfig",
    "ExperimentRecord",
    "Family",
    "GroupSpec",
    "MatchQuery",
    "MatchResult",
    "MetricId",
    "MetricResult",
    "Policy",
    "StudyConfig",
    "cell_value_count",
    "compas_groups",
    "count_holes_closed_form",
    "count_holes_enumerated",
    "count_holes_enumerated_pair",
    "enumerate_matrices",
    "evaluate",
    "evaluate_pair",
    "ingest_groups",
    "matrix_probability",
    "prior_comparison",
    "reference_from_totals",
    "run_match",
    "run_study",
    "score_distribution",
    "smooth",
    "space_cardinality",
    "theoretical_bias",
    "theoretical_variance",
    "write_records",
]

__version__ = "0.1.0"
