"""Representation alignment toolkit.

Similarity metrics between representations of the same objects, top-k sparse
autoencoders, permutation-matched code correlation, a synthetic
sparse-dictionary model with certified bounds, and the downstream analyses
(debiasing, frequency trends, specification regression).
"""

__version__ = "0.1.0"

from .analysis import Debiaser, ModelSpec, RidgeDecomposition, debias  # noqa: E402
from .matching import MatchResult, NullDistribution, assignment_max, permutation_correlation, permutation_null  # noqa: E402
from .metrics import AlignmentReport, MetricId, compute_metric, subsampled_alignment  # noqa: E402
from .sae import SaeConfig, SaeParams, TopKSAE  # noqa: E402

__all__ = [
    "__version__",
    "AlignmentReport", "Debiaser", "MatchResult", "MetricId", "ModelSpec", "NullDistribution",
    "RidgeDecomposition", "SaeConfig", "SaeParams", "TopKSAE",
    "assignment_max", "compute_metric", "debias", "permutation_correlation", "permutation_null",
    "subsampled_alignment",
]
