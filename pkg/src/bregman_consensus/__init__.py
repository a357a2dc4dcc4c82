"""Consensus labeling from classifier and cluster ensembles.

Given per-instance class probabilities from a classifier ensemble and a
co-association similarity from a cluster ensemble over the same target set,
the solver consolidates both into a single probabilistic labeling by
alternating closed-form Bregman updates.  See :class:`BregmanConsensus` for
the estimator-style entry point and :mod:`bregman_consensus.solver` for the
functional core.
"""

from .divergences import (
    DivergenceKind,
    DivergenceSpec,
    divergence_spec,
    parse_divergence,
    validate_point,
)
from .ensemble_inputs import (
    SimilarityMatrix,
    average_class_probabilities,
    coassociation_similarity,
    sparsify,
)
from .estimator import BregmanConsensus, check_probabilities, check_similarity
from .solver import (
    Labeling,
    SolverConfig,
    SolverState,
    lambda_threshold,
    minimize_j0,
    objective_j,
    objective_j0,
    run,
    update_left,
    update_right,
)

__version__ = "0.1.0"

__all__ = [
    "BregmanConsensus",
    "DivergenceKind",
    "DivergenceSpec",
    "Labeling",
    "SimilarityMatrix",
    "SolverConfig",
    "SolverState",
    "average_class_probabilities",
    "check_probabilities",
    "check_similarity",
    "coassociation_similarity",
    "divergence_spec",
    "lambda_threshold",
    "minimize_j0",
    "objective_j",
    "objective_j0",
    "parse_divergence",
    "run",
    "sparsify",
    "update_left",
    "update_right",
    "validate_point",
    "__version__",
]
