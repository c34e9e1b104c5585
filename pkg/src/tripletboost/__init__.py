"""Boosted Mahalanobis metric learning from proximity-comparison triplets.

The package learns a positive semidefinite matrix X so that the distance
sqrt((a-b)^T X (a-b)) respects "i is closer to j than to k" triplets. X is
built as a nonnegative combination of trace-one rank-one matrices found by
eigen-decomposition and sized by exact line search, and comes with an
evaluation harness (kNN error, retrieval precision, regularization sweeps)
plus a CLI for training, evaluating, and projecting datasets.
"""

from .backends import available_backends, backend_name
from .boost import (
    AuditFrame,
    IterationRecord,
    TrainConfig,
    TrainState,
    TrainingError,
    check_convergence,
    dual_feasibility_gap,
    line_search_w,
    operator_from_factors,
    primal_objective,
    train,
    update_dual,
)
from .constraints import (
    ConstraintFactors,
    Dataset,
    TripletConstraint,
    eval_full,
    eval_rank_one,
    factors_from_dataset,
    factors_from_triplet,
    generate_triplets,
    stack_factors,
)
from .datasets import make_circles, make_gaussian_classes
from .evaluate import (
    ExperimentResult,
    ExperimentSpec,
    PcaBasis,
    RetrievalResult,
    VSweepResult,
    classification_error,
    knn_predict,
    pca_fit,
    pca_project,
    precision_at_cutoffs,
    retrieval_precision,
    stratified_split,
    v_sweep,
)
from .linalg import (
    EigenPair,
    EigenSolverError,
    SymmetricOperator,
    dense_evd,
    largest_eigenpair,
    operator_from_matrix,
)
from .metric import (
    BasisElement,
    MetricConsistencyError,
    MetricModel,
    ModelFormatError,
    identity_model,
    load,
    save,
    squared_distance,
    transform_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "AuditFrame",
    "BasisElement",
    "ConstraintFactors",
    "Dataset",
    "EigenPair",
    "EigenSolverError",
    "ExperimentResult",
    "ExperimentSpec",
    "IterationRecord",
    "MetricConsistencyError",
    "MetricModel",
    "ModelFormatError",
    "PcaBasis",
    "RetrievalResult",
    "SymmetricOperator",
    "TrainConfig",
    "TrainState",
    "TrainingError",
    "TripletConstraint",
    "VSweepResult",
    "available_backends",
    "backend_name",
    "check_convergence",
    "classification_error",
    "dense_evd",
    "dual_feasibility_gap",
    "eval_full",
    "eval_rank_one",
    "factors_from_dataset",
    "factors_from_triplet",
    "generate_triplets",
    "identity_model",
    "knn_predict",
    "largest_eigenpair",
    "line_search_w",
    "load",
    "make_circles",
    "make_gaussian_classes",
    "operator_from_factors",
    "operator_from_matrix",
    "pca_fit",
    "pca_project",
    "precision_at_cutoffs",
    "primal_objective",
    "retrieval_precision",
    "save",
    "squared_distance",
    "stack_factors",
    "stratified_split",
    "train",
    "transform_matrix",
    "update_dual",
    "v_sweep",
]
