"""Prototype condensation for the 1-NN rule with certified size bounds.

The package turns a classical compression heuristic into something a kernel
machine can reason about: condensing a training set to a consistent prototype
subset is, at a suitable Gaussian bandwidth, the same computation as running
a multiclass perceptron in a channeled feature space. That identification
makes perceptron mistake bounds apply to the condensed set, and both the
bandwidth certificate and the margin bound are computable objects here.
"""

from .cnn import (
    OnlineResult,
    UpdateEvent,
    UpdateTrace,
    default_checkpoints,
    run_cnn,
    run_cnn_online,
)
from .dataset import (
    ConflictingDuplicateError,
    Dataset,
    DatasetError,
    LabeledPoint,
    blob_stream,
    fuzz_dataset,
    generate_blobs,
    load_csv,
    random_dataset,
    write_csv,
)
from .kernel_machine import (
    DualWeightVector,
    KernelConfig,
    PassBudgetError,
    UpdateRecord,
    argmax_class,
    kernel_eval,
    kernel_log_eval,
    log_kernel_row,
    run_mp,
    score,
    shifted_class_scores,
)
from .margin_bound import (
    DEFAULT_MAX_ITERS,
    DEFAULT_TOL,
    BoundReport,
    DifferenceVectorSet,
    GridSearchReport,
    MarginCertificate,
    NoCertifiedSigmaError,
    NotSeparableError,
    UncertifiedSigmaError,
    VacuousBoundError,
    bound_infimum,
    cnn_bound,
    default_sigma_grid,
    margin,
    radius,
)
from .neighborly import (
    DEFAULT_EXHAUSTIVE_CAP,
    DEFAULT_SAMPLED_TRIALS,
    ExhaustiveCapError,
    GammaDegenerateError,
    SigmaCertificate,
    Violation,
    bisect_sigma,
    min_squared_gap,
    replay_violation,
    sufficient_sigma,
    verify_neighborly,
)
from .nn_rule import (
    EmptyPrototypeSetError,
    PrototypeSet,
    classify,
    is_consistent,
    nearest,
    sq_dists_to,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_EXHAUSTIVE_CAP",
    "DEFAULT_MAX_ITERS",
    "DEFAULT_SAMPLED_TRIALS",
    "DEFAULT_TOL",
    "BoundReport",
    "ConflictingDuplicateError",
    "Dataset",
    "DatasetError",
    "DifferenceVectorSet",
    "DualWeightVector",
    "EmptyPrototypeSetError",
    "ExhaustiveCapError",
    "GammaDegenerateError",
    "GridSearchReport",
    "KernelConfig",
    "LabeledPoint",
    "MarginCertificate",
    "NoCertifiedSigmaError",
    "NotSeparableError",
    "OnlineResult",
    "PassBudgetError",
    "PrototypeSet",
    "SigmaCertificate",
    "UncertifiedSigmaError",
    "UpdateEvent",
    "UpdateRecord",
    "UpdateTrace",
    "VacuousBoundError",
    "Violation",
    "argmax_class",
    "bisect_sigma",
    "blob_stream",
    "bound_infimum",
    "classify",
    "cnn_bound",
    "default_checkpoints",
    "default_sigma_grid",
    "fuzz_dataset",
    "generate_blobs",
    "is_consistent",
    "kernel_eval",
    "kernel_log_eval",
    "load_csv",
    "log_kernel_row",
    "margin",
    "min_squared_gap",
    "nearest",
    "radius",
    "random_dataset",
    "replay_violation",
    "run_cnn",
    "run_cnn_online",
    "run_mp",
    "score",
    "shifted_class_scores",
    "sq_dists_to",
    "sufficient_sigma",
    "verify_neighborly",
    "write_csv",
]
