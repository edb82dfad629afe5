"""Noise-robust training with a stage-wise discriminating loss."""

from .data import (
    Dataset,
    IdxCountMismatchError,
    IdxFormatError,
    IdxMagicError,
    IdxTruncatedError,
    dataset_from_csv,
    dataset_to_csv,
    inject_regression_noise,
    inject_symmetric_noise,
    load_mnist_idx,
    make_blobs,
    make_regression,
    write_idx,
)
from .loss_core import (
    DiscrimConfig,
    SampleState,
    ScheduleNotWarmedError,
    ThresholdSchedule,
    delta_gradient,
    discrim_loss,
    effective_weight,
    es_factor,
    update_avg_loss,
    update_delta,
)
from .models import (
    CrossEntropy,
    L2,
    LinearRegressor,
    LinearSoftmax,
    Mlp,
    SmoothL1,
    softmax,
)
from .presets import PRESETS, SchedulePreset
from .trainer import (
    RunRecord,
    TrainConfig,
    TrainingDivergedError,
    evaluate,
    fluctuation_counts,
    normalized_loss_snapshot,
    train,
)

__all__ = [
    "Dataset",
    "DiscrimConfig",
    "SampleState",
    "ScheduleNotWarmedError",
    "ThresholdSchedule",
    "CrossEntropy",
    "L2",
    "LinearRegressor",
    "LinearSoftmax",
    "Mlp",
    "SmoothL1",
    "RunRecord",
    "TrainConfig",
    "TrainingDivergedError",
    "PRESETS",
    "SchedulePreset",
    "IdxFormatError",
    "IdxMagicError",
    "IdxTruncatedError",
    "IdxCountMismatchError",
    "delta_gradient",
    "discrim_loss",
    "effective_weight",
    "es_factor",
    "update_avg_loss",
    "update_delta",
    "softmax",
    "evaluate",
    "train",
    "fluctuation_counts",
    "normalized_loss_snapshot",
    "dataset_from_csv",
    "dataset_to_csv",
    "inject_regression_noise",
    "inject_symmetric_noise",
    "load_mnist_idx",
    "make_blobs",
    "make_regression",
    "write_idx",
]

__version__ = "0.1.0"
