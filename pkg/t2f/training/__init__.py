from t2f.training.config import MismatchStrategy, TrainConfig, load_train_config, parse_train_config
from t2f.training.losses import (
    DiscriminatorScores,
    LabelTargets,
    discriminator_loss,
    gancls_discriminator_loss,
    gancls_generator_loss,
    generator_loss,
    noisy_labels,
)
from t2f.training.batches import (
    Batch,
    MismatchSample,
    TrainingSet,
    apply_label_swap,
    batch_indices,
    make_batch,
    sample_mismatch,
)
from t2f.training.reports import JsonlReportWriter, ReportStream, TrainStepReport, drain, read_reports
from t2f.training.trainer import (
    ControlComparison,
    RunSummary,
    TrainResult,
    TrainState,
    train_loop,
    train_step,
    train_with_control,
)

__all__ = [
    "MismatchStrategy",
    "TrainConfig",
    "load_train_config",
    "parse_train_config",
    "DiscriminatorScores",
    "LabelTargets",
    "discriminator_loss",
    "gancls_discriminator_loss",
    "gancls_generator_loss",
    "generator_loss",
    "noisy_labels",
    "Batch",
    "MismatchSample",
    "TrainingSet",
    "apply_label_swap",
    "batch_indices",
    "make_batch",
    "sample_mismatch",
    "JsonlReportWriter",
    "ReportStream",
    "TrainStepReport",
    "drain",
    "read_reports",
    "ControlComparison",
    "RunSummary",
    "TrainResult",
    "TrainState",
    "train_loop",
    "train_step",
    "train_with_control",
]
