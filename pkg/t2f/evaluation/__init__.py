from t2f.evaluation.score import ScoreReport, class_marginal, inception_score, mean_kl, validate_probabilities
from t2f.evaluation.classifier import (
    ClassifierConfig,
    ClassProbabilityModel,
    ProbeClassifier,
    load_classifier,
    measure_confidence,
    save_classifier,
    train_probe_classifier,
)
from t2f.evaluation.experiments import (
    EvaluationReport,
    SkewPoint,
    SkewSweep,
    allocate_counts,
    closed_form_score,
    evaluate_generator,
    probe_agreement,
    run_evaluation,
    skew_sweep_experiment,
)

__all__ = [
    "ScoreReport",
    "class_marginal",
    "inception_score",
    "mean_kl",
    "validate_probabilities",
    "ClassifierConfig",
    "ClassProbabilityModel",
    "ProbeClassifier",
    "load_classifier",
    "measure_confidence",
    "save_classifier",
    "train_probe_classifier",
    "EvaluationReport",
    "SkewPoint",
    "SkewSweep",
    "allocate_counts",
    "closed_form_score",
    "evaluate_generator",
    "probe_agreement",
    "run_evaluation",
    "skew_sweep_experiment",
]
