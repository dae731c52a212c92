"""
Inception-style score over any class-probability matrix.

For each split s of the rows, p̂_s(y) is the split's column mean and

    score_s = exp( mean_x KL( p(y|x) || p̂_s(y) ) )

The report carries the exponentiated score (primary) and the raw mean KL,
per split and aggregated (mean, population std), plus the marginal entropy
H(p(y)) and the mean conditional entropy over all rows. Conditionals that are
confident give a low conditional entropy; a diverse marginal gives a high
marginal entropy.
"""

import logging

import numpy as np
from pydantic import BaseModel
from scipy.special import rel_entr
from scipy.stats import entropy

from t2f.config.settings import settings
from t2f.errors import ContractError

logger = logging.getLogger(__name__)

ROW_TOLERANCE = 1e-6


class ScoreReport(BaseModel):
    score_exp: float
    score_std: float
    score_kl: float
    split_scores: list[float]
    split_kl: list[float]
    marginal_entropy: float
    conditional_entropy: float
    n_samples: int
    n_classes: int
    splits: int

    def summary(self) -> str:
        return f"{self.score_exp:.2f} ± {self.score_std:.2f}"


def validate_probabilities(probs: np.ndarray) -> np.ndarray:
    """Return `probs` as float64, raising ContractError naming the first invalid row."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] == 0 or probs.shape[1] == 0:
        raise ContractError(f"expected a non-empty (N, C) probability matrix, got shape {probs.shape}")
    bad = ~np.isfinite(probs).all(axis=1)
    bad |= (probs < 0).any(axis=1)
    bad |= np.abs(probs.sum(axis=1) - 1.0) > ROW_TOLERANCE
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise ContractError(f"row {row} is not a probability distribution "
                            f"(sum {probs[row].sum():.8g}, min {probs[row].min():.3g})")
    return probs


def class_marginal(probs: np.ndarray) -> np.ndarray:
    """Monte-Carlo estimate of p(y): the column mean."""
    return validate_probabilities(probs).mean(axis=0)


def mean_kl(probs: np.ndarray) -> float:
    """mean_x KL(p(y|x) || column mean), 0·log 0 taken as 0."""
    marginal = probs.mean(axis=0)
    per_row = rel_entr(probs, marginal[None, :]).sum(axis=1)
    return float(np.maximum(per_row, 0.0).mean())


def inception_score(probs: np.ndarray, splits: int = settings.eval_splits) -> ScoreReport:
    probs = validate_probabilities(probs)
    n, c = probs.shape
    if splits < 1:
        raise ContractError(f"splits must be >= 1, got {splits}")
    if n < splits:
        raise ContractError(f"{n} samples cannot be divided into {splits} splits")
    if n < splits * c:
        logger.warning(f"Only {n} samples for {splits} splits over {c} classes; split marginals will be noisy")

    split_kl = [mean_kl(part) for part in np.array_split(probs, splits)]
    split_scores = [float(np.exp(k)) for k in split_kl]
    report = ScoreReport(
        score_exp=float(np.mean(split_scores)),
        score_std=float(np.std(split_scores)),
        score_kl=float(np.mean(split_kl)),
        split_scores=split_scores,
        split_kl=split_kl,
        marginal_entropy=float(entropy(probs.mean(axis=0))),
        conditional_entropy=float(entropy(probs, axis=1).mean()),
        n_samples=n,
        n_classes=c,
        splits=splits,
    )
    logger.debug(f"Score {report.summary()} over {n} samples, {c} classes, {splits} splits")
    return report
