"""
Generator evaluation and the class-skew experiment.

The skew sweep models a classifier by its confidence κ: a sample whose
identity is c gets the prediction κ·onehot(c) + (1 − κ)/C. Identities are
drawn with weights (1 − s)/C + s·[c = 0], s ∈ [0, 1], so s = 0 is a uniform
class histogram and s = 1 puts every sample in class 0. With `overlap` > 0 a
sample's identity is replaced by a uniformly random class with that
probability, standing in for captions shared between identities.
"""

import logging
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel

from t2f.captions import AttributeVector, CaptionRecord
from t2f.config.settings import settings
from t2f.dataset import PROBEABLE_ATTRIBUTES, probe_attribute
from t2f.embedding import EmbeddingConfig
from t2f.errors import ContractError
from t2f.evaluation.classifier import ClassProbabilityModel
from t2f.evaluation.score import ScoreReport, inception_score
from t2f.models import ModelCheckpoint, generate_from_captions

logger = logging.getLogger(__name__)


# ── Semantic agreement ───────────────────────────────────────────────────────

def probe_agreement(images: np.ndarray, attributes: Sequence[AttributeVector]) -> float:
    """Fraction of (image, probe-able attribute) pairs where the probe matches the caption."""
    if len(images) != len(attributes):
        raise ContractError(f"{len(images)} images but {len(attributes)} attribute vectors")
    if not len(images):
        raise ContractError("probe agreement needs at least one image")
    hits = sum(probe_attribute(image, name) == attrs[name]
               for image, attrs in zip(images, attributes)
               for name in PROBEABLE_ATTRIBUTES)
    return hits / (len(images) * len(PROBEABLE_ATTRIBUTES))


# ── Generator evaluation ─────────────────────────────────────────────────────

class EvaluationReport(BaseModel):
    score: ScoreReport
    probe_agreement: Optional[float] = None
    classes: int
    captions: int
    samples: int
    checkpoint_iteration: int


def balanced_order(captions: Sequence[CaptionRecord]) -> list[CaptionRecord]:
    """
    Captions interleaved class by class.

    Raises ContractError unless every caption has an identity class and every
    class has the same number of captions.
    """
    unlabelled = [c.image_id for c in captions if c.identity_class is None]
    if unlabelled:
        raise ContractError(f"{len(unlabelled)} captions carry no identity class (first: {unlabelled[0]})")
    by_class: dict[int, list[CaptionRecord]] = {}
    for c in captions:
        by_class.setdefault(c.identity_class, []).append(c)
    sizes = {k: len(v) for k, v in by_class.items()}
    if len(set(sizes.values())) > 1:
        lo, hi = min(sizes.values()), max(sizes.values())
        raise ContractError(f"captions are unbalanced across classes: {lo} to {hi} per class")
    groups = [by_class[k] for k in sorted(by_class)]
    return [group[i] for i in range(len(groups[0])) for group in groups]


def run_evaluation(ckpt: ModelCheckpoint, captions: Sequence[CaptionRecord],
                   classifier: ClassProbabilityModel, n_samples: int = settings.desk_samples,
                   splits: int = settings.eval_splits, seed: int = 0,
                   embedding_config: Optional[EmbeddingConfig] = None,
                   with_probes: bool = True) -> EvaluationReport:
    """
    Generate `n_samples` images cycling through the class-balanced captions,
    score them with `classifier`, and measure probe agreement when the images
    are large enough to probe.
    """
    if not captions:
        raise ContractError("no captions to evaluate")
    ordered = balanced_order(captions)
    chosen = [ordered[i % len(ordered)] for i in range(n_samples)]
    images = generate_from_captions(ckpt, [c.caption_text for c in chosen], seed, embedding_config)
    score = inception_score(classifier.predict(images), splits)

    agreement = None
    if with_probes and ckpt.model.image_size >= 16:
        agreement = probe_agreement(images, [c.attributes() for c in chosen])
    report = EvaluationReport(
        score=score,
        probe_agreement=agreement,
        classes=len({c.identity_class for c in ordered}),
        captions=len(ordered),
        samples=n_samples,
        checkpoint_iteration=ckpt.iteration,
    )
    logger.info(f"Evaluated {n_samples} samples: score {score.summary()}"
                + (f", probe agreement {agreement:.3f}" if agreement is not None else ""))
    return report


def evaluate_generator(ckpt: ModelCheckpoint, captions: Sequence[CaptionRecord],
                       classifier: ClassProbabilityModel, n_samples: int = settings.desk_samples,
                       splits: int = settings.eval_splits, seed: int = 0) -> ScoreReport:
    return run_evaluation(ckpt, captions, classifier, n_samples, splits, seed, with_probes=False).score


# ── Skew sweep ───────────────────────────────────────────────────────────────

class SkewPoint(BaseModel):
    skew: float
    score_mean: float
    score_std: float
    closed_form: float
    split_scores: list[float]


class SkewSweep(BaseModel):
    confidence: float
    classes: int
    samples: int
    splits: int
    overlap: float
    points: list[SkewPoint]

    def strictly_decreasing(self) -> bool:
        scores = [p.score_mean for p in self.points]
        return all(b < a for a, b in zip(scores, scores[1:]))


def skew_weights(skew: float, classes: int) -> np.ndarray:
    w = np.full(classes, (1.0 - skew) / classes)
    w[0] += skew
    return w


def allocate_counts(weights: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder rounding of weights·total; ties go to the lower class index."""
    raw = weights * total
    counts = np.floor(raw).astype(np.int64)
    remainder = raw - counts
    order = np.lexsort((np.arange(len(weights)), -remainder))
    counts[order[:total - counts.sum()]] += 1
    return counts


def confident_rows(labels: np.ndarray, confidence: float, classes: int) -> np.ndarray:
    rows = np.full((len(labels), classes), (1.0 - confidence) / classes)
    rows[np.arange(len(labels)), labels] += confidence
    return rows


def closed_form_score(confidence: float, fractions: np.ndarray) -> float:
    """exp of the mean KL for confident rows with class fractions `fractions`, computed per class."""
    fractions = np.asarray(fractions, dtype=np.float64)
    c = len(fractions)
    hi = confidence + (1.0 - confidence) / c
    lo = (1.0 - confidence) / c
    marginal = lo + confidence * fractions
    total = 0.0
    for k in range(c):
        if fractions[k] == 0:
            continue
        kl = hi * np.log(hi / marginal[k])
        if lo > 0:
            others = np.delete(marginal, k)
            kl += np.sum(lo * np.log(lo / others))
        total += fractions[k] * kl
    return float(np.exp(total))


def skew_sweep_experiment(confidence: float, classes: int, skew_grid: Sequence[float],
                          n: int = settings.desk_samples, splits: int = settings.eval_splits,
                          overlap: float = 0.0, seed: int = 0) -> SkewSweep:
    """
    Score synthetic confident predictions for each skew in `skew_grid`.

    Each split gets its own largest-remainder class histogram, so with
    `overlap=0` the result is deterministic and matches `closed_form`.
    """
    if not 0.0 < confidence <= 1.0:
        raise ContractError(f"confidence must lie in (0, 1], got {confidence}")
    if classes < 2:
        raise ContractError(f"need at least 2 classes, got {classes}")
    if not 0.0 <= overlap <= 1.0:
        raise ContractError(f"overlap must lie in [0, 1], got {overlap}")
    if any(not 0.0 <= s <= 1.0 for s in skew_grid):
        raise ContractError("skew values must lie in [0, 1]")
    if n < splits:
        raise ContractError(f"{n} samples cannot be divided into {splits} splits")

    rng = np.random.default_rng(seed)
    split_sizes = [len(part) for part in np.array_split(np.arange(n), splits)]
    points = []
    for skew in skew_grid:
        weights = skew_weights(skew, classes)
        labels, closed = [], []
        for size in split_sizes:
            counts = allocate_counts(weights, size)
            closed.append(closed_form_score(confidence, counts / size))
            split_labels = np.repeat(np.arange(classes), counts)
            if overlap > 0:
                swap = rng.random(size) < overlap
                split_labels[swap] = rng.integers(classes, size=int(swap.sum()))
            labels.append(split_labels)
        report = inception_score(confident_rows(np.concatenate(labels), confidence, classes), splits)
        points.append(SkewPoint(
            skew=float(skew),
            score_mean=report.score_exp,
            score_std=report.score_std,
            closed_form=float(np.mean(closed)),
            split_scores=report.split_scores,
        ))
        logger.debug(f"skew {skew:.2f}: score {report.summary()} (closed form {points[-1].closed_form:.4f})")
    return SkewSweep(confidence=confidence, classes=classes, samples=n, splits=splits,
                     overlap=overlap, points=points)
