"""
Training data view, mismatch sampling and the real/fake swap schedule.

Batch composition for iteration `it` depends only on (seed, it): epoch `e`
shuffles with `default_rng([seed, SHUFFLE_STREAM, e])` and mismatches draw from
`default_rng([seed, MISMATCH_STREAM, it])`, so a resumed run needs no RNG state.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from t2f.engine import Tensor
from t2f.errors import ConfigError, ContractError
from t2f.training.config import MismatchStrategy

logger = logging.getLogger(__name__)

SHUFFLE_STREAM = 0
MISMATCH_STREAM = 1
NOISE_STREAM = 2
LABEL_STREAM = 3


@dataclass
class TrainingSet:
    images: np.ndarray          # (N, 3, s, s) in [-1, 1]
    embeddings: np.ndarray      # (N, T)
    identities: np.ndarray      # (N,)

    def __post_init__(self):
        n = self.images.shape[0]
        if self.embeddings.shape[0] != n or self.identities.shape[0] != n:
            raise ContractError(
                f"training set rows disagree: images {self.images.shape[0]}, "
                f"embeddings {self.embeddings.shape[0]}, identities {self.identities.shape[0]}"
            )
        if n < 2:
            raise ContractError("a training set needs at least two records")

    @classmethod
    def from_records(cls, records: Sequence) -> "TrainingSet":
        return cls(
            images=np.stack([r.image for r in records]),
            embeddings=np.stack([r.embedding.values for r in records]),
            identities=np.array([r.identity_class for r in records], dtype=np.int64),
        )

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def text_dim(self) -> int:
        return self.embeddings.shape[1]

    @property
    def image_size(self) -> int:
        return self.images.shape[-1]

    @cached_property
    def caption_groups(self) -> np.ndarray:
        """Group id per record; records with byte-identical embeddings share one."""
        _, inverse = np.unique(self.embeddings, axis=0, return_inverse=True)
        return inverse.reshape(-1)

    @cached_property
    def least_similar(self) -> np.ndarray:
        norms = np.linalg.norm(self.embeddings, axis=1, keepdims=True)
        unit = self.embeddings / np.where(norms == 0, 1.0, norms)
        sim = unit @ unit.T
        np.fill_diagonal(sim, np.inf)
        return np.argmin(sim, axis=1)


@dataclass
class MismatchSample:
    other: int
    image: np.ndarray
    embedding: np.ndarray


@dataclass
class Batch:
    indices: np.ndarray
    real_images: Tensor
    match_embeddings: Tensor
    mismatch_images: Tensor
    mismatch_embeddings: Tensor
    mismatch_sources: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.indices)


def _candidates(dataset: TrainingSet, index: int) -> np.ndarray:
    groups = dataset.caption_groups
    pool = np.flatnonzero(groups != groups[index])
    if pool.size == 0:
        pool = np.flatnonzero(np.arange(len(dataset)) != index)
    return pool


def sample_mismatch(dataset: TrainingSet, index: int, rng: np.random.Generator,
                    strategy: MismatchStrategy = MismatchStrategy.wrong_image) -> MismatchSample:
    """
    Mismatching (image, embedding) pair for record `index`.

    wrong_image keeps the record's text and takes another record's image;
    wrong_caption keeps the image and takes another record's text;
    least_similar_caption takes the text whose embedding has the lowest cosine
    similarity to the record's own. Records sharing the caption are skipped
    whenever another caption exists, so the pair is never the matching one.
    """
    if not 0 <= index < len(dataset):
        raise ContractError(f"record index {index} outside [0, {len(dataset)})")
    strategy = MismatchStrategy(strategy)
    if strategy is MismatchStrategy.least_similar_caption:
        other = int(dataset.least_similar[index])
    else:
        pool = _candidates(dataset, index)
        other = int(pool[rng.integers(pool.size)])

    if strategy is MismatchStrategy.wrong_image:
        return MismatchSample(other, dataset.images[other], dataset.embeddings[index])
    return MismatchSample(other, dataset.images[index], dataset.embeddings[other])


def iterations_per_epoch(dataset_size: int, batch_size: int) -> int:
    if batch_size > dataset_size:
        raise ConfigError(f"batch_size {batch_size} exceeds the {dataset_size} training records")
    return dataset_size // batch_size


def batch_indices(dataset_size: int, batch_size: int, seed: int, iteration: int) -> np.ndarray:
    """Record indices for 1-based `iteration`; each epoch is a fresh permutation."""
    per_epoch = iterations_per_epoch(dataset_size, batch_size)
    epoch, slot = divmod(iteration - 1, per_epoch)
    order = np.random.default_rng([seed, SHUFFLE_STREAM, epoch]).permutation(dataset_size)
    return order[slot * batch_size:(slot + 1) * batch_size]


def make_batch(dataset: TrainingSet, batch_size: int, seed: int, iteration: int,
               strategy: MismatchStrategy = MismatchStrategy.wrong_image) -> Batch:
    indices = batch_indices(len(dataset), batch_size, seed, iteration)
    rng = np.random.default_rng([seed, MISMATCH_STREAM, iteration])
    samples = [sample_mismatch(dataset, int(i), rng, strategy) for i in indices]
    return Batch(
        indices=indices,
        real_images=Tensor(dataset.images[indices]),
        match_embeddings=Tensor(dataset.embeddings[indices]),
        mismatch_images=Tensor(np.stack([s.image for s in samples])),
        mismatch_embeddings=Tensor(np.stack([s.embedding for s in samples])),
        mismatch_sources=np.array([s.other for s in samples]),
    )


# ── Real/fake swap ───────────────────────────────────────────────────────────

def apply_label_swap(iteration: int, real: Tensor, fake: Tensor,
                     period: Optional[int] = 3) -> tuple[Tensor, Tensor, bool]:
    """
    Images fed to D as (real, fake) at `iteration`.

    Every `period`-th iteration the two are exchanged; `period=None` disables
    the swap. Text pairings are untouched.
    """
    if iteration < 1:
        raise ContractError(f"iterations count from 1, got {iteration}")
    if period is None:
        return real, fake, False
    if period < 1:
        raise ConfigError(f"swap period must be >= 1, got {period}")
    if iteration % period == 0:
        return fake, real, True
    return real, fake, False
