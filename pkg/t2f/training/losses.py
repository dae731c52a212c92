"""
GAN-CLS objectives over discriminator scores.

    L_D = −[ log D(x, φt) + ½ · ( log(1 − D(x, φt̂)) + log(1 − D(x̃, φt)) ) ]
    L_G = −log D(x̃, φt)

Every log clamps its input at 1e-8; each term is a batch mean. With label noise
the hard 1/0 targets become 1 − u and u, u ~ U[0, noise) per sample, and each
log term becomes the matching binary cross-entropy.
"""

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from t2f.engine import Tensor, get_dtype
from t2f.engine import functional as F
from t2f.errors import ContractError, DimensionError
from t2f.models.discriminator import discriminator_forward
from t2f.models.params import DiscriminatorParams

Mode = Literal["train", "infer"]


@dataclass
class DiscriminatorScores:
    real_match: Tensor       # D(x, φt)
    real_mismatch: Tensor    # D(x̂, φt̂)
    fake_match: Tensor       # D(x̃, φt)


@dataclass
class LabelTargets:
    real: np.ndarray         # (n,) near 1
    fake: np.ndarray         # (n,) near 0


def noisy_labels(n: int, noise: float, rng: np.random.Generator) -> LabelTargets:
    if not 0.0 <= noise <= 0.5:
        raise ContractError(f"label noise must lie in [0, 0.5], got {noise}")
    u = rng.uniform(0.0, noise, size=(2, n)).astype(get_dtype())
    return LabelTargets(real=1.0 - u[0], fake=u[1])


def _log_likelihood(score: Tensor, target: np.ndarray) -> Tensor:
    """Batch mean of t·log D + (1 − t)·log(1 − D)."""
    return F.mean(F.add(F.mul(F.log(score), target), F.mul(F.log(F.sub(1.0, score)), 1.0 - target)))


def _check(*scores: Tensor) -> None:
    shapes = {s.shape for s in scores}
    if len(shapes) != 1:
        raise DimensionError(f"score batches disagree: {sorted(shapes)}")


def discriminator_loss(real_match: Tensor, real_mismatch: Tensor, fake_match: Tensor,
                       targets: Optional[LabelTargets] = None) -> Tensor:
    _check(real_match, real_mismatch, fake_match)
    if targets is None:
        match_term = F.mean(F.log(real_match))
        mismatch_term = F.mean(F.log(F.sub(1.0, real_mismatch)))
        fake_term = F.mean(F.log(F.sub(1.0, fake_match)))
    else:
        if targets.real.shape != real_match.shape or targets.fake.shape != real_match.shape:
            raise DimensionError(f"label targets {targets.real.shape} do not match scores {real_match.shape}")
        match_term = _log_likelihood(real_match, targets.real)
        mismatch_term = _log_likelihood(real_mismatch, targets.fake)
        fake_term = _log_likelihood(fake_match, targets.fake)
    total = F.add(match_term, F.mul(F.add(mismatch_term, fake_term), 0.5))
    return F.mul(total, -1.0)


def generator_loss(fake_match: Tensor) -> Tensor:
    """Non-saturating form: maximize log D rather than minimize log(1 − D)."""
    return F.mul(F.mean(F.log(fake_match)), -1.0)


def score_discriminator(disc: DiscriminatorParams, real: Tensor, phi: Tensor,
                        mismatch_images: Tensor, mismatch_phi: Tensor, fake: Tensor,
                        mode: Mode = "train") -> DiscriminatorScores:
    """Run D over the three GAN-CLS input pairs."""
    return DiscriminatorScores(
        real_match=discriminator_forward(disc, real, phi, mode),
        real_mismatch=discriminator_forward(disc, mismatch_images, mismatch_phi, mode),
        fake_match=discriminator_forward(disc, fake, phi, mode),
    )


def gancls_discriminator_loss(disc: DiscriminatorParams, real: Tensor, phi: Tensor,
                              mismatch_images: Tensor, mismatch_phi: Tensor, fake: Tensor,
                              mode: Mode = "train",
                              targets: Optional[LabelTargets] = None) -> tuple[Tensor, DiscriminatorScores]:
    scores = score_discriminator(disc, real, phi, mismatch_images, mismatch_phi, fake, mode)
    return discriminator_loss(scores.real_match, scores.real_mismatch, scores.fake_match, targets), scores


def gancls_generator_loss(disc: DiscriminatorParams, fake: Tensor, phi: Tensor,
                          mode: Mode = "train") -> tuple[Tensor, Tensor]:
    scores = discriminator_forward(disc, fake, phi, mode)
    return generator_loss(scores), scores
