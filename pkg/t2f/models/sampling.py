"""Inference-mode sampling from a trained generator."""

import logging
from typing import Optional, Sequence

import numpy as np

from t2f.embedding import EmbeddingConfig, embed_captions
from t2f.engine import Tensor
from t2f.models.checkpoint import ModelCheckpoint
from t2f.models.generator import LatentInput, generator_forward, sample_noise
from t2f.models.params import GeneratorParams

logger = logging.getLogger(__name__)


def embedding_config_of(ckpt: ModelCheckpoint) -> EmbeddingConfig:
    """The caption embedding a checkpoint was trained with."""
    stored = ckpt.meta.get("embedding")
    if stored:
        return EmbeddingConfig(**stored)
    return EmbeddingConfig(dim=ckpt.model.text_dim)


def sample_images(generator: GeneratorParams, phi: np.ndarray, rng: np.random.Generator,
                  batch_size: int = 64) -> np.ndarray:
    """One image per row of `phi`, (n, 3, s, s), using batchnorm running statistics."""
    phi = np.atleast_2d(phi)
    out = []
    for start in range(0, phi.shape[0], batch_size):
        chunk = phi[start:start + batch_size]
        z = sample_noise(rng, chunk.shape[0], generator.config)
        out.append(generator_forward(generator, LatentInput(Tensor(z), Tensor(chunk)), "infer").data)
    return np.concatenate(out) if out else np.zeros((0, 3, generator.config.image_size, generator.config.image_size))


def generate_from_captions(ckpt: ModelCheckpoint, captions: Sequence[str], seed: int = 0,
                           embedding_config: Optional[EmbeddingConfig] = None,
                           batch_size: int = 64) -> np.ndarray:
    config = embedding_config or embedding_config_of(ckpt)
    phi = embed_captions(captions, config)
    images = sample_images(ckpt.generator, phi, np.random.default_rng(seed), batch_size)
    logger.debug(f"Sampled {len(images)} images at iteration {ckpt.iteration}")
    return images
