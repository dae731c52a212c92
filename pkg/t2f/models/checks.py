"""Finite-difference checks of both networks on a tiny 16x16 configuration."""

import logging

import numpy as np

from t2f.engine import Tensor, check_gradients, precision
from t2f.engine import functional as F
from t2f.engine.gradcheck import DEFAULT_TOLERANCE, GradCheckResult
from t2f.models.config import ModelConfig
from t2f.models.discriminator import discriminator_forward
from t2f.models.generator import LatentInput, generator_forward, make_latent
from t2f.models.params import init_params

logger = logging.getLogger(__name__)

TINY = ModelConfig(image_size=16, text_dim=16, noise_dim=8, reduce_dim=8, base_channels=4, init_std=0.3)


def _unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    x = rng.normal(size=(n, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def network_suite(seed: int = 0, tolerance: float = DEFAULT_TOLERANCE,
                  max_coords: int = 6, config: ModelConfig = TINY) -> list[GradCheckResult]:
    """
    Gradient checks for the generator (mean-pixel loss), the discriminator
    (mean score) and D(G(z, φ), φ) with respect to every generator tensor.
    """
    results = []
    with precision(64):
        rng = np.random.default_rng([seed, 42])
        gen, disc = init_params(seed, config)
        phi = _unit_rows(rng, 4, config.text_dim)
        latent = make_latent(rng, phi, config)
        images = Tensor(rng.uniform(-1.0, 1.0, size=(4, 3, config.image_size, config.image_size)))

        results.append(check_gradients(
            "generator", lambda: F.mean(generator_forward(gen, latent, "train")),
            dict(gen.items()), tolerance=tolerance, max_coords=max_coords, seed=seed))
        results.append(check_gradients(
            "discriminator", lambda: F.mean(discriminator_forward(disc, images, latent.phi_t, "train")),
            dict(disc.items()), tolerance=tolerance, max_coords=max_coords, seed=seed))

        def end_to_end():
            fake = generator_forward(gen, LatentInput(latent.z, latent.phi_t), "train")
            return F.mean(discriminator_forward(disc, fake, latent.phi_t, "train"))

        results.append(check_gradients(
            "D(G(z))", end_to_end, dict(gen.items()), tolerance=tolerance,
            max_coords=max_coords, seed=seed + 1))
    for r in results:
        logger.debug(f"{r.name}: {r.max_rel_error:.2e} over {r.coords_checked} coords")
    return results
