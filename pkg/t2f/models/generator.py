"""
Text-conditional DC-GAN generator.

    φ(t) ─affine+leaky→ r (reduce_dim)
    θ = [z, r]  ─affine→ θ_proj ─reshape→ top_channels × 4 × 4 ─bn+leaky→
    (deconv 4/2/1 → bn → leaky) × (stages − 1) → deconv 4/2/1 → tanh
"""

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from t2f.engine import Tensor
from t2f.engine import functional as F
from t2f.errors import ContractError
from t2f.models.config import ModelConfig
from t2f.models.params import GeneratorParams

Mode = Literal["train", "infer"]


@dataclass
class LatentInput:
    z: Tensor        # (n, noise_dim)
    phi_t: Tensor    # (n, text_dim)

    @property
    def batch_size(self) -> int:
        return self.z.shape[0]


def sample_noise(rng: np.random.Generator, n: int, config: ModelConfig) -> np.ndarray:
    if config.noise_range == "symmetric":
        return rng.uniform(-1.0, 1.0, size=(n, config.noise_dim))
    return rng.uniform(0.0, 1.0, size=(n, config.noise_dim))


def make_latent(rng: np.random.Generator, phi_t: np.ndarray, config: ModelConfig) -> LatentInput:
    phi_t = np.atleast_2d(phi_t)
    return LatentInput(z=Tensor(sample_noise(rng, phi_t.shape[0], config)), phi_t=Tensor(phi_t))


def generator_forward(params: GeneratorParams, latent: LatentInput, mode: Mode = "train",
                      trace: Optional[list] = None) -> Tensor:
    """Images of shape (n, 3, s, s) in (-1, 1)."""
    cfg = params.config
    n = latent.batch_size
    if latent.phi_t.shape != (n, cfg.text_dim):
        raise ContractError(f"text embedding shape {latent.phi_t.shape}, expected ({n}, {cfg.text_dim})")
    if latent.z.shape != (n, cfg.noise_dim):
        raise ContractError(f"noise shape {latent.z.shape}, expected ({n}, {cfg.noise_dim})")

    slope = cfg.leaky_slope
    reduced = F.leaky_relu(F.affine(latent.phi_t, params["reduce.w"], params["reduce.b"]), slope)
    theta = F.concat([latent.z, reduced], axis=1)
    projected = F.affine(theta, params["proj.w"], params["proj.b"])
    h = F.reshape(projected, (n, cfg.top_channels, 4, 4))
    h = F.leaky_relu(F.batchnorm(h, params["bn0.gamma"], params["bn0.beta"], mode, params.running["bn0"]), slope)
    if trace is not None:
        trace.extend([("theta", theta.shape), ("theta_proj", projected.shape), ("h0", h.shape)])

    for i in range(1, cfg.stages):
        h = F.deconv2d(h, params[f"deconv{i}.kernel"], stride=2, pad=1)
        h = F.batchnorm(h, params[f"bn{i}.gamma"], params[f"bn{i}.beta"], mode, params.running[f"bn{i}"])
        h = F.leaky_relu(h, slope)
        if trace is not None:
            trace.append((f"h{i}", h.shape))

    image = F.tanh(F.deconv2d(h, params[f"deconv{cfg.stages}.kernel"], stride=2, pad=1))
    if trace is not None:
        trace.append(("image", image.shape))
    return image
