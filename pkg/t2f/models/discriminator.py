"""
Matching-aware discriminator.

    image ─(conv 4/2/1 [+bn] → leaky) × stages→ γ (top_channels × 4 × 4)
    φ(t) ─affine+leaky→ r ─tile→ reduce_dim × 4 × 4
    [γ ; r] ─conv 4/1/0→ logit ─sigmoid→ score
"""

from typing import Literal, Optional

import numpy as np

from t2f.engine import Tensor
from t2f.engine import functional as F
from t2f.errors import ContractError
from t2f.models.params import DiscriminatorParams

Mode = Literal["train", "infer"]

RANGE_TOLERANCE = 1e-4


def discriminator_forward(params: DiscriminatorParams, image: Tensor, phi_t: Tensor,
                          mode: Mode = "train", trace: Optional[list] = None) -> Tensor:
    """Scores of shape (n,) in (0, 1), one per batch row."""
    cfg = params.config
    if image.ndim != 4 or image.shape[1:] != (3, cfg.image_size, cfg.image_size):
        raise ContractError(f"image batch shape {image.shape}, expected (n, 3, {cfg.image_size}, {cfg.image_size})")
    n = image.shape[0]
    if phi_t.shape != (n, cfg.text_dim):
        raise ContractError(f"text embedding shape {phi_t.shape}, expected ({n}, {cfg.text_dim})")
    peak = float(np.max(np.abs(image.data))) if image.size else 0.0
    if peak > 1.0 + RANGE_TOLERANCE:
        raise ContractError(f"image values reach {peak:.4f}, expected range [-1, 1]")

    slope = cfg.leaky_slope
    h = F.leaky_relu(F.conv2d(image, params["conv1.kernel"], stride=2, pad=1, bias=params["conv1.bias"]), slope)
    for i in range(2, cfg.stages + 1):
        h = F.conv2d(h, params[f"conv{i}.kernel"], stride=2, pad=1)
        h = F.batchnorm(h, params[f"bn{i}.gamma"], params[f"bn{i}.beta"], mode, params.running[f"bn{i}"])
        h = F.leaky_relu(h, slope)
    if trace is not None:
        trace.append(("gamma", h.shape))

    reduced = F.leaky_relu(F.affine(phi_t, params["reduce.w"], params["reduce.b"]), slope)
    joint = F.concat([h, F.tile_spatial(reduced, 4, 4)], axis=1)
    logit = F.conv2d(joint, params["final.kernel"], stride=1, pad=0)
    if trace is not None:
        trace.extend([("joint", joint.shape), ("logit", logit.shape)])
    return F.sigmoid(F.reshape(logit, (n,)))
