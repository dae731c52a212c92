"""
Image files at the dataset boundary.

In memory an image is a (3, s, s) float array in [-1, 1]; on disk it is 8-bit
RGB, binary PPM (P6) by default. Quantization happens only here.
"""

import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from PIL import Image

from t2f.errors import ContractError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def to_uint8(image: np.ndarray) -> np.ndarray:
    """(3, h, w) in [-1, 1] → (h, w, 3) uint8."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[0] != 3:
        raise ContractError(f"expected a (3, h, w) image, got {image.shape}")
    scaled = np.rint((np.clip(image, -1.0, 1.0) + 1.0) * 127.5)
    return scaled.astype(np.uint8).transpose(1, 2, 0)


def from_uint8(pixels: np.ndarray) -> np.ndarray:
    """(h, w, 3) uint8 → (3, h, w) float64 in [-1, 1]."""
    return (np.asarray(pixels, dtype=np.float64) / 127.5 - 1.0).transpose(2, 0, 1)


def save_image(image: np.ndarray, path: PathLike) -> Path:
    path = Path(path)
    fmt = "PPM" if path.suffix.lower() in (".ppm", ".pnm") else None
    Image.fromarray(to_uint8(image)).save(path, format=fmt)
    return path


def load_image(path: PathLike, size: Optional[int] = None) -> np.ndarray:
    """
    Read any Pillow-supported RGB image as (3, s, s) in [-1, 1].

    With `size`, the image is centre-cropped to a square and resized.
    """
    with Image.open(path) as im:
        im = im.convert("RGB")
        if size is not None:
            im = center_square(im)
            if im.size != (size, size):
                im = im.resize((size, size), Image.Resampling.BILINEAR)
        return from_uint8(np.asarray(im))


def center_square(im: Image.Image) -> Image.Image:
    w, h = im.size
    side = min(w, h)
    left, top = (w - side) // 2, (h - side) // 2
    return im.crop((left, top, left + side, top + side))


def image_grid(images: Sequence[np.ndarray], cols: int = 8, pad: int = 1) -> np.ndarray:
    """Tile (3, s, s) images row-major into one (3, H, W) image on a white field."""
    if not len(images):
        raise ContractError("image grid needs at least one image")
    images = [np.asarray(im) for im in images]
    s = images[0].shape[-1]
    cols = max(1, min(cols, len(images)))
    rows = -(-len(images) // cols)
    step = s + pad
    grid = np.ones((3, rows * step + pad, cols * step + pad))
    for k, im in enumerate(images):
        r, c = divmod(k, cols)
        grid[:, pad + r * step:pad + r * step + s, pad + c * step:pad + c * step + s] = im
    return grid


def save_image_grid(images: Sequence[np.ndarray], path: PathLike, cols: int = 8) -> Path:
    path = save_image(image_grid(images, cols), path)
    logger.info(f"Wrote {len(images)}-image grid to {path}")
    return path
