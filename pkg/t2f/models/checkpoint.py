"""
ModelCheckpoint: both networks, their Adam states and the run configuration,
stored in the "T2FG" tensor container.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from t2f.engine import AdamState, get_dtype, get_precision
from t2f.models.config import ModelConfig
from t2f.models.params import DiscriminatorParams, GeneratorParams
from t2f.storage.container import Container, cast_arrays, read_container, write_container
from t2f.errors import CheckpointFormatError

logger = logging.getLogger(__name__)

MAGIC = b"T2FG"


@dataclass
class ModelCheckpoint:
    model: ModelConfig
    generator: GeneratorParams
    discriminator: DiscriminatorParams
    adam_g: Optional[AdamState] = None
    adam_d: Optional[AdamState] = None
    iteration: int = 0
    meta: dict = field(default_factory=dict)


def save_checkpoint(path: Union[str, Path], ckpt: ModelCheckpoint) -> Path:
    tensors: dict[str, np.ndarray] = {}
    for prefix, params in (("G/", ckpt.generator), ("D/", ckpt.discriminator)):
        for name, array in params.state_arrays().items():
            tensors[prefix + name] = array
    adam = {}
    if ckpt.adam_g is not None:
        adam["generator"] = ckpt.adam_g
    if ckpt.adam_d is not None:
        adam["discriminator"] = ckpt.adam_d

    meta = dict(ckpt.meta)
    meta["model"] = ckpt.model.model_dump()
    meta["iteration"] = ckpt.iteration
    width = 8 if get_precision() == 64 else 4
    path = write_container(path, MAGIC, Container(meta=meta, tensors=tensors, adam=adam, float_width=width))
    logger.info(f"Checkpoint written: {path} (iteration {ckpt.iteration})")
    return path


def load_checkpoint(path: Union[str, Path]) -> ModelCheckpoint:
    """Rebuild parameters in the engine's current precision."""
    container = read_container(path, MAGIC)
    meta = dict(container.meta)
    try:
        model = ModelConfig(**meta.pop("model"))
        iteration = int(meta.pop("iteration"))
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointFormatError(f"{path}: incomplete metadata ({exc})") from exc

    dtype = get_dtype()
    gen, disc = GeneratorParams(model), DiscriminatorParams(model)
    for prefix, params in (("G/", gen), ("D/", disc)):
        arrays = {k[len(prefix):]: v for k, v in container.tensors.items() if k.startswith(prefix)}
        params.load_arrays(arrays)

    def adam_state(name: str) -> Optional[AdamState]:
        state = container.adam.get(name)
        if state is not None:
            state.m = cast_arrays(state.m, dtype)
            state.v = cast_arrays(state.v, dtype)
        return state

    return ModelCheckpoint(
        model=model,
        generator=gen,
        discriminator=disc,
        adam_g=adam_state("generator"),
        adam_d=adam_state("discriminator"),
        iteration=iteration,
        meta=meta,
    )
