"""
Named parameter sets for the two networks.

Parameter order is fixed at construction and is the order used by the
optimizer and the checkpoint writer.
"""

import logging
from typing import Iterator, Mapping

import numpy as np

from t2f.engine import Tensor, get_dtype, parameter
from t2f.engine.functional import RunningStats
from t2f.errors import CheckpointFormatError
from t2f.models.config import ModelConfig

logger = logging.getLogger(__name__)

IMAGE_CHANNELS = 3
KERNEL = 4


class ParamSet:
    """Ordered name → Tensor mapping plus batchnorm running statistics."""

    kind = "params"

    def __init__(self, config: ModelConfig):
        self.config = config
        self.tensors: dict[str, Tensor] = {}
        self.running: dict[str, RunningStats] = {}

    def add(self, name: str, data: np.ndarray) -> Tensor:
        t = parameter(data, name=name)
        self.tensors[name] = t
        return t

    def add_batchnorm(self, name: str, channels: int) -> None:
        self.add(f"{name}.gamma", np.ones(channels))
        self.add(f"{name}.beta", np.zeros(channels))
        self.running[name] = RunningStats.fresh(channels)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    def items(self):
        return self.tensors.items()

    def zero_grad(self) -> None:
        for t in self.tensors.values():
            t.zero_grad()

    def count(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Parameters followed by running statistics, as named arrays."""
        arrays = {name: t.data for name, t in self.tensors.items()}
        for name, stats in self.running.items():
            arrays[f"{name}.running_mean"] = stats.mean
            arrays[f"{name}.running_var"] = stats.var
        return arrays

    def load_arrays(self, arrays: Mapping[str, np.ndarray]) -> None:
        expected = self.state_arrays()
        missing = sorted(set(expected) - set(arrays))
        if missing:
            raise CheckpointFormatError(f"{self.kind}: missing tensors {missing[:5]}")
        for name, current in expected.items():
            value = np.asarray(arrays[name])
            if value.shape != current.shape:
                raise CheckpointFormatError(f"{self.kind}: {name} has shape {value.shape}, expected {current.shape}")
            current[...] = value

    def init_normal(self, rng: np.random.Generator) -> None:
        """normal(0, init_std) for weights and kernels; biases stay zero, gamma one."""
        for name, t in self.tensors.items():
            if name.endswith((".w", ".kernel")):
                t.data[...] = rng.normal(0.0, self.config.init_std, size=t.shape)


class GeneratorParams(ParamSet):
    kind = "generator"

    def __init__(self, config: ModelConfig):
        super().__init__(config)
        channels = config.channels() + [IMAGE_CHANNELS]
        self.add("reduce.w", np.zeros((config.text_dim, config.reduce_dim)))
        self.add("reduce.b", np.zeros(config.reduce_dim))
        self.add("proj.w", np.zeros((config.theta_dim, config.proj_dim)))
        self.add("proj.b", np.zeros(config.proj_dim))
        self.add_batchnorm("bn0", channels[0])
        for i in range(1, config.stages + 1):
            self.add(f"deconv{i}.kernel", np.zeros((channels[i - 1], channels[i], KERNEL, KERNEL)))
            if i < config.stages:
                self.add_batchnorm(f"bn{i}", channels[i])


class DiscriminatorParams(ParamSet):
    kind = "discriminator"

    def __init__(self, config: ModelConfig):
        super().__init__(config)
        channels = [IMAGE_CHANNELS] + config.channels()[::-1]
        for i in range(1, config.stages + 1):
            self.add(f"conv{i}.kernel", np.zeros((channels[i], channels[i - 1], KERNEL, KERNEL)))
            if i == 1:
                self.add("conv1.bias", np.zeros(channels[1]))
            else:
                self.add_batchnorm(f"bn{i}", channels[i])
        self.add("reduce.w", np.zeros((config.text_dim, config.reduce_dim)))
        self.add("reduce.b", np.zeros(config.reduce_dim))
        self.add("final.kernel", np.zeros((1, config.top_channels + config.reduce_dim, KERNEL, KERNEL)))


def init_params(seed: int, config: ModelConfig) -> tuple[GeneratorParams, DiscriminatorParams]:
    """Fresh parameters for both networks, deterministic per seed."""
    gen = GeneratorParams(config)
    gen.init_normal(np.random.default_rng([seed, 0]))
    disc = DiscriminatorParams(config)
    disc.init_normal(np.random.default_rng([seed, 1]))
    logger.debug(f"Initialized networks ({gen.count()} + {disc.count()} parameters, dtype {get_dtype().__name__})")
    return gen, disc
