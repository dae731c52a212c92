"""
TrainConfig and its flat `key=value` file format.

    # comments and blank lines are ignored
    batch_size = 64
    lr_g = 0.0002
    mismatch_strategy = wrong_image
"""

import enum
import logging
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from t2f.config.settings import settings
from t2f.errors import ConfigError
from t2f.models.config import ModelConfig

logger = logging.getLogger(__name__)


class MismatchStrategy(str, enum.Enum):
    wrong_image = "wrong_image"
    wrong_caption = "wrong_caption"
    least_similar_caption = "least_similar_caption"


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    # Optimizer (full-scale values)
    batch_size: int = Field(64, ge=1)
    lr_g: float = Field(0.0002, gt=0.0)
    lr_d: float = Field(0.0001, gt=0.0)
    beta1: float = Field(0.5, ge=0.0, lt=1.0)
    beta2: float = Field(0.5, ge=0.0, lt=1.0)
    epochs: int = Field(200, ge=1)
    iterations: Optional[int] = Field(None, ge=1)   # overrides epochs when set

    # GAN-CLS
    swap_period: int = Field(3, ge=1)
    swap_enabled: bool = True
    mismatch_strategy: MismatchStrategy = MismatchStrategy.wrong_image
    collapse_patience: int = Field(50, ge=1)
    label_noise: float = Field(0.0, ge=0.0, le=0.5)   # soft D targets; 0 keeps hard 1/0 labels

    # Reproducibility
    seed: int = 0
    checkpoint_every: int = Field(500, ge=1)

    # Network shape
    image_size: int = settings.desk_image_size
    noise_dim: int = Field(100, ge=1)
    reduce_dim: int = Field(256, ge=1)
    base_channels: int = Field(64, ge=1)
    init_std: float = Field(0.02, gt=0.0)
    noise_range: Literal["unit", "symmetric"] = "unit"

    def network(self, text_dim: int) -> ModelConfig:
        return ModelConfig(
            image_size=self.image_size,
            text_dim=text_dim,
            noise_dim=self.noise_dim,
            reduce_dim=self.reduce_dim,
            base_channels=self.base_channels,
            init_std=self.init_std,
            noise_range=self.noise_range,
        )

    def total_iterations(self, dataset_size: int) -> int:
        if self.iterations is not None:
            return self.iterations
        return self.epochs * (dataset_size // self.batch_size)

    def to_text(self) -> str:
        lines = []
        for key, value in self.model_dump(mode="json").items():
            if value is None:
                continue
            lines.append(f"{key} = {str(value).lower() if isinstance(value, bool) else value}")
        return "\n".join(lines) + "\n"


def parse_train_config(text: str, source: str = "<text>") -> TrainConfig:
    values: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}: line {line_no}: expected key=value, got {raw.strip()!r}")
        key = key.strip()
        if key in values:
            raise ConfigError(f"{source}: line {line_no}: duplicate key {key!r}")
        values[key] = value.strip()
    try:
        return TrainConfig(**values)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(f"{source}: {problems}") from exc


def load_train_config(path: Union[str, Path]) -> TrainConfig:
    path = Path(path)
    config = parse_train_config(path.read_text(encoding="utf-8"), source=str(path))
    logger.debug(f"Loaded train config from {path}")
    return config
