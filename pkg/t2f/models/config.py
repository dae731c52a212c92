from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator


class ModelConfig(BaseModel):
    """
    Shape parameters shared by the generator and the discriminator.

    `stages = log2(image_size / 4)` convolution stages; channels at 4x4 are
    `base_channels * 2**(stages - 1)` and halve per stage toward the image.
    image_size=64 with base_channels=64 gives 512 → 256 → 128 → 64 → 3.
    """
    model_config = ConfigDict(frozen=True)

    image_size: int = 64
    text_dim: int = Field(256, ge=1)
    noise_dim: int = Field(100, ge=1)
    reduce_dim: int = Field(256, ge=1)
    base_channels: int = Field(64, ge=1)
    leaky_slope: float = Field(0.2, ge=0.0)
    init_std: float = Field(0.02, gt=0.0)
    noise_range: Literal["unit", "symmetric"] = "unit"

    @field_validator("image_size")
    @classmethod
    def _power_of_two(cls, v: int) -> int:
        if v < 16 or v & (v - 1):
            raise ValueError(f"image_size must be a power of two >= 16, got {v}")
        return v

    @property
    def stages(self) -> int:
        return (self.image_size // 4).bit_length() - 1

    @property
    def top_channels(self) -> int:
        return self.base_channels * 2 ** (self.stages - 1)

    def channels(self) -> list[int]:
        """Channel count per resolution from 4x4 up to the full image (excluding RGB)."""
        return [self.top_channels // 2 ** i for i in range(self.stages)]

    @property
    def theta_dim(self) -> int:
        return self.noise_dim + self.reduce_dim

    @property
    def proj_dim(self) -> int:
        return self.top_channels * 16
