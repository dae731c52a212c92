from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field, field_validator
from pathlib import Path
from typing import Literal


BASE_DIR = Path(__file__).resolve().parents[2]


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=BASE_DIR / ".env",
        env_file_encoding="utf-8",
        env_prefix="T2F_",
        extra="ignore",
    )

    # Engine
    precision: Literal[32, 64] = 32        # float width for every tensor op

    # Logging
    log_level: str = "INFO"

    # Storage
    data_dir: Path = BASE_DIR / "data"
    runs_dir: Path = BASE_DIR / "runs"

    # Desk-scale defaults (full-scale values in comments)
    desk_image_size: int = 16              # full scale: 64
    desk_dataset_size: int = 2000          # full scale: 10000 CelebA images
    desk_classes: int = 50
    desk_samples: int = 2048               # full scale: 50K samples
    embedding_dim: int = Field(256, ge=8)  # full scale: 4800
    eval_splits: int = 5

    @field_validator("precision", mode="before")
    @classmethod
    def _precision_from_text(cls, value):
        # env values arrive as strings; Literal[32, 64] only matches ints
        return int(value) if isinstance(value, str) and value.strip().isdigit() else value

    def model_post_init(self, __context):
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.runs_dir.mkdir(parents=True, exist_ok=True)


settings = Settings()
