"""
Feature-hashed caption embedding φ(t).

Captions are lowercased and split on whitespace and punctuation; every word
n-gram of the configured orders is salted with the hash seed and fed to a
scikit-learn HashingVectorizer, whose signed murmur hash picks both the bucket
and the ±1 sign. Rows are L2-normalized; empty text maps to the zero vector.
"""

import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from sklearn.feature_extraction.text import HashingVectorizer

from t2f.config.settings import settings

logger = logging.getLogger(__name__)

_WORD = re.compile(r"[a-z0-9']+")


class EmbeddingConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dim: int = Field(default_factory=lambda: settings.embedding_dim, ge=8)
    ngram_orders: tuple[int, ...] = (1, 2)
    seed: int = 0

    @field_validator("ngram_orders")
    @classmethod
    def _orders_positive(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v or any(n < 1 for n in v):
            raise ValueError("ngram_orders must be a non-empty set of positive integers")
        return tuple(sorted(set(v)))


@dataclass(frozen=True)
class TextEmbedding:
    values: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_bytes(self) -> bytes:
        return self.values.astype("<f4").tobytes()

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_bytes(self.to_bytes())
        return path

    @classmethod
    def read(cls, path: Union[str, Path]) -> "TextEmbedding":
        return cls(np.frombuffer(Path(path).read_bytes(), dtype="<f4").astype(np.float64))


def words(text: str) -> list[str]:
    return _WORD.findall(text.replace("’", "'").lower())


class HashingEmbedder:
    def __init__(self, config: EmbeddingConfig):
        self.config = config
        self._vectorizer = HashingVectorizer(
            n_features=config.dim,
            analyzer=self._analyze,
            token_pattern=None,
            lowercase=False,
            alternate_sign=True,
            norm="l2",
            dtype=np.float64,
        )

    def _analyze(self, text: str) -> list[str]:
        tokens = words(text)
        salt = self.config.seed
        features = []
        for n in self.config.ngram_orders:
            for i in range(len(tokens) - n + 1):
                features.append(f"{salt}|{n}|{' '.join(tokens[i:i + n])}")
        return features

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        """(len(texts), dim) matrix of unit (or zero) rows."""
        if not texts:
            return np.zeros((0, self.config.dim))
        return self._vectorizer.transform(list(texts)).toarray()

    def embed(self, text: str) -> TextEmbedding:
        return TextEmbedding(self.embed_batch([text])[0])


@lru_cache(maxsize=8)
def get_embedder(config: EmbeddingConfig) -> HashingEmbedder:
    logger.debug(f"Building hashing embedder dim={config.dim} orders={config.ngram_orders} seed={config.seed}")
    return HashingEmbedder(config)


def embed_caption(text: str, config: Optional[EmbeddingConfig] = None) -> TextEmbedding:
    return get_embedder(config or EmbeddingConfig()).embed(text)


def embed_captions(texts: Iterable[str], config: Optional[EmbeddingConfig] = None) -> np.ndarray:
    return get_embedder(config or EmbeddingConfig()).embed_batch(list(texts))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
