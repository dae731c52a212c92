from t2f.embedding.hashing import (
    EmbeddingConfig,
    HashingEmbedder,
    TextEmbedding,
    cosine,
    embed_caption,
    embed_captions,
    get_embedder,
)

__all__ = [
    "EmbeddingConfig",
    "HashingEmbedder",
    "TextEmbedding",
    "cosine",
    "embed_caption",
    "embed_captions",
    "get_embedder",
]
