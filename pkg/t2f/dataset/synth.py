"""
Synthetic glyph-face dataset: generation, stratified split and the on-disk
layout (CelebA format, so `load_celeba_format` reads it back).

    <out>/images/000001.ppm ...
    <out>/list_attr_celeba.txt
    <out>/identity_CelebA.txt
    <out>/captions.jsonl          every record, with identity class
    <out>/captions_test.jsonl     held-out split only
"""

import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from t2f.captions import AttributeVector, compose_caption, write_attr_file, write_caption_jsonl
from t2f.config.settings import settings
from t2f.dataset.celeba import ATTR_FILE, IDENTITY_FILE, IMAGE_DIR, write_identity_file
from t2f.dataset.imageio import save_image
from t2f.dataset.records import DatasetRecord
from t2f.dataset.render import render_procedural_face
from t2f.dataset.sampler import sample_attributes
from t2f.embedding import EmbeddingConfig, TextEmbedding, embed_captions
from t2f.errors import ContractError

logger = logging.getLogger(__name__)

CLASS_STREAM = 0
JITTER_STREAM = 1

CAPTIONS_FILE = "captions.jsonl"
TEST_CAPTIONS_FILE = "captions_test.jsonl"


def synth_filename(index: int) -> str:
    return f"{index + 1:06d}.ppm"


def class_attributes(seed: int, identity: int) -> AttributeVector:
    return sample_attributes(np.random.default_rng([seed, CLASS_STREAM, identity]))


def jitter_seed_for(seed: int, index: int) -> int:
    return int(np.random.default_rng([seed, JITTER_STREAM, index]).integers(2**31))


def generate_dataset(n: int = settings.desk_dataset_size, class_count: int = settings.desk_classes,
                     seed: int = 0, size: int = settings.desk_image_size,
                     embedding_config: Optional[EmbeddingConfig] = None) -> list[DatasetRecord]:
    """
    `n` records over `class_count` identity classes (record i → class i % C).

    A class is one attribute vector; its records differ only by render jitter.
    Pure in (n, class_count, seed, size, embedding_config).
    """
    if n < 1 or class_count < 1:
        raise ContractError(f"need n >= 1 and class_count >= 1, got n={n}, class_count={class_count}")
    if class_count > n:
        raise ContractError(f"{class_count} classes cannot all be populated by {n} records")
    config = embedding_config or EmbeddingConfig()

    vectors = [class_attributes(seed, c) for c in range(class_count)]
    captions = [compose_caption(v) for v in vectors]
    embeddings = embed_captions([c.text for c in captions], config)

    records = []
    for i in range(n):
        c = i % class_count
        image_id = synth_filename(i)
        jitter = jitter_seed_for(seed, i)
        records.append(DatasetRecord(
            image=render_procedural_face(vectors[c], size, jitter),
            attributes=AttributeVector(vectors[c].values, source_id=image_id),
            caption=captions[c],
            embedding=TextEmbedding(embeddings[c].copy()),
            identity_class=c,
            image_id=image_id,
            jitter_seed=jitter,
        ))
    distinct = len({v.values for v in vectors})
    logger.info(f"Generated {n} synthetic records: {class_count} classes "
                f"({distinct} distinct attribute vectors), {size}px, seed {seed}")
    return records


def split_dataset(records: Sequence[DatasetRecord],
                  train_fraction: float = 0.75) -> tuple[list[DatasetRecord], list[DatasetRecord]]:
    """Per-class split keeping record order: the first round(f·n_c) of each class train."""
    if not 0.0 < train_fraction < 1.0:
        raise ContractError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    by_class: dict[int, list[int]] = {}
    for i, r in enumerate(records):
        by_class.setdefault(r.identity_class, []).append(i)
    train_idx, test_idx = [], []
    for members in by_class.values():
        k = int(round(train_fraction * len(members)))
        train_idx += members[:k]
        test_idx += members[k:]
    train = [records[i] for i in sorted(train_idx)]
    test = [records[i] for i in sorted(test_idx)]
    logger.debug(f"Split {len(records)} records into {len(train)} train / {len(test)} test")
    return train, test


def write_synth_dir(records: Sequence[DatasetRecord], out: Union[str, Path],
                    test: Optional[Iterable[DatasetRecord]] = None) -> list[Path]:
    """Write the dataset directory; returns every file written."""
    out = Path(out)
    images = out / IMAGE_DIR
    images.mkdir(parents=True, exist_ok=True)
    written = [save_image(r.image, images / r.image_id) for r in records]
    written.append(write_attr_file([r.attributes for r in records], out / ATTR_FILE))
    written.append(write_identity_file([(r.image_id, r.identity_class) for r in records], out / IDENTITY_FILE))
    written.append(write_caption_jsonl([r.caption_record() for r in records], out / CAPTIONS_FILE))
    if test is not None:
        written.append(write_caption_jsonl([r.caption_record() for r in test], out / TEST_CAPTIONS_FILE))
    logger.info(f"Wrote {len(records)} records to {out}")
    return written
