"""
CelebA-format ingestion.

Reads `list_attr_celeba.txt`, the optional `identity_CelebA.txt`
(`<filename> <identity>` per line) and the referenced images, and turns them
into DatasetRecords at the configured size.
"""

import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from t2f.captions import compose_caption, parse_attr_file
from t2f.config.settings import settings
from t2f.dataset.imageio import load_image
from t2f.dataset.records import DatasetRecord
from t2f.embedding import EmbeddingConfig, TextEmbedding, embed_captions
from t2f.errors import IngestionError, ParseError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

IMAGE_DIR = "images"
ATTR_FILE = "list_attr_celeba.txt"
IDENTITY_FILE = "identity_CelebA.txt"


def parse_identity_file(path: PathLike) -> dict[str, int]:
    path = Path(path)
    identities: dict[str, int] = {}
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 2:
            raise ParseError(f"{path.name}: expected '<filename> <identity>'", line=line_no)
        try:
            identities[parts[0]] = int(parts[1])
        except ValueError:
            raise ParseError(f"{path.name}: identity {parts[1]!r} is not an integer", line=line_no) from None
    return identities


def write_identity_file(rows: Sequence[tuple[str, int]], path: PathLike) -> Path:
    path = Path(path)
    path.write_text("".join(f"{name} {identity}\n" for name, identity in rows), encoding="utf-8")
    return path


def _dense_classes(keys: Sequence) -> list[int]:
    """Relabel arbitrary hashable keys 0..C-1 in order of first appearance."""
    table: dict = {}
    return [table.setdefault(k, len(table)) for k in keys]


def load_celeba_format(image_dir: PathLike, attr_file: PathLike,
                       identity_file: Optional[PathLike] = None,
                       size: int = settings.desk_image_size,
                       embedding_config: Optional[EmbeddingConfig] = None,
                       limit: Optional[int] = None) -> list[DatasetRecord]:
    """
    Records for every row of `attr_file` (or the first `limit`).

    Images are centre-cropped, resized to `size` and scaled to [-1, 1].
    Identity classes come from `identity_file` when given, otherwise one class
    per distinct attribute vector; either way they are relabelled 0..C-1.
    Raises IngestionError listing every referenced image that is missing.
    """
    image_dir = Path(image_dir)
    vectors = parse_attr_file(attr_file)
    if limit is not None:
        vectors = vectors[:limit]

    missing = [v.source_id for v in vectors if not (image_dir / v.source_id).is_file()]
    if missing:
        preview = ", ".join(missing[:5]) + (" ..." if len(missing) > 5 else "")
        raise IngestionError(f"{len(missing)} images listed in {attr_file} are missing from {image_dir}: {preview}",
                             missing=missing)

    if identity_file is not None:
        table = parse_identity_file(identity_file)
        unlabelled = [v.source_id for v in vectors if v.source_id not in table]
        if unlabelled:
            raise IngestionError(f"{len(unlabelled)} images have no identity in {identity_file}",
                                 missing=unlabelled)
        classes = _dense_classes([table[v.source_id] for v in vectors])
    else:
        classes = _dense_classes([v.values for v in vectors])

    captions = [compose_caption(v) for v in vectors]
    embeddings = embed_captions([c.text for c in captions], embedding_config or EmbeddingConfig())

    records = []
    for v, caption, emb, cls in zip(vectors, captions, embeddings, classes):
        records.append(DatasetRecord(
            image=load_image(image_dir / v.source_id, size),
            attributes=v,
            caption=caption,
            embedding=TextEmbedding(np.asarray(emb)),
            identity_class=cls,
            image_id=v.source_id,
        ))
    logger.info(f"Loaded {len(records)} CelebA-format records from {image_dir} "
                f"({max(classes) + 1 if classes else 0} classes, {size}px)")
    return records
