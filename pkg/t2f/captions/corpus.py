"""
CelebA `list_attr_celeba` parsing and caption corpus files.

Attribute file layout:
    line 1   record count
    line 2   the 40 attribute names
    line 3+  <filename> followed by 40 values in {-1, 1}
"""

import json
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from pydantic import BaseModel, Field

from t2f.captions.attributes import ATTRIBUTE_COUNT, CELEBA_ATTRIBUTES, AttributeVector
from t2f.captions.compiler import compose_caption
from t2f.errors import ParseError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def default_filename(index: int) -> str:
    return f"{index + 1:06d}.jpg"


def normalize_attr_text(text: str) -> str:
    """Collapse whitespace runs, strip lines, drop blank lines."""
    lines = [" ".join(line.split()) for line in text.splitlines()]
    return "".join(f"{line}\n" for line in lines if line)


def parse_attr_text(text: str, source: str = "<text>") -> list[AttributeVector]:
    numbered = [(i + 1, line) for i, line in enumerate(text.splitlines()) if line.strip()]
    if len(numbered) < 2:
        raise ParseError(f"{source}: missing header lines", line=len(numbered) + 1)

    count_line, count_text = numbered[0]
    try:
        declared = int(count_text.strip())
    except ValueError:
        raise ParseError(f"record count is not an integer: {count_text.strip()!r}", line=count_line) from None

    names_line, names_text = numbered[1]
    names = names_text.split()
    if len(names) != ATTRIBUTE_COUNT:
        raise ParseError(f"expected {ATTRIBUTE_COUNT} attribute names, got {len(names)}", line=names_line)
    unknown = [n for n in names if n not in CELEBA_ATTRIBUTES]
    if unknown:
        raise ParseError(f"unknown attribute name {unknown[0]!r}", line=names_line)
    if len(set(names)) != ATTRIBUTE_COUNT:
        raise ParseError("duplicate attribute name", line=names_line)

    vectors = []
    for line_no, row in numbered[2:]:
        parts = row.split()
        if len(parts) != ATTRIBUTE_COUNT + 1:
            raise ParseError(f"expected {ATTRIBUTE_COUNT + 1} columns, got {len(parts)}", line=line_no)
        flags = {}
        for name, value in zip(names, parts[1:]):
            if value not in ("-1", "1"):
                raise ParseError(f"{name} has value {value!r}, expected -1 or 1", line=line_no)
            flags[name] = value == "1"
        vectors.append(AttributeVector(tuple(flags[n] for n in CELEBA_ATTRIBUTES), source_id=parts[0]))

    if declared != len(vectors):
        raise ParseError(f"header declares {declared} records, found {len(vectors)}", line=count_line)
    logger.debug(f"Parsed {len(vectors)} attribute rows from {source}")
    return vectors


def parse_attr_file(path: PathLike) -> list[AttributeVector]:
    path = Path(path)
    return parse_attr_text(path.read_text(encoding="utf-8"), source=str(path))


def serialize_attr_file(vectors: Sequence[AttributeVector]) -> str:
    lines = [str(len(vectors)), " ".join(CELEBA_ATTRIBUTES)]
    for i, v in enumerate(vectors):
        values = " ".join("1" if on else "-1" for on in v.values)
        lines.append(f"{v.source_id or default_filename(i)} {values}")
    return "".join(f"{line}\n" for line in lines)


def write_attr_file(vectors: Sequence[AttributeVector], path: PathLike) -> Path:
    path = Path(path)
    path.write_text(serialize_attr_file(vectors), encoding="utf-8")
    return path


# ── Caption corpus ────────────────────────────────────────────────────────────

class CaptionRecord(BaseModel):
    image_id: str
    caption_text: str
    attribute_bits: str = Field(min_length=ATTRIBUTE_COUNT, max_length=ATTRIBUTE_COUNT,
                                pattern=r"^[01]+$")
    identity_class: Optional[int] = None

    def attributes(self) -> AttributeVector:
        return AttributeVector.from_bits(self.attribute_bits, source_id=self.image_id)


def caption_corpus(vectors: Iterable[AttributeVector],
                   identities: Optional[Sequence[int]] = None) -> list[CaptionRecord]:
    records = []
    for i, v in enumerate(vectors):
        records.append(CaptionRecord(
            image_id=v.source_id or default_filename(i),
            caption_text=compose_caption(v).text,
            attribute_bits=v.to_bits(),
            identity_class=identities[i] if identities is not None else None,
        ))
    return records


def write_caption_jsonl(records: Iterable[CaptionRecord], path: PathLike) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.model_dump(exclude_none=True), ensure_ascii=True) + "\n")
    return path


def write_caption_tsv(records: Iterable[CaptionRecord], path: PathLike) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(f"{r.image_id}\t{r.caption_text}\n")
    return path


def read_caption_jsonl(path: PathLike) -> list[CaptionRecord]:
    path = Path(path)
    records = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(CaptionRecord.model_validate_json(line))
        except ValueError as exc:
            raise ParseError(f"{path.name}: invalid caption record ({exc})", line=line_no) from exc
    return records
