from t2f.captions.attributes import (
    ATTRIBUTE_COUNT,
    CELEBA_ATTRIBUTES,
    UNMAPPED_ATTRIBUTES,
    AttributeVector,
)
from t2f.captions.groups import CaptionGroup, Gender, load_grammar, render_group
from t2f.captions.compiler import Caption, compose_caption
from t2f.captions.extractor import extract_attributes
from t2f.captions.corpus import (
    CaptionRecord,
    caption_corpus,
    normalize_attr_text,
    parse_attr_file,
    parse_attr_text,
    read_caption_jsonl,
    serialize_attr_file,
    write_attr_file,
    write_caption_jsonl,
    write_caption_tsv,
)

__all__ = [
    "ATTRIBUTE_COUNT",
    "CELEBA_ATTRIBUTES",
    "UNMAPPED_ATTRIBUTES",
    "AttributeVector",
    "CaptionGroup",
    "Gender",
    "load_grammar",
    "render_group",
    "Caption",
    "compose_caption",
    "extract_attributes",
    "CaptionRecord",
    "caption_corpus",
    "normalize_attr_text",
    "parse_attr_file",
    "parse_attr_text",
    "read_caption_jsonl",
    "serialize_attr_file",
    "write_attr_file",
    "write_caption_jsonl",
    "write_caption_tsv",
]
