from dataclasses import dataclass
from typing import Optional

import numpy as np

from t2f.captions import AttributeVector, Caption, CaptionRecord
from t2f.embedding import TextEmbedding


@dataclass
class DatasetRecord:
    image: np.ndarray                 # (3, s, s) in [-1, 1]
    attributes: AttributeVector
    caption: Caption
    embedding: TextEmbedding
    identity_class: int
    image_id: str = ""
    jitter_seed: Optional[int] = None

    def caption_record(self) -> CaptionRecord:
        return CaptionRecord(
            image_id=self.image_id,
            caption_text=self.caption.text,
            attribute_bits=self.attributes.to_bits(),
            identity_class=self.identity_class,
        )
