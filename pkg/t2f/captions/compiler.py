from dataclasses import dataclass
from typing import Optional

from t2f.captions.attributes import AttributeVector
from t2f.captions.groups import Gender, gender_of, detokenize, load_grammar, render_group_tokens


@dataclass(frozen=True)
class Caption:
    sentences: tuple[str, ...]
    gender: Optional[Gender]
    groups: tuple[str, ...] = ()
    queue_ops: int = 0

    @property
    def text(self) -> str:
        return " ".join(self.sentences)

    def __str__(self) -> str:
        return self.text


def compose_caption(attrs: AttributeVector) -> Caption:
    """Render every group in order and concatenate the non-empty sentences."""
    grammar = load_grammar()
    sentences, groups = [], []
    ops = 0
    for group in grammar.groups:
        tokens, group_ops = render_group_tokens(group, attrs, grammar)
        ops += group_ops
        if tokens:
            sentences.append(detokenize(tokens))
            groups.append(group.name)
    return Caption(
        sentences=tuple(sentences),
        gender=gender_of(attrs),
        groups=tuple(groups),
        queue_ops=ops,
    )
