"""
The 40 CelebA facial attributes and the AttributeVector value type.
"""

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

from t2f.errors import ContractError

CELEBA_ATTRIBUTES: tuple[str, ...] = (
    "5_o_Clock_Shadow", "Arched_Eyebrows", "Attractive", "Bags_Under_Eyes", "Bald",
    "Bangs", "Big_Lips", "Big_Nose", "Black_Hair", "Blond_Hair",
    "Blurry", "Brown_Hair", "Bushy_Eyebrows", "Chubby", "Double_Chin",
    "Eyeglasses", "Goatee", "Gray_Hair", "Heavy_Makeup", "High_Cheekbones",
    "Male", "Mouth_Slightly_Open", "Mustache", "Narrow_Eyes", "No_Beard",
    "Oval_Face", "Pale_Skin", "Pointy_Nose", "Receding_Hairline", "Rosy_Cheeks",
    "Sideburns", "Smiling", "Straight_Hair", "Wavy_Hair", "Wearing_Earrings",
    "Wearing_Hat", "Wearing_Lipstick", "Wearing_Necklace", "Wearing_Necktie", "Young",
)
ATTRIBUTE_COUNT = len(CELEBA_ATTRIBUTES)
ATTRIBUTE_INDEX: dict[str, int] = {name: i for i, name in enumerate(CELEBA_ATTRIBUTES)}

UNMAPPED_ATTRIBUTES = frozenset({"Bags_Under_Eyes", "Blurry", "No_Beard"})


def attribute_index(name: str) -> int:
    try:
        return ATTRIBUTE_INDEX[name]
    except KeyError:
        raise ContractError(f"unknown attribute name: {name!r}") from None


@dataclass(frozen=True)
class AttributeVector:
    """
    40 booleans in canonical CelebA order.

    `gender_known` is False only for vectors recovered from an empty caption,
    where Male cannot be determined.
    """
    values: tuple[bool, ...]
    source_id: Optional[str] = None
    gender_known: bool = field(default=True, compare=False)

    def __post_init__(self):
        if len(self.values) != ATTRIBUTE_COUNT:
            raise ContractError(f"AttributeVector needs {ATTRIBUTE_COUNT} values, got {len(self.values)}")
        object.__setattr__(self, "values", tuple(bool(v) for v in self.values))

    @classmethod
    def empty(cls, source_id: Optional[str] = None) -> "AttributeVector":
        return cls((False,) * ATTRIBUTE_COUNT, source_id=source_id)

    @classmethod
    def from_names(cls, names: Iterable[str], source_id: Optional[str] = None) -> "AttributeVector":
        bits = [False] * ATTRIBUTE_COUNT
        for name in names:
            bits[attribute_index(name)] = True
        return cls(tuple(bits), source_id=source_id)

    @classmethod
    def from_mapping(cls, flags: Mapping[str, bool], source_id: Optional[str] = None) -> "AttributeVector":
        return cls.from_names([n for n, on in flags.items() if on], source_id=source_id)

    @classmethod
    def from_bits(cls, bits: str, source_id: Optional[str] = None) -> "AttributeVector":
        if len(bits) != ATTRIBUTE_COUNT or set(bits) - {"0", "1"}:
            raise ContractError(f"attribute bits must be {ATTRIBUTE_COUNT} characters of 0/1: {bits!r}")
        return cls(tuple(c == "1" for c in bits), source_id=source_id)

    def __getitem__(self, name: str) -> bool:
        return self.values[attribute_index(name)]

    @property
    def male(self) -> bool:
        return self["Male"]

    def present(self) -> list[str]:
        return [name for name, on in zip(CELEBA_ATTRIBUTES, self.values) if on]

    def to_bits(self) -> str:
        return "".join("1" if v else "0" for v in self.values)

    def with_values(self, **flags: bool) -> "AttributeVector":
        bits = list(self.values)
        for name, on in flags.items():
            bits[attribute_index(name)] = bool(on)
        return replace(self, values=tuple(bits))

    def mapped(self) -> "AttributeVector":
        """Copy with the attributes captions never mention cleared."""
        return self.with_values(**{name: False for name in UNMAPPED_ATTRIBUTES})
