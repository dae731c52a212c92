"""
Caption groups and their sentence renderers.

The grammar lives in data/phrases.json. Six groups render in fixed order, each
into at most one sentence:

    FaceStructure   The man has chubby face, double chin and high cheekbones.
                    The woman has chubby face and double chin.
    FacialHair      He sports a 5 o'clock shadow, goatee and mustache with sideburns.
                    He has sideburns.                       (Sideburns alone)
    HairStyle       She is bald and has straight and wavy hair which is black in colour
                    and has bangs and has a receding hairline.
    OtherFeatures   She has big lips and pointy nose with arched eyebrows and a slightly open mouth.
    Appearance      The smiling, young attractive woman has rosy cheeks and heavy makeup.
                    The young man is smiling.               (Smiling, no has-complement)
                    The woman looks young and attractive.   (no Smiling, no complement)
    Accessories     He is wearing a hat, eyeglasses and lipstick.

Queue groups follow one rule: seed the queue with the gendered opener; for each
present attribute in member order push its phrase directly while the queue
tail is still the opener's last token, otherwise push the attribute's
conjunction first. Groups with a final conjunction use it in place of a
"," before the last present item. Every push and clear counts as one queue
operation.
"""

import enum
import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional

from t2f.captions.attributes import CELEBA_ATTRIBUTES, UNMAPPED_ATTRIBUTES, AttributeVector
from t2f.errors import ContractError

logger = logging.getLogger(__name__)

PHRASES_PATH = Path(__file__).resolve().parent / "data" / "phrases.json"


class Gender(str, enum.Enum):
    he = "he"
    she = "she"


class GroupKind(str, enum.Enum):
    queue = "queue"
    hair = "hair"
    appearance = "appearance"


@dataclass(frozen=True)
class GroupMember:
    attribute: str
    phrase: tuple[str, ...]
    conjunction: Optional[str] = None
    role: Optional[str] = None
    when_fresh: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class CaptionGroup:
    name: str
    kind: GroupKind
    opener: tuple[str, ...]
    members: tuple[GroupMember, ...]
    final_conjunction: Optional[str] = None   # replaces "," before the last item

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(m.attribute for m in self.members)

    def conjunction_for(self, member: GroupMember, last: bool) -> Optional[str]:
        if last and self.final_conjunction and member.conjunction == ",":
            return self.final_conjunction
        return member.conjunction

    def by_role(self, role: str) -> list[GroupMember]:
        return [m for m in self.members if m.role == role]

    def member(self, attribute: str) -> GroupMember:
        for m in self.members:
            if m.attribute == attribute:
                return m
        raise ContractError(f"{attribute} is not in group {self.name}")


@dataclass
class Grammar:
    groups: tuple[CaptionGroup, ...]
    pronouns: dict[Gender, str]
    nouns: dict[Gender, str]
    vocabulary: frozenset[str] = field(default_factory=frozenset)

    def group(self, name: str) -> CaptionGroup:
        for g in self.groups:
            if g.name == name:
                return g
        raise ContractError(f"unknown caption group {name!r}")

    def fill(self, tokens: tuple[str, ...], gender: Gender) -> list[str]:
        out = []
        for t in tokens:
            if t == "{Pronoun}":
                out.append(self.pronouns[gender])
            elif t == "{noun}":
                out.append(self.nouns[gender])
            else:
                out.append(t.lower())
        return out


def _member(raw: dict) -> GroupMember:
    when_fresh = raw.get("when_fresh")
    return GroupMember(
        attribute=raw["attribute"],
        phrase=tuple(raw["phrase"].split()),
        conjunction=raw.get("conjunction"),
        role=raw.get("role"),
        when_fresh=tuple(when_fresh) if when_fresh else None,
    )


@lru_cache(maxsize=1)
def load_grammar(path: Path = PHRASES_PATH) -> Grammar:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    groups = tuple(
        CaptionGroup(
            name=g["name"],
            kind=GroupKind(g["kind"]),
            opener=tuple(g["opener"]),
            members=tuple(_member(m) for m in g["members"]),
            final_conjunction=g.get("final_conjunction"),
        )
        for g in raw["groups"]
    )
    pronouns = {Gender.he: raw["gender"]["male"]["pronoun"], Gender.she: raw["gender"]["female"]["pronoun"]}
    nouns = {Gender.he: raw["gender"]["male"]["noun"], Gender.she: raw["gender"]["female"]["noun"]}

    seen: dict[str, str] = {}
    for g in groups:
        for m in g.members:
            if m.attribute not in CELEBA_ATTRIBUTES:
                raise ContractError(f"{path}: unknown attribute {m.attribute}")
            if m.attribute in seen:
                raise ContractError(f"{path}: {m.attribute} in both {seen[m.attribute]} and {g.name}")
            seen[m.attribute] = g.name
    expected = set(CELEBA_ATTRIBUTES) - UNMAPPED_ATTRIBUTES - {"Male"}
    if set(seen) != expected:
        raise ContractError(f"{path}: groups do not cover {sorted(expected - set(seen))}")

    vocab = set(pronouns.values()) | set(nouns.values()) | {",", "and", "with", "hair", "which",
                                                            "is", "in", "colour", "has", "looks"}
    for g in groups:
        vocab.update(t.lower() for t in g.opener if not t.startswith("{"))
        for m in g.members:
            vocab.update(m.phrase)
            vocab.update(t.lower() for t in (m.when_fresh or ()) if not t.startswith("{"))
    logger.debug(f"Loaded caption grammar: {len(groups)} groups, {len(vocab)} tokens")
    return Grammar(groups=groups, pronouns=pronouns, nouns=nouns, vocabulary=frozenset(vocab))


def gender_of(attrs: AttributeVector) -> Gender:
    return Gender.he if attrs.male else Gender.she


class TokenQueue:
    """Token queue that counts its own operations."""

    def __init__(self, opener: list[str]):
        self.opener = list(opener)
        self.tokens: list[str] = []
        self.ops = 0
        self.push(opener)

    @property
    def fresh(self) -> bool:
        return self.tokens == self.opener

    def push(self, tokens) -> None:
        for t in tokens:
            self.tokens.append(t)
            self.ops += 1

    def push_item(self, conjunction: Optional[str], tokens) -> None:
        if not self.fresh and conjunction:
            self.push([conjunction])
        self.push(tokens)

    def clear(self) -> None:
        self.tokens.clear()
        self.ops += 1


def detokenize(tokens: list[str]) -> str:
    words: list[str] = []
    for t in tokens:
        if t == "," and words:
            words[-1] += ","
        else:
            words.append(t)
    sentence = " ".join(words)
    return sentence[:1].upper() + sentence[1:] + "."


def _join(words: list[str], conjunction: str = "and") -> list[str]:
    out: list[str] = []
    for i, w in enumerate(words):
        if i:
            out.append(conjunction)
        out.append(w)
    return out


def _render_queue(group: CaptionGroup, attrs: AttributeVector, queue: TokenQueue,
                  grammar: Grammar, gender: Gender) -> bool:
    present = [m for m in group.members if attrs[m.attribute]]
    for i, m in enumerate(present):
        if m.when_fresh and queue.fresh:
            queue.clear()
            queue.push(grammar.fill(m.when_fresh, gender))
        else:
            queue.push_item(group.conjunction_for(m, last=i == len(present) - 1), m.phrase)
    return bool(present)


def _render_hair(group: CaptionGroup, attrs: AttributeVector, queue: TokenQueue) -> bool:
    clauses: list[list[str]] = []
    if attrs["Bald"]:
        clauses.append(list(group.member("Bald").phrase))
    textures = [m.phrase[0] for m in group.by_role("texture") if attrs[m.attribute]]
    colors = [m.phrase[0] for m in group.by_role("color") if attrs[m.attribute]]
    if textures or colors:
        clause = ["has", *_join(textures), "hair"]
        if colors:
            clause += ["which", "is", *_join(colors), "in", "colour"]
        clauses.append(clause)
    for name in ("Bangs", "Receding_Hairline"):
        if attrs[name]:
            clauses.append(list(group.member(name).phrase))
    for clause in clauses:
        queue.push_item("and", clause)
    return bool(clauses)


def _render_appearance(group: CaptionGroup, attrs: AttributeVector, queue: TokenQueue,
                       grammar: Grammar, gender: Gender) -> bool:
    smiling = attrs["Smiling"]
    adjectives = [m.phrase[0] for m in group.by_role("adjective")
                  if m.attribute != "Smiling" and attrs[m.attribute]]
    complements = [list(m.phrase) for m in group.by_role("complement") if attrs[m.attribute]]
    noun = grammar.nouns[gender]

    if complements:
        if smiling:
            queue.push(["smiling", ","] if adjectives else ["smiling"])
        queue.push([*adjectives, noun, "has"])
        for i, phrase in enumerate(complements):
            queue.push((["and"] if i else []) + phrase)
    elif smiling:
        queue.push([*adjectives, noun, "is", "smiling"])
    elif adjectives:
        queue.push([noun, "looks", *_join(adjectives)])
    else:
        return False
    return True


def render_group_tokens(group: CaptionGroup, attrs: AttributeVector,
                        grammar: Optional[Grammar] = None) -> tuple[Optional[list[str]], int]:
    """Token list for one group's sentence (None when nothing is present) and the op count."""
    grammar = grammar or load_grammar()
    gender = gender_of(attrs)
    queue = TokenQueue(grammar.fill(group.opener, gender))
    if group.kind is GroupKind.queue:
        emitted = _render_queue(group, attrs, queue, grammar, gender)
    elif group.kind is GroupKind.hair:
        emitted = _render_hair(group, attrs, queue)
    else:
        emitted = _render_appearance(group, attrs, queue, grammar, gender)
    return (queue.tokens if emitted else None), queue.ops


def render_group(group: CaptionGroup, attrs: AttributeVector) -> Optional[str]:
    tokens, _ = render_group_tokens(group, attrs)
    return detokenize(tokens) if tokens else None
