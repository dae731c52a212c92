"""
Inverse of compose_caption on its own output language.

Each sentence is matched against the group parsers in caption order, starting
after the group that matched the previous sentence. Group vocabularies are
disjoint, so at most one parser accepts any generated sentence.
"""

import re
from typing import Optional, Union

from t2f.captions.attributes import AttributeVector
from t2f.captions.compiler import Caption
from t2f.captions.groups import CaptionGroup, Gender, Grammar, GroupKind, load_grammar
from t2f.errors import ExtractionError

_SENTENCE_END = re.compile(r"\.(?:\s+|$)")


class _NoParse(Exception):
    pass


class _Cursor:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, offset: int = 0) -> Optional[str]:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def take(self, token: str) -> bool:
        if self.peek() == token:
            self.pos += 1
            return True
        return False

    def take_seq(self, seq) -> bool:
        seq = list(seq)
        if self.tokens[self.pos:self.pos + len(seq)] == seq:
            self.pos += len(seq)
            return True
        return False

    def expect(self, token: str) -> None:
        if not self.take(token):
            raise _NoParse(token)

    @property
    def done(self) -> bool:
        return self.pos >= len(self.tokens)


def tokenize(sentence: str) -> list[str]:
    text = sentence.replace("’", "'").replace("‘", "'").lower()
    return text.replace(",", " , ").split()


def _take_gender(cur: _Cursor, table: dict[Gender, str]) -> Gender:
    for gender, word in table.items():
        if cur.take(word):
            return gender
    raise _NoParse("gender")


def _opener(cur: _Cursor, group: CaptionGroup, grammar: Grammar) -> Optional[Gender]:
    gender = None
    for t in group.opener:
        if t == "{Pronoun}":
            gender = _take_gender(cur, grammar.pronouns)
        elif t == "{noun}":
            gender = _take_gender(cur, grammar.nouns)
        else:
            cur.expect(t.lower())
    return gender


def _parse_queue(group: CaptionGroup, cur: _Cursor, grammar: Grammar):
    for m in group.members:
        if m.when_fresh:
            for gender in Gender:
                if cur.tokens == grammar.fill(m.when_fresh, gender):
                    cur.pos = len(cur.tokens)
                    return {m.attribute}, gender

    gender = _opener(cur, group, grammar)
    found: list[str] = []
    start = 0
    while not cur.done:
        for i in range(start, len(group.members)):
            m = group.members[i]
            mark = cur.pos
            final = False
            if found and not cur.take(m.conjunction):
                final = group.conjunction_for(m, last=True) != m.conjunction
                if not (final and cur.take(group.final_conjunction)):
                    continue
            if cur.take_seq(m.phrase) and (cur.done or not final):
                found.append(m.attribute)
                start = i + 1
                break
            cur.pos = mark
        else:
            raise _NoParse(cur.peek())
    if not found:
        raise _NoParse("empty")
    return set(found), gender


def _parse_hair(group: CaptionGroup, cur: _Cursor, grammar: Grammar):
    gender = _opener(cur, group, grammar)
    textures = {m.phrase[0]: m.attribute for m in group.by_role("texture")}
    colors = {m.phrase[0]: m.attribute for m in group.by_role("color")}
    found: set[str] = set()

    def words(table: dict[str, str]) -> None:
        if cur.peek() not in table:
            return
        found.add(table[cur.peek()])
        cur.pos += 1
        while cur.peek() == "and" and cur.peek(1) in table:
            found.add(table[cur.peek(1)])
            cur.pos += 2

    while True:
        if cur.take_seq(group.member("Bald").phrase):
            found.add("Bald")
        elif cur.take_seq(group.member("Bangs").phrase):
            found.add("Bangs")
        elif cur.take_seq(group.member("Receding_Hairline").phrase):
            found.add("Receding_Hairline")
        elif cur.take("has"):
            before = len(found)
            words(textures)
            cur.expect("hair")
            if cur.take_seq(["which", "is"]):
                if cur.peek() not in colors:
                    raise _NoParse(cur.peek())
                words(colors)
                cur.expect("in")
                cur.expect("colour")
            if len(found) == before:
                raise _NoParse("hair")
        else:
            raise _NoParse(cur.peek())
        if cur.done:
            return found, gender
        cur.expect("and")


def _parse_appearance(group: CaptionGroup, cur: _Cursor, grammar: Grammar):
    _opener(cur, group, grammar)
    smiling = cur.take("smiling")
    comma = cur.take(",")
    adjectives = [m.attribute for m in group.by_role("adjective")
                  if m.attribute != "Smiling" and cur.take(m.phrase[0])]
    gender = _take_gender(cur, grammar.nouns)
    found = set(adjectives)

    if cur.take("has"):
        if comma != (smiling and bool(adjectives)):
            raise _NoParse(",")
        complements = group.by_role("complement")
        start = 0
        while not cur.done:
            if found - set(adjectives) and not cur.take("and"):
                raise _NoParse(cur.peek())
            for i in range(start, len(complements)):
                if cur.take_seq(complements[i].phrase):
                    found.add(complements[i].attribute)
                    start = i + 1
                    break
            else:
                raise _NoParse(cur.peek())
        if found == set(adjectives):
            raise _NoParse("complement")
        if smiling:
            found.add("Smiling")
    elif cur.take_seq(["is", "smiling"]):
        if smiling or comma:
            raise _NoParse("smiling")
        found.add("Smiling")
    elif cur.take("looks"):
        if smiling or comma or adjectives:
            raise _NoParse("looks")
        if cur.take("young"):
            found.add("Young")
            if cur.take("and"):
                cur.expect("attractive")
                found.add("Attractive")
        else:
            cur.expect("attractive")
            found.add("Attractive")
    else:
        raise _NoParse(cur.peek())
    if not cur.done:
        raise _NoParse(cur.peek())
    return found, gender


_PARSERS = {
    GroupKind.queue: _parse_queue,
    GroupKind.hair: _parse_hair,
    GroupKind.appearance: _parse_appearance,
}


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_END.split(text.strip()) if s.strip()]


def extract_attributes(caption: Union[Caption, str]) -> AttributeVector:
    """Recover the mapped attributes (and Male) a caption was compiled from."""
    grammar = load_grammar()
    text = caption.text if isinstance(caption, Caption) else caption
    sentences = split_sentences(text)
    if not sentences:
        return AttributeVector((False,) * 40, gender_known=False)

    present: set[str] = set()
    genders: set[Gender] = set()
    next_group = 0
    for sentence in sentences:
        tokens = tokenize(sentence)
        unknown = [t for t in tokens if t not in grammar.vocabulary]
        if unknown:
            raise ExtractionError(f"tokens outside the caption grammar: {', '.join(unknown)}", unknown)
        for gi in range(next_group, len(grammar.groups)):
            group = grammar.groups[gi]
            cur = _Cursor(tokens)
            try:
                found, gender = _PARSERS[group.kind](group, cur, grammar)
            except _NoParse:
                continue
            if not cur.done:
                continue
            present |= found
            if gender is not None:
                genders.add(gender)
            next_group = gi + 1
            break
        else:
            raise ExtractionError(f"sentence matches no caption group: {sentence!r}", tokens)

    if len(genders) > 1:
        raise ExtractionError("caption mixes male and female references", [g.value for g in genders])
    if genders and genders.pop() is Gender.he:
        present.add("Male")
    return AttributeVector.from_names(present)
