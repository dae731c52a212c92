import itertools
import json
import time

import numpy as np
import pytest

from t2f.captions import (
    ATTRIBUTE_COUNT,
    CELEBA_ATTRIBUTES,
    AttributeVector,
    caption_corpus,
    compose_caption,
    extract_attributes,
    load_grammar,
    normalize_attr_text,
    parse_attr_file,
    parse_attr_text,
    read_caption_jsonl,
    render_group,
    serialize_attr_file,
    write_caption_jsonl,
    write_caption_tsv,
)
from t2f.errors import ContractError, ExtractionError, ParseError

FACIAL_HAIR = ["5_o_Clock_Shadow", "Goatee", "Mustache", "Sideburns"]


def vec(*names):
    return AttributeVector.from_names(names)


def facial_hair(*names):
    return render_group(load_grammar().group("FacialHair"), vec(*names))


def random_vector(rng):
    return AttributeVector(tuple(bool(b) for b in rng.integers(0, 2, size=ATTRIBUTE_COUNT)))


def assert_round_trip(v):
    caption = compose_caption(v)
    recovered = extract_attributes(caption)
    expected = v.mapped()
    if not caption.sentences:
        expected = expected.with_values(Male=False)
    assert recovered.values == expected.values, caption.text


# ── Attribute vectors ────────────────────────────────────────────────────────

def test_attribute_order_is_canonical():
    assert len(CELEBA_ATTRIBUTES) == 40
    assert CELEBA_ATTRIBUTES[0] == "5_o_Clock_Shadow"
    assert CELEBA_ATTRIBUTES[20] == "Male"
    assert CELEBA_ATTRIBUTES[-1] == "Young"


def test_attribute_vector_rejects_wrong_length():
    with pytest.raises(ContractError):
        AttributeVector((True,) * 39)


def test_attribute_vector_bits_round_trip():
    v = vec("Male", "Goatee", "Young")
    assert AttributeVector.from_bits(v.to_bits()) == v


def test_unknown_attribute_name():
    with pytest.raises(ContractError):
        vec("Freckles")


# ── Grammar ──────────────────────────────────────────────────────────────────

def test_groups_are_in_caption_order():
    names = [g.name for g in load_grammar().groups]
    assert names == ["FaceStructure", "FacialHair", "HairStyle", "OtherFeatures", "Appearance", "Accessories"]


def test_facial_hair_group_members():
    assert set(load_grammar().group("FacialHair").attributes) == set(FACIAL_HAIR)


def test_groups_partition_mapped_attributes():
    seen = [a for g in load_grammar().groups for a in g.attributes]
    assert len(seen) == len(set(seen))
    assert set(seen) == set(CELEBA_ATTRIBUTES) - {"Bags_Under_Eyes", "Blurry", "No_Beard", "Male"}


# ── render_group ─────────────────────────────────────────────────────────────

def test_goatee_and_mustache():
    assert facial_hair("Male", "Goatee", "Mustache") == "He sports a goatee and mustache."


def test_sideburns_alone():
    assert facial_hair("Male", "Sideburns") == "He has sideburns."
    assert facial_hair("Sideburns") == "She has sideburns."


def test_empty_facial_hair_group():
    assert facial_hair("Male") is None


def test_all_facial_hair():
    assert facial_hair("Male", *FACIAL_HAIR) == "He sports a 5 o'clock shadow, goatee and mustache with sideburns."


def test_goatee_first_takes_no_leading_comma():
    assert facial_hair("Male", "Goatee") == "He sports a goatee."
    assert facial_hair("Male", "Goatee", "Sideburns") == "He sports a goatee with sideburns."


def test_hair_style_sentences():
    group = load_grammar().group("HairStyle")
    assert render_group(group, vec("Wavy_Hair")) == "She has wavy hair."
    assert render_group(group, vec("Male", "Black_Hair", "Straight_Hair")) == \
        "He has straight hair which is black in colour."
    assert render_group(group, vec("Male", "Bald", "Receding_Hairline")) == \
        "He is bald and has a receding hairline."
    assert render_group(group, vec("Bangs", "Blond_Hair")) == "She has hair which is blond in colour and has bangs."


def test_appearance_sentences():
    group = load_grammar().group("Appearance")
    assert render_group(group, vec("Smiling", "Young", "Attractive", "Rosy_Cheeks", "Heavy_Makeup")) == \
        "The smiling, young attractive woman has rosy cheeks and heavy makeup."
    assert render_group(group, vec("Male", "Smiling", "Pale_Skin")) == "The smiling man has pale skin."
    assert render_group(group, vec("Male", "Young", "Smiling")) == "The young man is smiling."
    assert render_group(group, vec("Young", "Attractive")) == "The woman looks young and attractive."
    assert render_group(group, vec("Attractive")) == "The woman looks attractive."
    assert render_group(group, vec("Male")) is None


FACE_STRUCTURE = ["Chubby", "Double_Chin", "Oval_Face", "High_Cheekbones"]


def test_face_structure_ends_lists_with_and():
    group = load_grammar().group("FaceStructure")
    assert render_group(group, vec("Chubby", "Double_Chin")) == "The woman has chubby face and double chin."
    assert render_group(group, vec("Male", "Chubby", "Double_Chin", "Oval_Face")) == \
        "The man has chubby face, double chin and oval face."
    assert render_group(group, vec("Male", *FACE_STRUCTURE)) == \
        "The man has chubby face, double chin, oval face and high cheekbones."


@pytest.mark.parametrize("subset", [c for r in range(1, 5) for c in itertools.combinations(FACE_STRUCTURE, r)])
def test_face_structure_round_trip(subset):
    v = vec(*subset)
    assert extract_attributes(compose_caption(v)).values == v.values


def test_other_features_and_accessories():
    grammar = load_grammar()
    assert render_group(grammar.group("OtherFeatures"),
                        vec("Big_Lips", "Pointy_Nose", "Arched_Eyebrows", "Mouth_Slightly_Open")) == \
        "She has big lips and pointy nose with arched eyebrows and a slightly open mouth."
    assert render_group(grammar.group("Accessories"),
                        vec("Male", "Wearing_Hat", "Eyeglasses", "Wearing_Necktie")) == \
        "He is wearing a hat, a necktie and eyeglasses."
    assert render_group(grammar.group("Accessories"), vec("Wearing_Earrings", "Wearing_Lipstick")) == \
        "She is wearing earrings and lipstick."


# ── compose_caption ──────────────────────────────────────────────────────────

def test_male_only_is_empty_caption():
    caption = compose_caption(vec("Male"))
    assert caption.sentences == ()
    assert caption.text == ""


def test_worked_example_caption():
    caption = compose_caption(vec("Male", "Goatee", "Mustache"))
    assert caption.sentences == ("He sports a goatee and mustache.",)


def test_woman_template_family():
    caption = compose_caption(vec("High_Cheekbones", "Wavy_Hair", "Arched_Eyebrows", "Young",
                                  "Attractive", "Heavy_Makeup", "Wearing_Lipstick"))
    assert caption.sentences == (
        "The woman has high cheekbones.",
        "She has wavy hair.",
        "She has arched eyebrows.",
        "The young attractive woman has heavy makeup.",
        "She is wearing lipstick.",
    )
    assert caption.text.startswith("The woman has high cheekbones. She has wavy hair.")


def test_unmapped_attributes_are_ignored():
    base = vec("Male", "Goatee")
    assert compose_caption(base).text == compose_caption(base.with_values(Blurry=True, No_Beard=True)).text


def test_caption_is_deterministic(rng):
    for _ in range(50):
        v = random_vector(rng)
        assert compose_caption(v).text == compose_caption(v).text


def test_sentence_count_and_queue_ops_are_bounded(rng):
    for _ in range(500):
        caption = compose_caption(random_vector(rng))
        assert len(caption.sentences) <= 6
        assert caption.queue_ops <= 8 * 40
    full = compose_caption(AttributeVector((True,) * 40))
    assert len(full.sentences) == 6
    assert full.queue_ops <= 8 * 40


# ── extract_attributes ───────────────────────────────────────────────────────

@pytest.mark.parametrize("male", [True, False])
@pytest.mark.parametrize("subset", [c for r in range(5) for c in itertools.combinations(FACIAL_HAIR, r)])
def test_facial_hair_round_trip(subset, male):
    v = vec(*subset, *(["Male"] if male else []))
    if subset:
        assert extract_attributes(compose_caption(v)).values == v.values
    else:
        assert compose_caption(v).sentences == ()


def test_random_round_trip():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        assert_round_trip(random_vector(rng))


def test_every_single_attribute_round_trips():
    for name in CELEBA_ATTRIBUTES:
        for male in (True, False):
            assert_round_trip(vec(name, *(["Male"] if male else [])))


def test_empty_caption_flags_unknown_gender():
    v = extract_attributes("")
    assert not any(v.values)
    assert v.gender_known is False


def test_corrupted_word_is_reported():
    with pytest.raises(ExtractionError) as exc:
        extract_attributes("He sports a gotee and mustache.")
    assert exc.value.tokens == ["gotee"]


def test_out_of_order_sentences_are_rejected():
    with pytest.raises(ExtractionError):
        extract_attributes("She has wavy hair. The woman has high cheekbones.")


def test_mixed_pronouns_are_rejected():
    with pytest.raises(ExtractionError):
        extract_attributes("He sports a goatee. She has wavy hair.")


def test_curly_apostrophe_is_normalized():
    v = extract_attributes("He sports a 5 o’clock shadow.")
    assert v["5_o_Clock_Shadow"] and v.male


def test_corpus_generation_speed():
    rng = np.random.default_rng(5)
    vectors = [random_vector(rng) for _ in range(10_000)]
    start = time.perf_counter()
    records = caption_corpus(vectors)
    assert time.perf_counter() - start < 10.0
    assert len(records) == 10_000


# ── parse_attr_file ──────────────────────────────────────────────────────────

def celeba_text(rows):
    header = " ".join(CELEBA_ATTRIBUTES) + " \n"
    body = "".join(f"{name}  " + "  ".join(f"{v:d}" if v < 0 else f" {v:d}" for v in values) + "\n"
                   for name, values in rows)
    return f"{len(rows)}\n{header}{body}"


@pytest.fixture
def two_rows():
    first = [-1] * 40
    first[CELEBA_ATTRIBUTES.index("Male")] = 1
    first[CELEBA_ATTRIBUTES.index("Goatee")] = 1
    second = [1 if i % 3 == 0 else -1 for i in range(40)]
    return [("000001.jpg", first), ("000002.jpg", second)]


def test_parse_two_rows(tmp_path, two_rows):
    path = tmp_path / "list_attr_celeba.txt"
    path.write_text(celeba_text(two_rows))
    vectors = parse_attr_file(path)
    assert len(vectors) == 2
    assert vectors[0].source_id == "000001.jpg"
    assert vectors[0].present() == ["Goatee", "Male"]
    assert vectors[1].values == tuple(i % 3 == 0 for i in range(40))


def test_zero_value_is_a_parse_error(two_rows):
    text = celeba_text(two_rows).splitlines()
    text[3] = text[3].replace("-1", "0", 1)
    with pytest.raises(ParseError) as exc:
        parse_attr_text("\n".join(text))
    assert exc.value.line == 4


def test_wrong_column_count(two_rows):
    text = celeba_text(two_rows).splitlines()
    text[2] = text[2] + " 1"
    with pytest.raises(ParseError) as exc:
        parse_attr_text("\n".join(text))
    assert exc.value.line == 3


def test_unknown_attribute_name_in_header(two_rows):
    text = celeba_text(two_rows).replace("Wavy_Hair", "Curly_Hair")
    with pytest.raises(ParseError) as exc:
        parse_attr_text(text)
    assert exc.value.line == 2


def test_serialize_parse_is_normalization(two_rows):
    text = celeba_text(two_rows)
    assert serialize_attr_file(parse_attr_text(text)) == normalize_attr_text(text)


def test_generated_fixtures_round_trip(rng):
    for _ in range(5):
        vectors = [random_vector(rng) for _ in range(int(rng.integers(1, 20)))]
        text = serialize_attr_file(vectors)
        assert serialize_attr_file(parse_attr_text(text)) == normalize_attr_text(text)


# ── Corpus files ─────────────────────────────────────────────────────────────

def test_caption_corpus_files(tmp_path):
    vectors = [AttributeVector.from_names(["Male", "Goatee", "Mustache"], source_id="a.jpg"),
               AttributeVector.from_names(["Wavy_Hair"], source_id="b.jpg")]
    records = caption_corpus(vectors, identities=[3, 7])
    jsonl = write_caption_jsonl(records, tmp_path / "captions.jsonl")
    first = json.loads(jsonl.read_text().splitlines()[0])
    assert first == {"image_id": "a.jpg", "caption_text": "He sports a goatee and mustache.",
                     "attribute_bits": vectors[0].to_bits(), "identity_class": 3}
    assert read_caption_jsonl(jsonl) == records

    tsv = write_caption_tsv(records, tmp_path / "captions.tsv")
    assert tsv.read_text() == "a.jpg\tHe sports a goatee and mustache.\nb.jpg\tShe has wavy hair.\n"
