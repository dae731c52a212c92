import numpy as np
import pytest
from pydantic import ValidationError

from t2f.captions import AttributeVector, compose_caption
from t2f.embedding import EmbeddingConfig, TextEmbedding, cosine, embed_caption, embed_captions

CAPTION = "The woman has high cheekbones. She has wavy hair. She is wearing lipstick."


def full_caption(rng):
    while True:
        caption = compose_caption(AttributeVector(tuple(bool(b) for b in rng.integers(0, 2, 40))))
        if len(caption.sentences) == 6:
            return caption.sentences


def test_same_text_twice_is_identical():
    a, b = embed_caption(CAPTION), embed_caption(CAPTION)
    assert a.values.tobytes() == b.values.tobytes()


def test_nonempty_text_has_unit_norm():
    assert embed_caption(CAPTION).norm == pytest.approx(1.0, abs=1e-12)


def test_empty_text_is_zero_vector():
    e = embed_caption("")
    assert e.dim == 256
    assert not e.values.any()


def test_punctuation_and_case_do_not_matter():
    a = embed_caption("The man has a Goatee, and mustache.")
    b = embed_caption("the man has a goatee and mustache")
    np.testing.assert_array_equal(a.values, b.values)


def test_seed_changes_the_hash_family():
    a = embed_caption(CAPTION, EmbeddingConfig(seed=0))
    b = embed_caption(CAPTION, EmbeddingConfig(seed=1))
    assert not np.array_equal(a.values, b.values)


def test_dimension_follows_config():
    assert embed_caption(CAPTION, EmbeddingConfig(dim=4800)).dim == 4800


def test_config_rejects_small_dim():
    with pytest.raises(ValidationError):
        EmbeddingConfig(dim=4)


def test_config_normalizes_orders():
    assert EmbeddingConfig(ngram_orders=(2, 1, 2)).ngram_orders == (1, 2)


def test_no_collisions_over_synthetic_corpus():
    rng = np.random.default_rng(11)
    texts = sorted({compose_caption(AttributeVector(tuple(bool(b) for b in rng.integers(0, 2, 40)))).text
                    for _ in range(10_000)})
    matrix = embed_captions(texts)
    unique_rows = np.unique(matrix, axis=0)
    assert len(unique_rows) == len(texts)


def test_similarity_grows_with_shared_sentences():
    rng = np.random.default_rng(3)
    means = []
    pairs = [(full_caption(rng), full_caption(rng)) for _ in range(150)]
    for k in range(7):
        sims = []
        for a, b in pairs:
            keep = set(rng.choice(6, size=k, replace=False).tolist())
            mixed = " ".join(a[i] if i in keep else b[i] for i in range(6))
            sims.append(cosine(embed_caption(" ".join(a)).values, embed_caption(mixed).values))
        means.append(np.mean(sims))
    assert all(x < y for x, y in zip(means, means[1:]))
    assert means[-1] == pytest.approx(1.0)


def test_raw_float32_file(tmp_path):
    e = embed_caption(CAPTION)
    path = e.write(tmp_path / "vec.f32")
    assert path.stat().st_size == 4 * 256
    back = TextEmbedding.read(path)
    np.testing.assert_allclose(back.values, e.values, rtol=1e-6, atol=1e-7)
