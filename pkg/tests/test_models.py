import numpy as np
import pytest

from t2f.engine import AdamState, Tensor, precision
from t2f.errors import CheckpointFormatError, ContractError
from t2f.models import (
    LatentInput,
    ModelCheckpoint,
    ModelConfig,
    discriminator_forward,
    generator_forward,
    init_params,
    load_checkpoint,
    make_latent,
    save_checkpoint,
)
from t2f.models.checks import network_suite


def unit_rows(rng, n, dim):
    x = rng.normal(size=(n, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def zero_out(params):
    for name, t in params.items():
        t.data[...] = 0.0


# ── Config ───────────────────────────────────────────────────────────────────

def test_full_scale_channel_law():
    cfg = ModelConfig()
    assert cfg.stages == 4
    assert cfg.channels() == [512, 256, 128, 64]
    assert cfg.theta_dim == 356
    assert cfg.proj_dim == 8192


def test_desk_scale_has_two_stages():
    cfg = ModelConfig(image_size=16)
    assert cfg.stages == 2
    assert cfg.channels() == [128, 64]


@pytest.mark.parametrize("size", [8, 24, 100])
def test_image_size_must_be_power_of_two(size):
    with pytest.raises(ValueError):
        ModelConfig(image_size=size)


# ── Forward passes ───────────────────────────────────────────────────────────

def test_full_scale_shape_chain(rng):
    cfg = ModelConfig()
    gen, disc = init_params(0, cfg)
    latent = make_latent(rng, unit_rows(rng, 2, cfg.text_dim), cfg)

    g_trace = []
    image = generator_forward(gen, latent, "train", trace=g_trace)
    assert g_trace == [
        ("theta", (2, 356)),
        ("theta_proj", (2, 8192)),
        ("h0", (2, 512, 4, 4)),
        ("h1", (2, 256, 8, 8)),
        ("h2", (2, 128, 16, 16)),
        ("h3", (2, 64, 32, 32)),
        ("image", (2, 3, 64, 64)),
    ]

    d_trace = []
    scores = discriminator_forward(disc, image, latent.phi_t, "train", trace=d_trace)
    assert d_trace == [
        ("gamma", (2, 512, 4, 4)),
        ("joint", (2, 768, 4, 4)),
        ("logit", (2, 1, 1, 1)),
    ]
    assert scores.shape == (2,)


def test_zero_network_outputs(tiny_config, rng):
    gen, disc = init_params(0, tiny_config)
    zero_out(gen)
    zero_out(disc)
    latent = make_latent(rng, unit_rows(rng, 4, tiny_config.text_dim), tiny_config)
    image = generator_forward(gen, latent)
    assert np.all(image.data == 0.0)
    scores = discriminator_forward(disc, image, latent.phi_t)
    assert np.all(scores.data == 0.5)


@pytest.mark.parametrize("seed", range(100))
def test_output_ranges(tiny_config, seed):
    rng = np.random.default_rng(seed)
    gen, disc = init_params(seed, tiny_config)
    latent = make_latent(rng, unit_rows(rng, 4, tiny_config.text_dim), tiny_config)
    image = generator_forward(gen, latent)
    assert np.all(np.abs(image.data) < 1.0)
    scores = discriminator_forward(disc, image, latent.phi_t).data
    assert np.all((scores > 0.0) & (scores < 1.0))


def test_noise_ranges(tiny_config, rng):
    z = make_latent(rng, unit_rows(rng, 64, 16), tiny_config).z.data
    assert z.min() >= 0.0 and z.max() <= 1.0
    symmetric = tiny_config.model_copy(update={"noise_range": "symmetric"})
    z = make_latent(rng, unit_rows(rng, 64, 16), symmetric).z.data
    assert z.min() < 0.0


def test_discriminator_batch_independence(tiny_config, rng, float64):
    _, disc = init_params(3, tiny_config)
    images = rng.uniform(-1, 1, size=(6, 3, 16, 16))
    phi = unit_rows(rng, 6, tiny_config.text_dim)
    perm = rng.permutation(6)
    base = discriminator_forward(disc, Tensor(images), Tensor(phi)).data
    shuffled = discriminator_forward(disc, Tensor(images[perm]), Tensor(phi[perm])).data
    unpermuted = np.empty_like(shuffled)
    unpermuted[perm] = shuffled
    np.testing.assert_allclose(unpermuted, base, rtol=1e-12, atol=1e-12)


def test_discriminator_rejects_unnormalized_images(tiny_config, rng):
    _, disc = init_params(0, tiny_config)
    images = rng.uniform(0, 255, size=(2, 3, 16, 16))
    with pytest.raises(ContractError, match="range"):
        discriminator_forward(disc, Tensor(images), Tensor(unit_rows(rng, 2, 16)))


def test_discriminator_tolerates_rounding_past_one(tiny_config, rng):
    _, disc = init_params(0, tiny_config)
    images = np.full((2, 3, 16, 16), 1.0 + 5e-5)
    discriminator_forward(disc, Tensor(images), Tensor(unit_rows(rng, 2, 16)))


def test_generator_rejects_embedding_length_mismatch(tiny_config, rng):
    gen, _ = init_params(0, tiny_config)
    latent = make_latent(rng, unit_rows(rng, 2, 32), tiny_config)
    with pytest.raises(ContractError, match="text embedding"):
        generator_forward(gen, latent)


def test_infer_mode_uses_running_stats(tiny_config, rng):
    gen, _ = init_params(0, tiny_config)
    latent = make_latent(rng, unit_rows(rng, 4, 16), tiny_config)
    before = gen.running["bn0"].mean.copy()
    first = generator_forward(gen, latent, "infer").data
    np.testing.assert_array_equal(gen.running["bn0"].mean, before)
    single = LatentInput(Tensor(latent.z.data[:1]), Tensor(latent.phi_t.data[:1]))
    np.testing.assert_allclose(generator_forward(gen, single, "infer").data, first[:1], rtol=1e-5, atol=1e-6)


def test_init_is_deterministic_per_seed(tiny_config):
    a_gen, a_disc = init_params(7, tiny_config)
    b_gen, b_disc = init_params(7, tiny_config)
    c_gen, _ = init_params(8, tiny_config)
    for name in a_gen:
        np.testing.assert_array_equal(a_gen[name].data, b_gen[name].data)
    for name in a_disc:
        np.testing.assert_array_equal(a_disc[name].data, b_disc[name].data)
    assert not np.array_equal(a_gen["proj.w"].data, c_gen["proj.w"].data)


def test_init_scale():
    gen, _ = init_params(0, ModelConfig(image_size=16))
    assert gen["proj.w"].data.std() == pytest.approx(0.02, rel=0.05)
    assert np.all(gen["bn0.gamma"].data == 1.0)
    assert np.all(gen["proj.b"].data == 0.0)


# ── Gradients ────────────────────────────────────────────────────────────────

def test_network_gradients_match_finite_differences():
    results = network_suite(seed=0)
    assert [r.name for r in results] == ["generator", "discriminator", "D(G(z))"]
    for r in results:
        assert r.passed, f"{r.name}: {r.max_rel_error:.3e}"


# ── Checkpoints ──────────────────────────────────────────────────────────────

def _checkpoint(config, seed=0):
    gen, disc = init_params(seed, config)
    adam_g = AdamState(step_count=3, m={"proj.w": gen["proj.w"].data * 0.5},
                       v={"proj.w": gen["proj.w"].data ** 2})
    gen.running["bn0"].mean[...] = 0.25
    return ModelCheckpoint(model=config, generator=gen, discriminator=disc,
                           adam_g=adam_g, adam_d=AdamState(), iteration=42, meta={"seed": seed})


def test_checkpoint_round_trip_is_bit_exact(tiny_config, tmp_path, float64):
    ckpt = _checkpoint(tiny_config)
    path = save_checkpoint(tmp_path / "model.t2f", ckpt)
    loaded = load_checkpoint(path)

    assert loaded.model == tiny_config
    assert loaded.iteration == 42
    assert loaded.meta == {"seed": 0}
    for name, array in ckpt.generator.state_arrays().items():
        np.testing.assert_array_equal(loaded.generator.state_arrays()[name], array)
    for name, array in ckpt.discriminator.state_arrays().items():
        np.testing.assert_array_equal(loaded.discriminator.state_arrays()[name], array)
    assert loaded.adam_g.step_count == 3
    np.testing.assert_array_equal(loaded.adam_g.m["proj.w"], ckpt.adam_g.m["proj.w"])
    np.testing.assert_array_equal(loaded.adam_g.v["proj.w"], ckpt.adam_g.v["proj.w"])
    assert loaded.adam_d.step_count == 0

    again = save_checkpoint(tmp_path / "again.t2f", loaded)
    assert again.read_bytes() == path.read_bytes()


def test_checkpoint_32_bit_default(tiny_config, tmp_path):
    ckpt = _checkpoint(tiny_config)
    path = save_checkpoint(tmp_path / "model.t2f", ckpt)
    assert path.read_bytes()[6] == 4
    loaded = load_checkpoint(path)
    assert loaded.generator["proj.w"].data.dtype == np.float32
    np.testing.assert_array_equal(loaded.generator["proj.w"].data, ckpt.generator["proj.w"].data)


def test_checkpoint_bad_magic(tiny_config, tmp_path):
    path = save_checkpoint(tmp_path / "model.t2f", _checkpoint(tiny_config))
    path.write_bytes(b"NOPE" + path.read_bytes()[4:])
    with pytest.raises(CheckpointFormatError, match="magic"):
        load_checkpoint(path)


def test_checkpoint_truncated(tiny_config, tmp_path):
    path = save_checkpoint(tmp_path / "model.t2f", _checkpoint(tiny_config))
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(CheckpointFormatError, match="truncated"):
        load_checkpoint(path)


def test_checkpoint_shape_mismatch(tiny_config, tmp_path):
    ckpt = _checkpoint(tiny_config)
    path = save_checkpoint(tmp_path / "model.t2f", ckpt)
    other = ModelCheckpoint(model=tiny_config.model_copy(update={"reduce_dim": 4}),
                            generator=ckpt.generator, discriminator=ckpt.discriminator)
    bad = save_checkpoint(tmp_path / "bad.t2f", other)
    with pytest.raises(CheckpointFormatError, match="shape"):
        load_checkpoint(bad)
    assert path.exists()


def test_checkpoint_loads_into_current_precision(tiny_config, tmp_path):
    with precision(64):
        path = save_checkpoint(tmp_path / "model.t2f", _checkpoint(tiny_config))
    loaded = load_checkpoint(path)
    assert loaded.generator["proj.w"].data.dtype == np.float32
    assert loaded.adam_g.m["proj.w"].dtype == np.float32
    assert loaded.adam_g.v["proj.w"].dtype == np.float32
