import json
from pathlib import Path

import numpy as np
import pytest

from cli import route
from t2f.storage import compute_hash, read_manifest

FIXTURES = Path(__file__).parent / "fixtures"

TINY_TRAIN = """\
# tiny run for the CLI tests
iterations = 3
batch_size = 4
noise_dim = 8
reduce_dim = 8
base_channels = 4
checkpoint_every = 2
seed = 7
"""


def test_unknown_subcommand_prints_usage(capsys):
    assert route(["paint"]) == 1
    assert "Usage" in capsys.readouterr().err


def test_gradcheck_passes():
    assert route(["gradcheck"]) == 0


def test_caption_matches_golden_tsv(tmp_path):
    out = tmp_path / "captions.tsv"
    assert route(["caption", "--attrs", str(FIXTURES / "list_attr_small.txt"), "--out", str(out)]) == 0
    assert out.read_bytes() == (FIXTURES / "captions_small.tsv").read_bytes()

    manifest = read_manifest(out, out=True)
    assert manifest.command == "caption"
    assert manifest.artifacts == {str(out): compute_hash(out)}
    assert manifest.stale_artifacts() == []


def test_caption_id_filter(tmp_path):
    out = tmp_path / "one.tsv"
    assert route(["caption", "--attrs", str(FIXTURES / "list_attr_small.txt"), "--out", str(out),
                  "--ids", "b.jpg"]) == 0
    assert out.read_text() == "b.jpg\tShe has wavy hair.\n"
    assert route(["caption", "--attrs", str(FIXTURES / "list_attr_small.txt"), "--out", str(out),
                  "--ids", "z.jpg"]) == 1


def test_caption_error_codes(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("two\nheader\n")
    assert route(["caption", "--attrs", str(bad), "--out", str(tmp_path / "c.tsv")]) == 1
    assert route(["caption", "--attrs", str(tmp_path / "absent.txt"), "--out", str(tmp_path / "c.tsv")]) == 2


def test_embed_writes_raw_floats(tmp_path):
    out = tmp_path / "vec.f32"
    assert route(["embed", "--text", "She has wavy hair.", "--dim", "32", "--out", str(out)]) == 0
    values = np.frombuffer(out.read_bytes(), dtype="<f4")
    assert values.shape == (32,)
    assert np.linalg.norm(values) == pytest.approx(1.0, abs=1e-6)
    assert route(["embed", "--text", "x", "--dim", "4", "--out", str(out)]) == 1


def test_critique_sweep_report(tmp_path):
    out = tmp_path / "sweep.json"
    assert route(["critique", "--classes", "10", "--samples", "1000", "--out", str(out)]) == 0
    sweep = json.loads(out.read_text())
    scores = [p["score_mean"] for p in sweep["points"]]
    assert len(scores) == 6
    assert scores[0] == pytest.approx(10.0, abs=1e-9)
    assert all(b < a for a, b in zip(scores, scores[1:]))
    assert route(["critique", "--grid", "0,fast"]) == 1


def test_corrupt_checkpoint_is_an_io_error(tmp_path):
    ckpt = tmp_path / "broken.t2fg"
    ckpt.write_bytes(b"not a checkpoint")
    assert route(["generate", "--ckpt", str(ckpt), "--caption", "He is smiling.",
                  "--grid", str(tmp_path / "g.ppm")]) == 2


# ── End-to-end pipeline ──────────────────────────────────────────────────────

@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipeline")
    data = root / "synth"
    assert route(["synth", "--n", "24", "--classes", "4", "--size", "16", "--dim", "16",
                  "--out", str(data)]) == 0
    config = root / "tiny.cfg"
    config.write_text(TINY_TRAIN)
    ckpt = root / "gen.t2fg"
    report = root / "steps.jsonl"
    assert route(["train", "--dataset", str(data), "--config", str(config), "--out", str(ckpt),
                  "--report", str(report), "--dim", "16"]) == 0
    return root, data, config, ckpt, report


def test_synth_layout(pipeline):
    _, data, _, _, _ = pipeline
    assert len(list((data / "images").glob("*.ppm"))) == 24
    manifest = read_manifest(data / "manifest.json")
    assert manifest.seeds == {"dataset": 0}
    assert manifest.stale_artifacts() == []
    assert len((data / "captions_test.jsonl").read_text().splitlines()) == 8


def test_train_writes_checkpoint_report_and_manifest(pipeline):
    _, _, _, ckpt, report = pipeline
    from t2f.models import load_checkpoint

    loaded = load_checkpoint(ckpt)
    assert loaded.iteration == 3
    assert loaded.meta["embedding"]["dim"] == 16
    assert len(report.read_text().splitlines()) == 3
    manifest = read_manifest(ckpt, out=True)
    assert manifest.config["train"]["iterations"] == 3
    assert set(manifest.artifacts) == {str(ckpt), str(report)}


def test_generate_grid(pipeline, tmp_path):
    _, _, _, ckpt, _ = pipeline
    grid = tmp_path / "grid.ppm"
    assert route(["generate", "--ckpt", str(ckpt), "--caption", "He sports a goatee.",
                  "--n", "4", "--grid", str(grid)]) == 0
    assert grid.read_bytes().startswith(b"P6")
    assert route(["generate", "--ckpt", str(ckpt), "--caption", "x", "--n", "0", "--grid", str(grid)]) == 1


def test_probe_then_evaluate(pipeline):
    root, data, _, ckpt, _ = pipeline
    clf = root / "probe.t2fc"
    assert route(["probe", "--dataset", str(data), "--out", str(clf), "--epochs", "1",
                  "--batch-size", "8"]) == 0
    out = root / "report.json"
    assert route(["evaluate", "--ckpt", str(ckpt), "--captions", str(data / "captions_test.jsonl"),
                  "--classifier", str(clf), "--samples", "8", "--splits", "2", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert 1.0 <= report["score"]["score_exp"] <= 4.0
    assert report["classes"] == 4
    assert 0.0 <= report["probe_agreement"] <= 1.0


def test_train_rejects_unknown_config_key(pipeline, tmp_path):
    _, data, _, _, _ = pipeline
    config = tmp_path / "bad.cfg"
    config.write_text("iterations = 2\nlearning_rate = 0.1\n")
    assert route(["train", "--dataset", str(data), "--config", str(config),
                  "--out", str(tmp_path / "x.t2fg")]) == 1


def test_train_missing_dataset_is_an_io_error(tmp_path):
    assert route(["train", "--dataset", str(tmp_path / "nowhere"), "--out", str(tmp_path / "x.t2fg")]) == 2
