"""
t2f CLI: desk-scale text-to-face lab
Commands: caption, embed, synth, train, generate, evaluate, gradcheck, critique, probe

Every command that writes artifacts also writes a run manifest next to them.
Exit codes: 0 success, 1 contract/parse/usage errors, 2 I/O errors.
"""

import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import click
import numpy as np
import typer
from pydantic import ValidationError
from rich import box
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from t2f.config.settings import settings
from t2f.errors import (
    CheckpointFormatError,
    ContractError,
    ExtractionError,
    IngestionError,
    ParseError,
)

app = typer.Typer(
    name="t2f",
    help="t2f: caption-conditioned face generation at desk scale",
    add_completion=False,
)
console = Console()

logger = logging.getLogger("t2f.cli")

_argv: list[str] = []


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
    )
    logging.getLogger("PIL").setLevel(logging.WARNING)


@app.callback()
def main(
    log_level: str = typer.Option(settings.log_level, "--log-level", help="DEBUG | INFO | WARNING"),
):
    """Caption compiler, GAN-CLS trainer and evaluator on a from-scratch tensor engine."""
    _setup_logging(log_level)


def _manifest(command: str, config: dict, seeds: Optional[dict] = None):
    from t2f.storage import RunManifest
    return RunManifest(command=command, argv=list(_argv), config=config, seeds=seeds or {})


def _embedding_config(dim: Optional[int], seed: int = 0):
    from t2f.embedding import EmbeddingConfig
    return EmbeddingConfig(dim=dim, seed=seed) if dim is not None else EmbeddingConfig(seed=seed)


def _load_dataset_dir(path: Path, size: int, embedding_config, held_out: bool = False):
    """Records of a CelebA-format directory, minus the held-out captions unless `held_out`."""
    from t2f.captions import read_caption_jsonl
    from t2f.dataset import ATTR_FILE, IDENTITY_FILE, IMAGE_DIR, TEST_CAPTIONS_FILE, load_celeba_format

    identity = path / IDENTITY_FILE
    records = load_celeba_format(
        path / IMAGE_DIR, path / ATTR_FILE,
        identity if identity.is_file() else None,
        size=size, embedding_config=embedding_config,
    )
    test_file = path / TEST_CAPTIONS_FILE
    if not held_out and test_file.is_file():
        test_ids = {c.image_id for c in read_caption_jsonl(test_file)}
        records = [r for r in records if r.image_id not in test_ids]
        logger.info(f"Excluded {len(test_ids)} held-out records listed in {test_file.name}")
    return records


# ── caption ───────────────────────────────────────────────────────────────────

@app.command()
def caption(
    attrs: Path = typer.Option(..., "--attrs", help="CelebA list_attr file"),
    out: Path = typer.Option(..., "--out", help=".tsv for image_id<TAB>caption, otherwise JSON lines"),
    ids: Optional[str] = typer.Option(None, "--ids", help="Comma-separated image ids to keep"),
):
    """Compile captions from a CelebA attribute file."""
    from t2f.captions import caption_corpus, parse_attr_file, write_caption_jsonl, write_caption_tsv

    manifest = _manifest("caption", {"attrs": str(attrs), "ids": ids})
    vectors = parse_attr_file(attrs)
    if ids:
        wanted = [i.strip() for i in ids.split(",") if i.strip()]
        by_id = {v.source_id: v for v in vectors}
        unknown = [i for i in wanted if i not in by_id]
        if unknown:
            raise ContractError(f"ids not present in {attrs.name}: {', '.join(unknown)}")
        vectors = [by_id[i] for i in wanted]

    records = caption_corpus(vectors)
    writer = write_caption_tsv if out.suffix == ".tsv" else write_caption_jsonl
    out.parent.mkdir(parents=True, exist_ok=True)
    writer(records, out)
    manifest.finish(out, [out])
    console.print(f"[green]Wrote {len(records)} captions[/] → {out}")


# ── embed ─────────────────────────────────────────────────────────────────────

@app.command()
def embed(
    text: str = typer.Option(..., "--text", help="Caption to embed"),
    dim: int = typer.Option(settings.embedding_dim, "--dim", help="Embedding dimension"),
    out: Path = typer.Option(..., "--out", help="Raw little-endian float32 output"),
    seed: int = typer.Option(0, "--seed", help="Hashing seed"),
):
    """Embed one caption into a unit vector."""
    from t2f.embedding import embed_caption

    config = _embedding_config(dim, seed)
    manifest = _manifest("embed", {"text": text, "embedding": config.model_dump(mode="json")}, {"hash": seed})
    vector = embed_caption(text, config)
    vector.write(out)
    manifest.finish(out, [out])
    console.print(f"[green]Wrote {vector.dim}-d embedding[/] (norm {vector.norm:.6f}) → {out}")


# ── synth ─────────────────────────────────────────────────────────────────────

@app.command()
def synth(
    n: int = typer.Option(settings.desk_dataset_size, "--n", help="Number of records"),
    classes: int = typer.Option(settings.desk_classes, "--classes", help="Identity classes"),
    size: int = typer.Option(settings.desk_image_size, "--size", help="Image side in pixels"),
    out: Path = typer.Option(..., "--out", help="Output directory"),
    seed: int = typer.Option(0, "--seed"),
    train_fraction: float = typer.Option(0.75, "--train-fraction", help="Per-class training share"),
    dim: Optional[int] = typer.Option(None, "--dim", help="Embedding dimension"),
):
    """Generate the procedural glyph-face dataset in CelebA layout."""
    from t2f.dataset import generate_dataset, split_dataset, write_synth_dir

    config = _embedding_config(dim)
    manifest = _manifest("synth", {
        "n": n, "classes": classes, "size": size, "train_fraction": train_fraction,
        "embedding": config.model_dump(mode="json"),
    }, {"dataset": seed})
    records = generate_dataset(n, classes, seed=seed, size=size, embedding_config=config)
    train, test = split_dataset(records, train_fraction)
    written = write_synth_dir(records, out, test=test)
    manifest.finish(out, written)

    table = Table(title="Synthetic dataset", box=box.ROUNDED)
    table.add_column("Records", justify="right", style="cyan")
    table.add_column("Classes", justify="right")
    table.add_column("Train / test", justify="right")
    table.add_column("Size", justify="right")
    table.add_row(str(n), str(classes), f"{len(train)} / {len(test)}", f"{size}px")
    console.print(table)
    console.print(f"[green]Wrote[/] {out}")


# ── train ─────────────────────────────────────────────────────────────────────

@app.command()
def train(
    dataset: Path = typer.Option(..., "--dataset", help="CelebA-format directory"),
    config: Optional[Path] = typer.Option(None, "--config", help="key=value TrainConfig file"),
    out: Path = typer.Option(..., "--out", help="Checkpoint path"),
    resume: Optional[Path] = typer.Option(None, "--resume", help="Checkpoint to resume from"),
    report: Optional[Path] = typer.Option(None, "--report", help="JSON-lines step report stream"),
    control: bool = typer.Option(False, "--control", help="Also train without the label swap"),
    dim: Optional[int] = typer.Option(None, "--dim", help="Embedding dimension (fresh runs)"),
):
    """Train the GAN-CLS generator and discriminator."""
    if control and resume is not None:
        raise ContractError("--control cannot be combined with --resume")
    from t2f.models import embedding_config_of, load_checkpoint
    from t2f.training import TrainConfig, TrainingSet, load_train_config, train_loop, train_with_control

    train_config = load_train_config(config) if config else TrainConfig()
    resume_ckpt = load_checkpoint(resume) if resume else None
    embedding = embedding_config_of(resume_ckpt) if resume_ckpt else _embedding_config(dim)

    records = _load_dataset_dir(dataset, train_config.image_size, embedding)
    training_set = TrainingSet.from_records(records)
    meta = {"embedding": embedding.model_dump(mode="json"), "dataset": str(dataset)}
    manifest = _manifest("train", {
        "train": train_config.model_dump(mode="json"), **meta,
        "resume": str(resume) if resume else None, "control": control,
    }, {"train": train_config.seed, "embedding": embedding.seed})

    console.print(Panel(
        f"[bold green]Training[/]\n"
        f"Records    : [cyan]{len(training_set)}[/]\n"
        f"Iterations : [cyan]{train_config.total_iterations(len(training_set))}[/]\n"
        f"Image size : [cyan]{train_config.image_size}px[/]",
        title="t2f",
        border_style="green",
    ))

    written = [out]
    if control:
        main_run, _, comparison = train_with_control(training_set, train_config, out=out,
                                                     report_path=report, meta=meta)
        anchor = report if report is not None else out
        summary_path = anchor.with_name(anchor.stem + ".comparison.json")
        summary_path.write_text(comparison.model_dump_json(indent=2) + "\n", encoding="utf-8")
        written.append(summary_path)
        _print_comparison(comparison)
    else:
        main_run = train_loop(training_set, train_config, out=out, resume=resume_ckpt,
                              report_path=report, meta=meta)
    if report:
        written.append(report)
    manifest.finish(out, written)

    console.print(Panel(
        f"[bold]Checkpoint saved[/]\n"
        f"Iteration          : [cyan]{main_run.checkpoint.iteration}[/]\n"
        f"Swapped steps      : [cyan]{main_run.swapped_steps}[/]\n"
        f"Collapse warnings  : [cyan]{main_run.collapse_warnings}[/]\n"
        f"Duration           : [cyan]{main_run.seconds:.1f}s[/]",
        title="Done",
        border_style="green",
    ))


def _print_comparison(comparison) -> None:
    table = Table(title="Swap vs control", box=box.ROUNDED)
    table.add_column("Run", style="cyan")
    table.add_column("Iterations", justify="right")
    table.add_column("Swapped", justify="right")
    table.add_column("Collapse warnings", justify="right")
    table.add_column("Final J_D", justify="right")
    table.add_column("Final J_G", justify="right")
    for name, s in (("swap", comparison.swap), ("control", comparison.control)):
        table.add_row(
            name, str(s.iterations), str(s.swapped_steps), str(s.collapse_warnings),
            f"{s.final_loss_d:.4f}" if s.final_loss_d is not None else "—",
            f"{s.final_loss_g:.4f}" if s.final_loss_g is not None else "—",
        )
    console.print(table)


# ── generate ──────────────────────────────────────────────────────────────────

@app.command()
def generate(
    ckpt: Path = typer.Option(..., "--ckpt", help="Generator checkpoint"),
    caption_text: str = typer.Option(..., "--caption", help="Caption to condition on"),
    n: int = typer.Option(16, "--n", help="Number of images"),
    grid: Path = typer.Option(..., "--grid", help="Output image grid (.ppm, .png)"),
    seed: int = typer.Option(0, "--seed"),
    cols: int = typer.Option(8, "--cols", help="Grid columns"),
):
    """Render a grid of K samples for one caption."""
    from t2f.dataset import save_image_grid
    from t2f.models import generate_from_captions, load_checkpoint

    if n < 1:
        raise ContractError(f"--n must be at least 1, got {n}")
    manifest = _manifest("generate", {"ckpt": str(ckpt), "caption": caption_text, "n": n, "cols": cols},
                         {"noise": seed})
    checkpoint = load_checkpoint(ckpt)
    images = generate_from_captions(checkpoint, [caption_text] * n, seed=seed)
    save_image_grid(list(images), grid, cols=min(cols, n))
    manifest.finish(grid, [grid])
    console.print(f"[green]Wrote {n} samples[/] for [italic]{caption_text!r}[/] → {grid}")


# ── evaluate ──────────────────────────────────────────────────────────────────

@app.command()
def evaluate(
    ckpt: Path = typer.Option(..., "--ckpt", help="Generator checkpoint"),
    captions: Path = typer.Option(..., "--captions", help="Caption JSON lines with identity classes"),
    classifier: Path = typer.Option(..., "--classifier", help="Probe classifier from `t2f probe`"),
    samples: int = typer.Option(settings.desk_samples, "--samples", help="Generated images to score"),
    splits: int = typer.Option(settings.eval_splits, "--splits", help="Score splits"),
    out: Path = typer.Option(..., "--out", help="JSON report"),
    seed: int = typer.Option(0, "--seed"),
):
    """Score generated images with the probe classifier."""
    from t2f.captions import read_caption_jsonl
    from t2f.evaluation import load_classifier, run_evaluation
    from t2f.models import load_checkpoint

    manifest = _manifest("evaluate", {
        "ckpt": str(ckpt), "captions": str(captions), "classifier": str(classifier),
        "samples": samples, "splits": splits,
    }, {"noise": seed})
    report = run_evaluation(load_checkpoint(ckpt), read_caption_jsonl(captions), load_classifier(classifier),
                            n_samples=samples, splits=splits, seed=seed)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    manifest.finish(out, [out])

    table = Table(title="Evaluation", box=box.ROUNDED)
    table.add_column("Metric", style="cyan")
    table.add_column("Value", justify="right")
    table.add_row("Score (exp KL)", report.score.summary())
    table.add_row("Mean KL", f"{report.score.score_kl:.4f}")
    table.add_row("H(marginal)", f"{report.score.marginal_entropy:.4f}")
    table.add_row("H(conditional)", f"{report.score.conditional_entropy:.4f}")
    if report.probe_agreement is not None:
        table.add_row("Probe agreement", f"{report.probe_agreement:.1%}")
    table.add_row("Samples / classes", f"{report.samples} / {report.classes}")
    console.print(table)


# ── gradcheck ─────────────────────────────────────────────────────────────────

@app.command()
def gradcheck(
    seed: int = typer.Option(0, "--seed"),
    tolerance: float = typer.Option(1e-6, "--tolerance", help="Max relative error"),
    networks: bool = typer.Option(True, "--networks/--primitives-only", help="Include full-network checks"),
):
    """Central finite-difference check of every primitive and both networks (64-bit)."""
    from t2f.engine import primitive_suite
    from t2f.models.checks import network_suite

    results = primitive_suite(seed, tolerance)
    if networks:
        results += network_suite(seed, tolerance)

    table = Table(title="Gradient checks", box=box.ROUNDED)
    table.add_column("Check", style="cyan")
    table.add_column("Coords", justify="right")
    table.add_column("Max rel. error", justify="right")
    table.add_column("Status", justify="center")
    for r in results:
        status = "[green]pass[/]" if r.passed else "[red]FAIL[/]"
        table.add_row(r.name, str(r.coords_checked), f"{r.max_rel_error:.2e}", status)
    console.print(table)

    failed = [r.name for r in results if not r.passed]
    if failed:
        console.print(f"[red]{len(failed)} of {len(results)} checks failed:[/] {', '.join(failed)}")
        raise typer.Exit(1)
    console.print(f"[green]All {len(results)} checks passed[/]")


# ── critique ──────────────────────────────────────────────────────────────────

@app.command()
def critique(
    confidence: Optional[float] = typer.Option(None, "--confidence", help="Classifier confidence in (0, 1]"),
    classifier: Optional[Path] = typer.Option(None, "--classifier", help="Measure confidence from this classifier"),
    dataset: Optional[Path] = typer.Option(None, "--dataset", help="Dataset directory whose images --classifier is measured on"),
    classes: int = typer.Option(10, "--classes"),
    samples: int = typer.Option(1000, "--samples"),
    splits: int = typer.Option(settings.eval_splits, "--splits"),
    grid: str = typer.Option("0,0.2,0.4,0.6,0.8,1", "--grid", help="Comma-separated skew values"),
    overlap: float = typer.Option(0.0, "--overlap", help="Probability a sample's identity is randomized"),
    seed: int = typer.Option(0, "--seed"),
    out: Optional[Path] = typer.Option(None, "--out", help="JSON sweep report"),
):
    """Skew sweep: how the score reacts to class-imbalanced samples."""
    from t2f.evaluation import load_classifier, measure_confidence, skew_sweep_experiment

    if classifier is not None:
        if dataset is None:
            raise ContractError("--classifier needs --dataset to measure confidence on")
        clf = load_classifier(classifier)
        records = _load_dataset_dir(dataset, clf.config.image_size, _embedding_config(None), held_out=True)
        confidence = measure_confidence(clf, np.stack([r.image for r in records]))
        classes = clf.n_classes
        console.print(f"Measured classifier confidence [cyan]{confidence:.4f}[/] over {len(records)} images")
    elif confidence is None:
        confidence = 1.0

    try:
        skews = [float(s) for s in grid.split(",") if s.strip()]
    except ValueError:
        raise ContractError(f"--grid must be comma-separated numbers, got {grid!r}") from None

    sweep = skew_sweep_experiment(confidence, classes, skews, n=samples, splits=splits,
                                  overlap=overlap, seed=seed)

    table = Table(title=f"Skew sweep (κ={confidence:.3f}, C={classes})", box=box.ROUNDED)
    table.add_column("Skew", justify="right", style="cyan")
    table.add_column("Score", justify="right")
    table.add_column("Closed form", justify="right")
    for p in sweep.points:
        table.add_row(f"{p.skew:.2f}", f"{p.score_mean:.4f} ± {p.score_std:.4f}", f"{p.closed_form:.4f}")
    console.print(table)
    verdict = "[green]strictly decreasing[/]" if sweep.strictly_decreasing() else "[yellow]not monotone[/]"
    console.print(f"Score across the grid: {verdict}")

    if out is not None:
        manifest = _manifest("critique", {
            "confidence": confidence, "classes": classes, "samples": samples, "splits": splits,
            "grid": skews, "overlap": overlap,
        }, {"overlap": seed})
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(sweep.model_dump_json(indent=2) + "\n", encoding="utf-8")
        manifest.finish(out, [out])


# ── probe ─────────────────────────────────────────────────────────────────────

@app.command()
def probe(
    dataset: Path = typer.Option(..., "--dataset", help="CelebA-format directory"),
    out: Path = typer.Option(..., "--out", help="Classifier file"),
    epochs: int = typer.Option(20, "--epochs"),
    size: int = typer.Option(settings.desk_image_size, "--size", help="Image side in pixels"),
    batch_size: int = typer.Option(64, "--batch-size"),
    seed: int = typer.Option(0, "--seed"),
):
    """Train the identity-class probe classifier used by `evaluate`."""
    from t2f.evaluation import save_classifier, train_probe_classifier

    manifest = _manifest("probe", {"dataset": str(dataset), "epochs": epochs, "size": size,
                                   "batch_size": batch_size}, {"classifier": seed})
    records = _load_dataset_dir(dataset, size, _embedding_config(None), held_out=True)
    labels = np.array([r.identity_class for r in records])
    clf = train_probe_classifier(np.stack([r.image for r in records]), labels, int(labels.max()) + 1,
                                 epochs=epochs, seed=seed, batch_size=batch_size)
    save_classifier(out, clf)
    manifest.finish(out, [out])
    accuracy = f"{clf.held_out_accuracy:.1%}" if clf.held_out_accuracy is not None else "—"
    console.print(f"[green]Saved probe classifier[/] ({clf.n_classes} classes, held-out accuracy {accuracy}) → {out}")


# ── routing ───────────────────────────────────────────────────────────────────

def route(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and map its outcome to an exit code."""
    _argv[:] = list(argv) if argv is not None else sys.argv[1:]
    command = typer.main.get_command(app)
    try:
        rv = command.main(args=list(_argv), prog_name="t2f",
                          standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except (ContractError, ParseError, ExtractionError, ValidationError) as exc:
        console.print(f"[red]Error:[/] {exc}")
        return 1
    except (OSError, IngestionError, CheckpointFormatError) as exc:
        console.print(f"[red]I/O error:[/] {exc}")
        return 2
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(route())
