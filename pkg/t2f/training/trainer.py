"""
GAN-CLS training: one discriminator step then one generator step per iteration.

State needed to continue a run (parameters, batchnorm statistics, both Adam
states, iteration and collapse streak) lives in the checkpoint; all per-
iteration randomness is derived from (seed, iteration).
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel

from t2f.engine import Adam, Tape, Tensor, backward, get_precision
from t2f.errors import ConfigError
from t2f.models import (
    DiscriminatorParams,
    GeneratorParams,
    LatentInput,
    ModelCheckpoint,
    ModelConfig,
    generator_forward,
    init_params,
    load_checkpoint,
    sample_noise,
    save_checkpoint,
)
from t2f.training.batches import (
    LABEL_STREAM,
    NOISE_STREAM,
    Batch,
    TrainingSet,
    apply_label_swap,
    iterations_per_epoch,
    make_batch,
)
from t2f.training.config import TrainConfig
from t2f.training.losses import gancls_discriminator_loss, gancls_generator_loss, noisy_labels
from t2f.training.reports import JsonlReportWriter, ReportStream, TrainStepReport

logger = logging.getLogger(__name__)

COLLAPSE_REAL = 0.99
COLLAPSE_FAKE = 0.01


@dataclass
class TrainState:
    model: ModelConfig
    generator: GeneratorParams
    discriminator: DiscriminatorParams
    opt_g: Adam
    opt_d: Adam
    iteration: int = 0
    collapse_streak: int = 0

    @classmethod
    def fresh(cls, config: TrainConfig, text_dim: int) -> "TrainState":
        model = config.network(text_dim)
        gen, disc = init_params(config.seed, model)
        return cls(
            model=model,
            generator=gen,
            discriminator=disc,
            opt_g=Adam(dict(gen.items()), config.lr_g, config.beta1, config.beta2),
            opt_d=Adam(dict(disc.items()), config.lr_d, config.beta1, config.beta2),
        )

    @classmethod
    def from_checkpoint(cls, ckpt: ModelCheckpoint, config: TrainConfig) -> "TrainState":
        return cls(
            model=ckpt.model,
            generator=ckpt.generator,
            discriminator=ckpt.discriminator,
            opt_g=Adam(dict(ckpt.generator.items()), config.lr_g, config.beta1, config.beta2,
                       state=ckpt.adam_g),
            opt_d=Adam(dict(ckpt.discriminator.items()), config.lr_d, config.beta1, config.beta2,
                       state=ckpt.adam_d),
            iteration=ckpt.iteration,
            collapse_streak=int(ckpt.meta.get("collapse_streak", 0)),
        )

    def checkpoint(self, config: TrainConfig, extra: Optional[dict] = None) -> ModelCheckpoint:
        return ModelCheckpoint(
            model=self.model,
            generator=self.generator,
            discriminator=self.discriminator,
            adam_g=self.opt_g.state,
            adam_d=self.opt_d.state,
            iteration=self.iteration,
            meta={
                **(extra or {}),
                "train": config.model_dump(mode="json"),
                "collapse_streak": self.collapse_streak,
                "precision": get_precision(),
            },
        )


def _mean(t: Tensor) -> float:
    return float(np.mean(t.data))


def train_step(state: TrainState, batch: Batch, config: TrainConfig, iteration: int) -> TrainStepReport:
    gen, disc = state.generator, state.discriminator
    phi = batch.match_embeddings
    n = batch.size
    rng = np.random.default_rng([config.seed, NOISE_STREAM, iteration])

    # ── Discriminator ──
    fake = generator_forward(gen, LatentInput(Tensor(sample_noise(rng, n, state.model)), phi), "train")
    period = config.swap_period if config.swap_enabled else None
    d_real, d_fake, swapped = apply_label_swap(iteration, batch.real_images, fake, period)
    targets = None
    if config.label_noise > 0:
        label_rng = np.random.default_rng([config.seed, LABEL_STREAM, iteration])
        targets = noisy_labels(n, config.label_noise, label_rng)

    state.opt_d.zero_grad()
    with Tape() as tape:
        loss_d, scores = gancls_discriminator_loss(
            disc, d_real, phi, batch.mismatch_images, batch.mismatch_embeddings, d_fake, targets=targets)
    backward(tape, loss_d)
    state.opt_d.step()

    # ── Generator (fresh noise) ──
    state.opt_g.zero_grad()
    with Tape() as tape:
        fake_g = generator_forward(gen, LatentInput(Tensor(sample_noise(rng, n, state.model)), phi), "train")
        loss_g, _ = gancls_generator_loss(disc, fake_g, phi)
    backward(tape, loss_g)
    state.opt_g.step()

    real_scores, fake_scores = (scores.fake_match, scores.real_match) if swapped else (scores.real_match, scores.fake_match)
    d_real_mean, d_fake_mean = _mean(real_scores), _mean(fake_scores)
    if d_real_mean > COLLAPSE_REAL and d_fake_mean < COLLAPSE_FAKE:
        state.collapse_streak += 1
    else:
        state.collapse_streak = 0
    warning = state.collapse_streak >= config.collapse_patience
    if state.collapse_streak == config.collapse_patience:
        logger.warning(f"Iteration {iteration}: discriminator saturated for "
                       f"{config.collapse_patience} consecutive iterations (log losses near 0)")

    state.iteration = iteration
    return TrainStepReport(
        iteration=iteration,
        loss_d=loss_d.item(),
        loss_g=loss_g.item(),
        d_real_match=d_real_mean,
        d_real_mismatch=_mean(scores.real_mismatch),
        d_fake_match=d_fake_mean,
        swap_applied=swapped,
        collapse_warning=warning,
        control=not config.swap_enabled,
    )


# ── Loop ─────────────────────────────────────────────────────────────────────

@dataclass
class TrainResult:
    checkpoint: ModelCheckpoint
    reports: list[TrainStepReport] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def collapse_warnings(self) -> int:
        return sum(r.collapse_warning for r in self.reports)

    @property
    def swapped_steps(self) -> int:
        return sum(r.swap_applied for r in self.reports)


def train_loop(dataset: TrainingSet, config: TrainConfig,
               out: Optional[Union[str, Path]] = None,
               resume: Optional[Union[str, Path, ModelCheckpoint]] = None,
               stream: Optional[ReportStream] = None,
               report_path: Optional[Union[str, Path]] = None,
               meta: Optional[dict] = None) -> TrainResult:
    """
    Train until `config.total_iterations(len(dataset))`.

    Checkpoints go to `out` every `checkpoint_every` iterations and at the end.
    Reports go to `stream` (closed on return) and, one JSON line each, to
    `report_path`, appended to when resuming. `meta` is copied into every
    checkpoint.
    """
    if dataset.image_size != config.image_size:
        raise ConfigError(f"dataset images are {dataset.image_size}px, config expects {config.image_size}px")
    iterations_per_epoch(len(dataset), config.batch_size)
    total = config.total_iterations(len(dataset))

    if resume is not None:
        ckpt = resume if isinstance(resume, ModelCheckpoint) else load_checkpoint(resume)
        if ckpt.model != config.network(dataset.text_dim):
            raise ConfigError("checkpoint network shape does not match the config and dataset")
        state = TrainState.from_checkpoint(ckpt, config)
        if meta is None:
            meta = {k: v for k, v in ckpt.meta.items() if k not in ("train", "collapse_streak", "precision")}
        logger.info(f"Resuming from iteration {state.iteration}")
    else:
        state = TrainState.fresh(config, dataset.text_dim)

    writer = JsonlReportWriter(report_path, append=resume is not None) if report_path else None
    reports: list[TrainStepReport] = []
    started = time.monotonic()
    label = "control run" if not config.swap_enabled else "training"
    logger.info(f"Starting {label}: {total} iterations, batch {config.batch_size}, "
                f"{len(dataset)} records, {state.model.image_size}px, {get_precision()}-bit")
    try:
        for it in range(state.iteration + 1, total + 1):
            batch = make_batch(dataset, config.batch_size, config.seed, it, config.mismatch_strategy)
            report = train_step(state, batch, config, it)
            reports.append(report)
            if writer:
                writer.write(report)
            if stream:
                stream.publish(report)
            logger.debug(f"it {it}: J_D={report.loss_d:.4f} J_G={report.loss_g:.4f} swap={report.swap_applied}")
            if it % 100 == 0:
                logger.info(f"Iteration {it}/{total}: J_D={report.loss_d:.4f} J_G={report.loss_g:.4f}")
            if out is not None and it % config.checkpoint_every == 0 and it != total:
                save_checkpoint(out, state.checkpoint(config, meta))
    finally:
        if writer:
            writer.close()
        if stream:
            stream.close()

    ckpt = state.checkpoint(config, meta)
    if out is not None:
        save_checkpoint(out, ckpt)
    elapsed = time.monotonic() - started
    logger.info(f"Finished {label} at iteration {state.iteration} in {elapsed:.1f}s")
    return TrainResult(checkpoint=ckpt, reports=reports, seconds=elapsed)


# ── Swap control run ─────────────────────────────────────────────────────────

class RunSummary(BaseModel):
    swap_enabled: bool
    iterations: int
    swapped_steps: int
    collapse_warnings: int
    final_loss_d: Optional[float] = None
    final_loss_g: Optional[float] = None
    mean_d_real_match: Optional[float] = None
    mean_d_fake_match: Optional[float] = None


class ControlComparison(BaseModel):
    swap: RunSummary
    control: RunSummary


def summarize(result: TrainResult, swap_enabled: bool) -> RunSummary:
    reports = result.reports
    tail = reports[-100:]
    return RunSummary(
        swap_enabled=swap_enabled,
        iterations=result.checkpoint.iteration,
        swapped_steps=result.swapped_steps,
        collapse_warnings=result.collapse_warnings,
        final_loss_d=reports[-1].loss_d if reports else None,
        final_loss_g=reports[-1].loss_g if reports else None,
        mean_d_real_match=float(np.mean([r.d_real_match for r in tail])) if tail else None,
        mean_d_fake_match=float(np.mean([r.d_fake_match for r in tail])) if tail else None,
    )


def control_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.control{path.suffix}")


def train_with_control(dataset: TrainingSet, config: TrainConfig,
                       out: Optional[Union[str, Path]] = None,
                       report_path: Optional[Union[str, Path]] = None,
                       stream: Optional[ReportStream] = None,
                       meta: Optional[dict] = None) -> tuple[TrainResult, TrainResult, ControlComparison]:
    """Train with the swap, then again from the same seed without it."""
    main = train_loop(dataset, config, out=out, stream=stream, report_path=report_path, meta=meta)
    control_config = config.model_copy(update={"swap_enabled": False})
    control = train_loop(
        dataset,
        control_config,
        out=control_path(out) if out is not None else None,
        report_path=control_path(report_path) if report_path is not None else None,
        meta=meta,
    )
    comparison = ControlComparison(swap=summarize(main, True), control=summarize(control, False))
    logger.info(f"Collapse warnings: swap {comparison.swap.collapse_warnings}, "
                f"control {comparison.control.collapse_warnings}")
    return main, control, comparison
