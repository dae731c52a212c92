"""
Finite-difference gradient verification.

All oracles run in 64-bit. `check_gradients` perturbs the parameter arrays in
place, so the loss closure must read its parameters at call time.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Union

import numpy as np

from t2f.engine import functional as F
from t2f.engine.precision import precision
from t2f.engine.tensor import Tape, Tensor, backward, parameter

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-6
ERROR_FLOOR = 1e-2

LossFn = Callable[[], Tensor]


@dataclass
class GradCheckResult:
    name: str
    max_rel_error: float
    coords_checked: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), ERROR_FLOOR)
    return np.abs(analytic - numeric) / scale


def _scalar(value: Union[Tensor, float]) -> float:
    return value.item() if isinstance(value, Tensor) else float(value)


def finite_difference_grad(f: Callable[[Tensor], Union[Tensor, float]], x: Tensor,
                           h: float = DEFAULT_STEP) -> Tensor:
    """Central-difference gradient of scalar `f` at `x`, every coordinate, in 64-bit."""
    with precision(64):
        base = x.data.astype(np.float64)
        grad = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            probe = base.copy()
            probe[idx] = base[idx] + h
            f_plus = _scalar(f(Tensor(probe)))
            probe[idx] = base[idx] - h
            f_minus = _scalar(f(Tensor(probe)))
            grad[idx] = (f_plus - f_minus) / (2.0 * h)
        return Tensor(grad)


def _sample_coords(shape: tuple[int, ...], max_coords: Optional[int],
                   rng: np.random.Generator) -> list[tuple[int, ...]]:
    coords = list(np.ndindex(shape))
    if max_coords is None or len(coords) <= max_coords:
        return coords
    picks = rng.choice(len(coords), size=max_coords, replace=False)
    return [coords[i] for i in sorted(picks)]


def _central_difference(loss_fn: LossFn, p: Tensor, idx: tuple[int, ...], h: float) -> float:
    original = p.data[idx]
    p.data[idx] = original + h
    f_plus = loss_fn().item()
    p.data[idx] = original - h
    f_minus = loss_fn().item()
    p.data[idx] = original
    return (f_plus - f_minus) / (2.0 * h)


def check_gradients(name: str, loss_fn: LossFn, params: Mapping[str, Tensor],
                    h: float = DEFAULT_STEP, tolerance: float = DEFAULT_TOLERANCE,
                    max_coords: Optional[int] = None, seed: int = 0,
                    kink_retries: int = 2) -> GradCheckResult:
    """
    Compare reverse-mode gradients of `loss_fn` against central differences.

    `params` must be 64-bit tensors with requires_grad set. Large tensors are
    checked on a random subset of `max_coords` coordinates each. A coordinate
    that misses tolerance is re-differenced with steps h/10, h/100, ... up to
    `kink_retries` times; the stencil may straddle a leaky-relu kink, which a
    smaller step avoids, while a wrong backward rule fails at every step.
    """
    rng = np.random.default_rng(seed)
    for p in params.values():
        p.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
    backward(tape, loss)

    worst = 0.0
    checked = 0
    for pname, p in params.items():
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        for idx in _sample_coords(p.shape, max_coords, rng):
            step = h
            numeric = _central_difference(loss_fn, p, idx, step)
            err = float(relative_error(np.asarray(analytic[idx]), np.asarray(numeric)))
            for _ in range(kink_retries):
                if err < tolerance:
                    break
                step /= 10.0
                numeric = _central_difference(loss_fn, p, idx, step)
                err = min(err, float(relative_error(np.asarray(analytic[idx]), np.asarray(numeric))))
            if err > worst:
                worst = err
                logger.debug(f"{name}: worst so far {pname}{idx} analytic={analytic[idx]:.6g} "
                             f"numeric={numeric:.6g}")
            checked += 1
    result = GradCheckResult(name=name, max_rel_error=worst, coords_checked=checked,
                             tolerance=tolerance)
    logger.debug(f"gradcheck {name}: max rel error {worst:.3e} over {checked} coords")
    return result


# ── Primitive suite ──────────────────────────────────────────────────────────

def _away_from_zero(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Normal draws nudged off the leaky-relu kink."""
    x = rng.normal(size=shape)
    return np.where(np.abs(x) < 0.05, x + np.sign(x + 1e-12) * 0.1, x)


def primitive_suite(seed: int = 0, tolerance: float = DEFAULT_TOLERANCE) -> list[GradCheckResult]:
    """One gradient check per differentiable primitive plus a composite graph."""
    results = []
    with precision(64):
        rng = np.random.default_rng(seed)

        x = parameter(rng.normal(size=(3, 4)))
        w = parameter(rng.normal(size=(4, 5)))
        b = parameter(rng.normal(size=5))
        results.append(check_gradients(
            "affine", lambda: F.mean(F.square(F.affine(x, w, b))), {"x": x, "w": w, "b": b},
            tolerance=tolerance))

        img = parameter(rng.normal(size=(2, 2, 5, 5)))
        kern = parameter(rng.normal(size=(3, 2, 3, 3)))
        cb = parameter(rng.normal(size=3))
        results.append(check_gradients(
            "conv2d", lambda: F.mean(F.square(F.conv2d(img, kern, stride=2, pad=1, bias=cb))),
            {"x": img, "kernel": kern, "bias": cb}, tolerance=tolerance))

        small = parameter(rng.normal(size=(2, 3, 3, 3)))
        dkern = parameter(rng.normal(size=(3, 2, 4, 4)))
        results.append(check_gradients(
            "deconv2d", lambda: F.mean(F.square(F.deconv2d(small, dkern, stride=2, pad=1))),
            {"x": small, "kernel": dkern}, tolerance=tolerance))

        bx = parameter(rng.normal(size=(3, 2, 2, 2)))
        gamma = parameter(rng.normal(size=2))
        beta = parameter(rng.normal(size=2))
        target = rng.normal(size=(3, 2, 2, 2))
        results.append(check_gradients(
            "batchnorm[train]",
            lambda: F.mean(F.mul(F.batchnorm(bx, gamma, beta, mode="train"), target)),
            {"x": bx, "gamma": gamma, "beta": beta}, tolerance=tolerance))
        stats = F.RunningStats(mean=rng.normal(size=2), var=rng.uniform(0.5, 2.0, size=2))
        results.append(check_gradients(
            "batchnorm[infer]",
            lambda: F.mean(F.square(F.batchnorm(bx, gamma, beta, mode="infer", running=stats))),
            {"x": bx, "gamma": gamma, "beta": beta}, tolerance=tolerance))

        lx = parameter(_away_from_zero(rng, (4, 5)))
        results.append(check_gradients(
            "leaky_relu", lambda: F.sum(F.mul(F.leaky_relu(lx, 0.2), lx)), {"x": lx},
            tolerance=tolerance))

        ax = parameter(rng.normal(size=(20,)))
        results.append(check_gradients("tanh", lambda: F.sum(F.tanh(ax)), {"x": ax},
                                       tolerance=tolerance))
        results.append(check_gradients("sigmoid", lambda: F.sum(F.sigmoid(ax)), {"x": ax},
                                       tolerance=tolerance))

        px = parameter(rng.uniform(0.2, 2.0, size=(12,)))
        results.append(check_gradients("log", lambda: F.sum(F.log(px)), {"x": px},
                                       tolerance=tolerance))

        vec = parameter(rng.normal(size=(2, 3)))
        grid = parameter(rng.normal(size=(2, 2, 4, 4)))
        weights = rng.normal(size=(2, 5, 4, 4))
        results.append(check_gradients(
            "concat+tile",
            lambda: F.sum(F.mul(F.concat([grid, F.tile_spatial(vec, 4, 4)], axis=1), weights)),
            {"vec": vec, "grid": grid}, tolerance=tolerance))

        logits = parameter(rng.normal(size=(4, 3)))
        labels = np.array([0, 2, 1, 2])
        results.append(check_gradients(
            "softmax_cross_entropy", lambda: F.softmax_cross_entropy(logits, labels),
            {"logits": logits}, tolerance=tolerance))

        results.append(composite_check(rng, tolerance))
    return results


def composite_check(rng: np.random.Generator, tolerance: float = DEFAULT_TOLERANCE) -> GradCheckResult:
    """conv → batchnorm → leaky_relu → affine → sigmoid → binary cross-entropy."""
    x = Tensor(rng.normal(size=(4, 2, 4, 4)))
    labels = rng.integers(0, 2, size=4).astype(np.float64)
    params = {
        "kernel": parameter(rng.normal(scale=0.5, size=(3, 2, 4, 4))),
        "gamma": parameter(rng.uniform(0.5, 1.5, size=3)),
        "beta": parameter(rng.normal(size=3)),
        "w": parameter(rng.normal(scale=0.5, size=(12, 1))),
        "b": parameter(rng.normal(size=1)),
    }

    def loss_fn() -> Tensor:
        h = F.conv2d(x, params["kernel"], stride=2, pad=1)
        h = F.leaky_relu(F.batchnorm(h, params["gamma"], params["beta"], mode="train"))
        p = F.sigmoid(F.affine(F.reshape(h, (4, 12)), params["w"], params["b"]))
        p = F.reshape(p, (4,))
        nll = F.add(F.mul(F.log(p), labels), F.mul(F.log(F.sub(1.0, p)), 1.0 - labels))
        return F.mul(F.mean(nll), -1.0)

    return check_gradients("composite", loss_fn, params, tolerance=tolerance)
