"""
Identity-class probe classifier for the synthetic dataset.

    image ─conv 4/2/1→ leaky ─conv 4/2/1→ leaky ─flatten→ affine → softmax

Built on the same engine as the GAN and saved in a "T2FC" tensor container.
Anything with `predict(images) -> (N, C) probabilities` can stand in for it.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from t2f.engine import Adam, Tape, Tensor, backward, get_dtype, get_precision, parameter
from t2f.engine import functional as F
from t2f.errors import CheckpointFormatError, ContractError
from t2f.storage.container import Container, read_container, write_container

logger = logging.getLogger(__name__)

MAGIC = b"T2FC"


class ClassProbabilityModel(Protocol):
    n_classes: int

    def predict(self, images: np.ndarray) -> np.ndarray:
        ...


class ClassifierConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    image_size: int = Field(16, ge=8, multiple_of=4)
    classes: int = Field(ge=2)
    channels: tuple[int, int] = (16, 32)
    leaky_slope: float = 0.2
    init_std: float = 0.05

    @property
    def features(self) -> int:
        return self.channels[1] * (self.image_size // 4) ** 2


@dataclass
class ProbeClassifier:
    config: ClassifierConfig
    params: dict[str, Tensor]
    held_out_accuracy: Optional[float] = None

    @property
    def n_classes(self) -> int:
        return self.config.classes

    @classmethod
    def init(cls, config: ClassifierConfig, seed: int = 0) -> "ProbeClassifier":
        rng = np.random.default_rng([seed, 3])
        c1, c2 = config.channels
        shapes = {
            "conv1.kernel": (c1, 3, 4, 4),
            "conv1.bias": (c1,),
            "conv2.kernel": (c2, c1, 4, 4),
            "conv2.bias": (c2,),
            "head.w": (config.features, config.classes),
            "head.b": (config.classes,),
        }
        params = {}
        for name, shape in shapes.items():
            data = np.zeros(shape) if name.endswith((".bias", ".b")) else rng.normal(0.0, config.init_std, shape)
            params[name] = parameter(data, name=name)
        return cls(config, params)

    def logits(self, images: Tensor) -> Tensor:
        cfg, p = self.config, self.params
        if images.ndim != 4 or images.shape[1:] != (3, cfg.image_size, cfg.image_size):
            raise ContractError(f"classifier expects (n, 3, {cfg.image_size}, {cfg.image_size}) images, "
                                f"got {images.shape}")
        h = F.leaky_relu(F.conv2d(images, p["conv1.kernel"], 2, 1, p["conv1.bias"]), cfg.leaky_slope)
        h = F.leaky_relu(F.conv2d(h, p["conv2.kernel"], 2, 1, p["conv2.bias"]), cfg.leaky_slope)
        return F.affine(F.reshape(h, (images.shape[0], cfg.features)), p["head.w"], p["head.b"])

    def predict(self, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
        images = np.asarray(images)
        out = [F.probabilities(self.logits(Tensor(images[i:i + batch_size])))
               for i in range(0, len(images), batch_size)]
        return np.concatenate(out) if out else np.zeros((0, self.n_classes))

    def accuracy(self, images: np.ndarray, labels: np.ndarray) -> float:
        return float(np.mean(self.predict(images).argmax(axis=1) == np.asarray(labels)))


def train_probe_classifier(images: np.ndarray, labels: np.ndarray, classes: int,
                           epochs: int = 20, seed: int = 0, batch_size: int = 64,
                           lr: float = 1e-3, held_out: float = 0.2) -> ProbeClassifier:
    """
    Fit a ProbeClassifier on (N, 3, s, s) images with integer labels.

    A stratified `held_out` fraction is kept aside and its accuracy stored on
    the result. Deterministic per seed.
    """
    images = np.asarray(images)
    labels = np.asarray(labels, dtype=np.int64)
    if images.shape[0] != labels.shape[0]:
        raise ContractError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    if labels.min() < 0 or labels.max() >= classes:
        raise ContractError(f"labels must lie in [0, {classes})")

    rng = np.random.default_rng([seed, 4])
    test_mask = np.zeros(len(labels), dtype=bool)
    for c in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == c))
        test_mask[members[:int(len(members) * held_out)]] = True
    train_x, train_y = images[~test_mask], labels[~test_mask]
    if len(train_y) == 0:
        raise ContractError("no training images left after the held-out split")

    clf = ProbeClassifier.init(ClassifierConfig(image_size=images.shape[-1], classes=classes), seed)
    opt = Adam(clf.params, lr, beta1=0.9, beta2=0.999)
    batch_size = min(batch_size, len(train_y))
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(train_y))
        losses = []
        for start in range(0, len(order) - batch_size + 1, batch_size):
            idx = order[start:start + batch_size]
            opt.zero_grad()
            with Tape() as tape:
                loss = F.softmax_cross_entropy(clf.logits(Tensor(train_x[idx])), train_y[idx])
            backward(tape, loss)
            opt.step()
            losses.append(loss.item())
        logger.debug(f"Probe classifier epoch {epoch}/{epochs}: loss {np.mean(losses):.4f}")

    if test_mask.any():
        clf.held_out_accuracy = clf.accuracy(images[test_mask], labels[test_mask])
        logger.info(f"Probe classifier: held-out accuracy {clf.held_out_accuracy:.3f} "
                    f"on {int(test_mask.sum())} images, {classes} classes")
    return clf


def measure_confidence(classifier: ClassProbabilityModel, images: np.ndarray) -> float:
    """Mean max-probability of the classifier over `images`."""
    probs = classifier.predict(images)
    return float(probs.max(axis=1).mean())


def save_classifier(path: Union[str, Path], clf: ProbeClassifier) -> Path:
    meta = {"config": clf.config.model_dump(mode="json"), "held_out_accuracy": clf.held_out_accuracy}
    tensors = {name: t.data for name, t in clf.params.items()}
    width = 8 if get_precision() == 64 else 4
    return write_container(path, MAGIC, Container(meta=meta, tensors=tensors, float_width=width))


def load_classifier(path: Union[str, Path]) -> ProbeClassifier:
    container = read_container(path, MAGIC)
    try:
        config = ClassifierConfig(**container.meta["config"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointFormatError(f"{path}: incomplete classifier metadata ({exc})") from exc
    template = ProbeClassifier.init(config)
    params = {}
    for name, t in template.params.items():
        data = container.tensors.get(name)
        if data is None or data.shape != t.shape:
            raise CheckpointFormatError(f"{path}: tensor {name} missing or has the wrong shape")
        params[name] = parameter(data.astype(get_dtype()), name=name)
    return ProbeClassifier(config, params, container.meta.get("held_out_accuracy"))
