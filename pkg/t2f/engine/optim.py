"""
Bias-corrected Adam.

`adam_step` is the pure update over named arrays; `Adam` binds it to a mapping
of parameter Tensors and reads their accumulated `.grad`.
"""

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from t2f.engine.tensor import Tensor
from t2f.errors import ConfigError, DimensionError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    step_count: int = 0
    beta1: float = 0.5
    beta2: float = 0.5
    epsilon: float = 1e-8
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError(f"Adam betas must lie in [0, 1), got {self.beta1}, {self.beta2}")
        if self.epsilon <= 0:
            raise ConfigError(f"Adam epsilon must be positive, got {self.epsilon}")


def adam_step(params: Mapping[str, np.ndarray], grads: Mapping[str, Optional[np.ndarray]],
              state: AdamState, lr: float) -> None:
    """
    Apply one Adam update in place to every array in `params`.

    A missing gradient counts as zero. The step counter advances once per call.
    """
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t

    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        elif g.shape != p.shape:
            raise DimensionError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        v = state.v[name]

        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        p -= lr * m_hat / (np.sqrt(v_hat) + state.epsilon)


class Adam:
    """Adam over a fixed, ordered set of named parameter tensors."""

    def __init__(self, params: Mapping[str, Tensor], lr: float,
                 beta1: float = 0.5, beta2: float = 0.5, epsilon: float = 1e-8,
                 state: Optional[AdamState] = None):
        if lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {lr}")
        self.params = dict(params)
        self.lr = lr
        self.state = state or AdamState(beta1=beta1, beta2=beta2, epsilon=epsilon)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self) -> None:
        adam_step(
            {name: p.data for name, p in self.params.items()},
            {name: p.grad for name, p in self.params.items()},
            self.state,
            self.lr,
        )
