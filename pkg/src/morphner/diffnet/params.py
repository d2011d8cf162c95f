"""Trainable parameters, initialization, and the Adam update."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from .graph import Node


@dataclass(frozen=True)
class HyperParams:
    """Model dimensions and optimization settings.

    `hidden_dim` is the sentence-level LSTM cell size; context vectors have
    length 2*hidden_dim.  When an architecture scores candidate analyses,
    hidden_dim must equal tag_dim (the dot product pairs a context vector
    with an analysis vector of length 2*tag_dim); that is checked at model
    build time.
    """

    word_dim: int = 10
    char_dim: int = 10
    tag_dim: int = 10
    hidden_dim: int = 10
    dropout_rate: float = 0.5
    epochs: int = 50
    batch_size: int = 5
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 1

    def __post_init__(self):
        for name in ("word_dim", "char_dim", "tag_dim", "hidden_dim",
                     "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be a positive integer")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError("dropout_rate must be in [0, 1)")


class Parameter(Node):
    """A named leaf tensor with persistent gradient and Adam state."""

    __slots__ = ("name", "m", "v", "step")

    def __init__(self, name: str, value: np.ndarray):
        super().__init__(np.asarray(value, dtype=float))
        self.name = name
        self.grad = np.zeros_like(self.value)
        self.m = np.zeros_like(self.value)
        self.v = np.zeros_like(self.value)
        self.step = 0


def glorot(shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    fan_in, fan_out = (shape[1], shape[0]) if len(shape) == 2 else (shape[0], shape[0])
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def lstm_bias(hidden: int) -> np.ndarray:
    """Zero bias with the forget gate slice set to 1.0."""
    b = np.zeros(4 * hidden)
    b[hidden:2 * hidden] = 1.0
    return b


class ModelParameters:
    """Named collection of all trainable tensors of one model instance."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def create(self, name: str, value: np.ndarray) -> Parameter:
        if name in self._params:
            raise ConfigurationError(f"duplicate parameter name {name!r}")
        p = Parameter(name, value)
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def count(self) -> int:
        return sum(p.value.size for p in self)

    def zero_grads(self) -> None:
        for p in self:
            p.grad[...] = 0.0

    def snapshot(self) -> dict[str, np.ndarray]:
        """Deep copy of all values (best-epoch checkpointing)."""
        return {name: p.value.copy() for name, p in self._params.items()}

    def restore(self, values: dict[str, np.ndarray]) -> None:
        if set(values) != set(self._params):
            raise ConfigurationError("snapshot does not match parameter set")
        for name, value in values.items():
            p = self._params[name]
            if p.value.shape != value.shape:
                raise ConfigurationError(
                    f"shape mismatch restoring {name}: "
                    f"{p.value.shape} vs {value.shape}"
                )
            p.value[...] = value


def adam_update(params: ModelParameters, hyper: HyperParams) -> None:
    """Adam with bias correction; clears gradients afterwards."""
    lr = hyper.learning_rate
    b1, b2, eps = hyper.beta1, hyper.beta2, hyper.epsilon
    for p in params:
        p.step += 1
        g = p.grad
        p.m *= b1
        p.m += (1.0 - b1) * g
        p.v *= b2
        p.v += (1.0 - b2) * g * g
        m_hat = p.m / (1.0 - b1 ** p.step)
        v_hat = p.v / (1.0 - b2 ** p.step)
        p.value -= lr * m_hat / (np.sqrt(v_hat) + eps)
        g[...] = 0.0
