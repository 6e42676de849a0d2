"""Plain multilayer perceptrons built on the tensor engine.

Weights use Glorot uniform initialization, biases start at zero, and the
activation of the final layer is chosen by name so the same class serves
the probability head (sigmoid), the classifier (softmax), the analog
transmitter (tanh), and plain linear outputs.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, DimensionError

_ACTIVATIONS = {
    "relu": ad.relu,
    "tanh": ad.tanh,
    "sigmoid": ad.sigmoid,
    "softmax": ad.softmax,
    "linear": lambda t: t,
}


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class MLP:
    """Fully connected network: matmul + bias per layer, fixed hidden activation.

    ``widths`` lists every layer width including input and output, e.g.
    (16, 256, 256, 8).  Hidden layers use ``hidden_act`` (default relu);
    the final layer uses ``out_act``.
    """

    def __init__(
        self,
        widths: Sequence[int],
        rng: np.random.Generator,
        hidden_act: str = "relu",
        out_act: str = "linear",
    ):
        if len(widths) < 2:
            raise ConfigError(f"MLP needs at least input and output widths, got {widths}")
        if any(w < 1 for w in widths):
            raise ConfigError(f"MLP widths must be positive, got {widths}")
        for name in (hidden_act, out_act):
            if name not in _ACTIVATIONS:
                raise ConfigError(f"unknown activation {name!r}")
        self.widths = tuple(int(w) for w in widths)
        self.hidden_act = hidden_act
        self.out_act = out_act
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []
        for fan_in, fan_out in zip(self.widths[:-1], self.widths[1:]):
            self.weights.append(Tensor(glorot_uniform(rng, fan_in, fan_out), requires_grad=True))
            self.biases.append(Tensor(np.zeros(fan_out), requires_grad=True))

    @property
    def in_width(self) -> int:
        return self.widths[0]

    @property
    def out_width(self) -> int:
        return self.widths[-1]

    def parameters(self) -> list[Tensor]:
        params: list[Tensor] = []
        for w, b in zip(self.weights, self.biases):
            params.append(w)
            params.append(b)
        return params

    def forward(self, x: Tensor) -> Tensor:
        if not isinstance(x, Tensor):
            x = Tensor(np.asarray(x, dtype=np.float64))
        if x.data.ndim != 2 or x.shape[1] != self.in_width:
            raise DimensionError(
                f"MLP expects input of shape (batch, {self.in_width}), got {x.shape}"
            )
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = (h @ w) + b
            act = self.out_act if i == last else self.hidden_act
            h = _ACTIVATIONS[act](h)
        return h

    def __call__(self, x: Tensor) -> Tensor:
        return self.forward(x)

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Name -> value map for serialization (w0, b0, w1, b1, ...)."""
        out: dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"w{i}"] = w.data
            out[f"b{i}"] = b.data
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            for key, tensor in ((f"w{i}", w), (f"b{i}", b)):
                if key not in arrays:
                    raise DimensionError(f"missing parameter {key!r} while loading MLP state")
                value = np.asarray(arrays[key], dtype=np.float64)
                if value.shape != tensor.data.shape:
                    raise DimensionError(
                        f"parameter {key!r} has shape {value.shape}, expected {tensor.data.shape}"
                    )
                tensor.data = value
                tensor.grad = None
