"""Stochastic encoder head: source vector -> per-symbol Bernoulli probabilities.

The encoder is an MLP ending in a sigmoid, one output per channel symbol.
Probabilities are clamped to [EPS_P, 1 - EPS_P] so the log-probability
terms inside the Gumbel sampling rule stay finite.  The factorized PMF
over hard symbol blocks, prod_i p_i^((1+z_i)/2) (1-p_i)^((1-z_i)/2),
treats the symbols as conditionally independent Bernoulli variables
given the source vector.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DimensionError, DomainError
from .nn import MLP

EPS_P = 1e-6  # probability clamp keeping log p and log(1-p) finite


class BernoulliEncoder:
    """MLP mapping a batch of source vectors to symbol probabilities in (0,1)."""

    def __init__(self, source_dim: int, code_length: int, hidden, rng: np.random.Generator):
        self.source_dim = int(source_dim)
        self.code_length = int(code_length)
        self.net = MLP(
            (self.source_dim, *hidden, self.code_length),
            rng,
            hidden_act="relu",
            out_act="sigmoid",
        )

    def parameters(self) -> list[Tensor]:
        return self.net.parameters()

    def encode(self, x: Tensor) -> Tensor:
        """Forward pass; output shape (batch, code_length), entries in [EPS_P, 1-EPS_P]."""
        p = self.net(x)
        return ad.clip(p, EPS_P, 1.0 - EPS_P)

    def __call__(self, x: Tensor) -> Tensor:
        return self.encode(x)


def _validate_block(z: np.ndarray) -> None:
    if not np.all(np.isin(z, (-1.0, 1.0))):
        bad = z[~np.isin(z, (-1.0, 1.0))][0]
        raise DomainError(f"symbol block entries must be -1 or +1, found {bad!r}")


def bernoulli_pmf(p_row, z_row) -> float:
    """Probability of one hard symbol block under factorized Bernoulli probabilities."""
    p = np.asarray(p_row, dtype=np.float64)
    z = np.asarray(z_row, dtype=np.float64)
    if p.ndim != 1 or z.ndim != 1 or p.shape != z.shape:
        raise DimensionError(
            f"pmf expects matching 1-D rows, got shapes {p.shape} and {z.shape}"
        )
    _validate_block(z)
    up = (1.0 + z) / 2.0
    down = (1.0 - z) / 2.0
    return float(np.prod(p**up * (1.0 - p) ** down))


def enumerate_symbol_blocks(n: int) -> np.ndarray:
    """All 2^n hard blocks of length n as a (2^n, n) array of +/-1 values.

    Row order follows binary counting with bit i of the row index mapped to
    symbol i (0 -> -1, 1 -> +1), so row 0 is all -1 and the last row all +1.
    """
    if n < 1:
        raise DomainError(f"block length must be >= 1, got {n}")
    idx = np.arange(2**n)[:, None]
    bits = (idx >> np.arange(n)[None, :]) & 1
    return bits.astype(np.float64) * 2.0 - 1.0


def bernoulli_pmf_table(p_row, blocks: np.ndarray) -> np.ndarray:
    """Vectorized pmf over many blocks at once; rows of ``blocks`` are +/-1 vectors."""
    p = np.asarray(p_row, dtype=np.float64)
    z = np.asarray(blocks, dtype=np.float64)
    if z.ndim != 2 or p.ndim != 1 or z.shape[1] != p.shape[0]:
        raise DimensionError(
            f"pmf table expects blocks (m, {p.shape[0]}), got {z.shape}"
        )
    _validate_block(z)
    up = (1.0 + z) / 2.0
    down = (1.0 - z) / 2.0
    return np.prod(p[None, :] ** up * (1.0 - p[None, :]) ** down, axis=1)
