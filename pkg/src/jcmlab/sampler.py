"""BPSK symbol sampling from Bernoulli probabilities via Gumbel noise.

Hard sampling picks z_i = +1 exactly when log p_i + g1_i > log(1-p_i) + g2_i
(ties break to -1), which draws from the factorized PMF exactly.  Soft
sampling replaces the argmax with a two-way softmax at temperature tau,
which for the binary case collapses to

    z_soft = 2 * sigmoid((log p - log(1-p) + g1 - g2) / tau) - 1,

a differentiable relaxation whose sign agrees with the hard rule wherever
the two logits differ.  Training averages per-draw gradients over
independent noise draws; evaluation uses hard samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .encoder import EPS_P
from .errors import DimensionError, DomainError
from .seeding import derive_rng

EPS_U = 1e-12  # clamp for uniform draws before the double log


def gumbel_from_uniform(u):
    """Map uniform draws to standard Gumbel(0,1) noise: g = -log(-log(u))."""
    u = np.clip(np.asarray(u, dtype=np.float64), EPS_U, 1.0 - EPS_U)
    return -np.log(-np.log(u))


@dataclass(frozen=True)
class GumbelNoise:
    """A pair of independent standard-Gumbel fields, one per logit branch."""

    g1: np.ndarray
    g2: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if self.g1.shape != self.g2.shape:
            raise DimensionError(
                f"noise fields must share a shape, got {self.g1.shape} and {self.g2.shape}"
            )

    @classmethod
    def draw(cls, shape, master_seed: int, *indices: int) -> "GumbelNoise":
        """Draw a noise pair from the per-purpose stream (master_seed, 'gumbel', indices)."""
        rng = derive_rng(master_seed, "gumbel", *indices)
        u = rng.uniform(size=(2, *shape))
        g = gumbel_from_uniform(u)
        return cls(g1=g[0], g2=g[1], seed=int(master_seed))


@dataclass
class SymbolBlock:
    """A batch of channel symbols: hard entries in {-1,+1} or a soft relaxation."""

    values: Tensor
    mode: str  # "hard" or "soft"
    tau: float | None = None

    def __post_init__(self):
        if self.mode == "hard":
            if not np.all(np.isin(self.values.data, (-1.0, 1.0))):
                raise DomainError("hard symbol block has entries outside {-1,+1}")
        elif self.mode == "soft":
            if not np.all(np.abs(self.values.data) < 1.0):
                raise DomainError("soft symbol block has entries outside (-1,+1)")
            if self.tau is None or self.tau <= 0:
                raise DomainError("soft symbol block requires a positive temperature")
        else:
            raise DomainError(f"unknown symbol mode {self.mode!r}")


def _noise_matches(p_data: np.ndarray, noise: GumbelNoise) -> None:
    if noise.g1.shape != p_data.shape:
        raise DimensionError(
            f"noise shape {noise.g1.shape} does not match probabilities {p_data.shape}"
        )


def sample_hard(p, noise: GumbelNoise) -> SymbolBlock:
    """Exact Bernoulli draw per symbol by comparing the two Gumbel-perturbed logits."""
    p_data = p.data if isinstance(p, Tensor) else np.asarray(p, dtype=np.float64)
    _noise_matches(p_data, noise)
    p_data = np.clip(p_data, EPS_P, 1.0 - EPS_P)
    logit_up = np.log(p_data) + noise.g1
    logit_down = np.log1p(-p_data) + noise.g2
    z = np.where(logit_up > logit_down, 1.0, -1.0)
    return SymbolBlock(values=Tensor(z), mode="hard")


def sample_soft(p: Tensor, noise: GumbelNoise, tau: float) -> SymbolBlock:
    """Differentiable relaxation of sample_hard at temperature ``tau``."""
    if tau <= 0:
        raise DomainError(f"temperature must be positive, got {tau}")
    _noise_matches(p.data, noise)
    diff = ad.log(p) - ad.log(1.0 - p)
    d = (diff + Tensor(noise.g1 - noise.g2)) * (1.0 / tau)
    z = ad.sigmoid(d) * 2.0 - 1.0
    return SymbolBlock(values=z, mode="soft", tau=float(tau))


def reparam_grad_estimate(
    loss_fn: Callable[[GumbelNoise], Tensor],
    params: Sequence[Tensor],
    noise_draws: Sequence[GumbelNoise],
) -> list[np.ndarray]:
    """Average the per-draw parameter gradients of a scalar loss.

    ``loss_fn`` must build a fresh graph from a given noise draw; the
    returned list is aligned with ``params``.  With one draw this is a
    single backward pass.
    """
    if not noise_draws:
        raise DomainError("at least one noise draw is required")
    sums = [np.zeros_like(p.data) for p in params]
    for noise in noise_draws:
        for p in params:
            p.grad = None
        loss_fn(noise).backward()
        for acc, p in zip(sums, params):
            if p.grad is not None:
                acc += p.grad
    n = len(noise_draws)
    return [acc / n for acc in sums]
