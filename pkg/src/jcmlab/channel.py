"""Memoryless channels: additive white Gaussian noise and a discrete flip surrogate.

SNR convention: per-symbol energy over noise power, E_s / sigma^2 with
E_s = 1 for unit BPSK symbols, so sigma = sqrt(10^(-snr_db/10)).  Requests
at or above NOISELESS_SNR_DB short-circuit to sigma = 0 and return the
input exactly.  The flip channel negates each hard symbol independently
with probability q; it exists so the mutual-information oracle can
enumerate the end-to-end distribution in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .errors import DomainError
from .sampler import SymbolBlock
from .seeding import derive_rng

NOISELESS_SNR_DB = 200.0  # at or above this, the AWGN path is exactly noise-free


def snr_to_sigma(snr_db: float) -> float:
    """Noise standard deviation for a given per-symbol SNR in dB (E_s = 1)."""
    if snr_db >= NOISELESS_SNR_DB:
        return 0.0
    return float(np.sqrt(10.0 ** (-snr_db / 10.0)))


@dataclass(frozen=True)
class ChannelConfig:
    kind: str  # "awgn" or "flip"
    snr_db: float = 0.0
    flip_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("awgn", "flip"):
            raise DomainError(f"unknown channel kind {self.kind!r}")
        if self.kind == "flip" and not 0.0 <= self.flip_prob <= 0.5:
            raise DomainError(f"flip probability must lie in [0, 0.5], got {self.flip_prob}")


def _values_of(z) -> Tensor:
    if isinstance(z, SymbolBlock):
        return z.values
    # plain arrays enter the graph as constants
    return z if isinstance(z, Tensor) else Tensor(np.asarray(z, dtype=np.float64))


def awgn_apply(z, cfg: ChannelConfig, *indices: int) -> Tensor:
    """Add i.i.d. Gaussian noise; the noise enters the graph as a constant.

    ``z`` may be a SymbolBlock or any real-valued Tensor (the analog
    baseline reuses this path).  The noise stream is derived from
    (cfg.seed, "channel", indices), so a repeated call with the same
    indices reproduces the same realization exactly.
    """
    if cfg.kind != "awgn":
        raise DomainError(f"awgn_apply requires an awgn config, got kind {cfg.kind!r}")
    v = _values_of(z)
    sigma = snr_to_sigma(cfg.snr_db)
    if sigma == 0.0:
        return v + 0.0
    rng = derive_rng(cfg.seed, "channel", *indices)
    eps = rng.normal(scale=sigma, size=v.shape)
    return v + Tensor(eps)


def flip_apply(z: SymbolBlock, cfg: ChannelConfig, *indices: int) -> SymbolBlock:
    """Independently negate each hard symbol with probability cfg.flip_prob."""
    if cfg.kind != "flip":
        raise DomainError(f"flip_apply requires a flip config, got kind {cfg.kind!r}")
    if not isinstance(z, SymbolBlock) or z.mode != "hard":
        raise DomainError("flip channel accepts hard symbol blocks only")
    rng = derive_rng(cfg.seed, "flip", *indices)
    flips = rng.uniform(size=z.values.shape) < cfg.flip_prob
    out = np.where(flips, -z.values.data, z.values.data)
    return SymbolBlock(values=Tensor(out), mode="hard")
