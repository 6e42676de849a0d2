"""Receiver networks and the joint training objective.

Two separate MLP heads consume the channel output: a classifier ending in
softmax (semantic decoding) and a regressor ending in sigmoid (source
reconstruction into [0,1]).  The objective is the mean semantic
cross-entropy in nats plus ``lam`` times the mean per-sample squared
reconstruction error; the breakdown records both terms and their exact
weighted sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .channel import ChannelConfig, awgn_apply
from .encoder import BernoulliEncoder
from .errors import DimensionError, DomainError
from .nn import MLP
from .sampler import GumbelNoise, sample_soft


class SemanticDecoder:
    """MLP classifier over channel outputs; softmax head of width num_classes."""

    def __init__(self, code_length: int, num_classes: int, hidden, rng: np.random.Generator):
        self.code_length = int(code_length)
        self.num_classes = int(num_classes)
        self.net = MLP(
            (self.code_length, *hidden, self.num_classes),
            rng,
            hidden_act="relu",
            out_act="softmax",
        )

    def parameters(self) -> list[Tensor]:
        return self.net.parameters()

    def decode(self, z_hat: Tensor) -> Tensor:
        return self.net(z_hat)

    def __call__(self, z_hat: Tensor) -> Tensor:
        return self.decode(z_hat)


class ReconDecoder:
    """MLP regressor over channel outputs; sigmoid head of source width."""

    def __init__(self, code_length: int, source_dim: int, hidden, rng: np.random.Generator):
        self.code_length = int(code_length)
        self.source_dim = int(source_dim)
        self.net = MLP(
            (self.code_length, *hidden, self.source_dim),
            rng,
            hidden_act="relu",
            out_act="sigmoid",
        )

    def parameters(self) -> list[Tensor]:
        return self.net.parameters()

    def decode(self, z_hat: Tensor) -> Tensor:
        return self.net(z_hat)

    def __call__(self, z_hat: Tensor) -> Tensor:
        return self.decode(z_hat)


def cross_entropy(labels: Tensor, probs: Tensor) -> Tensor:
    """Mean over the batch of -sum_m label_m log(max(prob_m, EPS_LOG)), in nats."""
    if labels.shape != probs.shape:
        raise DimensionError(
            f"labels {labels.shape} and probabilities {probs.shape} must match"
        )
    lab = labels.data
    if not np.all(np.isin(lab, (0.0, 1.0))) or not np.allclose(lab.sum(axis=1), 1.0):
        raise DomainError("labels must be one-hot rows")
    if not np.allclose(probs.data.sum(axis=1), 1.0, atol=1e-6):
        raise DomainError("probability rows must sum to 1")
    batch = labels.shape[0]
    return -(ad.tsum(labels * ad.log(probs)) * (1.0 / batch))


def mse(x: Tensor, x_hat: Tensor) -> Tensor:
    """Mean over the batch of the squared L2 distance per sample."""
    if x.shape != x_hat.shape:
        raise DimensionError(f"mse operands differ in shape: {x.shape} vs {x_hat.shape}")
    diff = x - x_hat
    batch = x.shape[0]
    return ad.tsum(diff * diff) * (1.0 / batch)


@dataclass(frozen=True)
class LossBreakdown:
    ce_semantic: float
    mse_recon: float
    lam: float
    total: float
    loss: Tensor  # graph node for backward()


class JcmModel:
    """Encoder plus both decoder heads, trained jointly."""

    def __init__(
        self,
        encoder: BernoulliEncoder,
        semantic: SemanticDecoder,
        recon: ReconDecoder,
    ):
        if semantic.code_length != encoder.code_length or recon.code_length != encoder.code_length:
            raise DimensionError("encoder and decoders disagree on code length")
        if recon.source_dim != encoder.source_dim:
            raise DimensionError("encoder and reconstruction decoder disagree on source width")
        self.encoder = encoder
        self.semantic = semantic
        self.recon = recon

    @classmethod
    def build(
        cls,
        source_dim: int,
        code_length: int,
        num_classes: int,
        hidden_enc,
        hidden_dec,
        rng: np.random.Generator,
    ) -> "JcmModel":
        enc = BernoulliEncoder(source_dim, code_length, hidden_enc, rng)
        sem = SemanticDecoder(code_length, num_classes, hidden_dec, rng)
        rec = ReconDecoder(code_length, source_dim, hidden_dec, rng)
        return cls(enc, sem, rec)

    def parameters(self) -> list[Tensor]:
        return self.encoder.parameters() + self.semantic.parameters() + self.recon.parameters()

    def state_arrays(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for prefix, net in (("enc", self.encoder.net), ("sem", self.semantic.net), ("rec", self.recon.net)):
            for name, value in net.state_arrays().items():
                out[f"{prefix}.{name}"] = value
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for prefix, net in (("enc", self.encoder.net), ("sem", self.semantic.net), ("rec", self.recon.net)):
            sub = {
                name[len(prefix) + 1:]: value
                for name, value in arrays.items()
                if name.startswith(prefix + ".")
            }
            net.load_state_arrays(sub)


def jcm_loss(
    x: Tensor,
    labels: Tensor,
    model: JcmModel,
    chan_cfg: ChannelConfig,
    noise: GumbelNoise,
    tau: float,
    lam: float,
    *channel_indices: int,
) -> LossBreakdown:
    """Full differentiable forward pass: encode, relax, transmit, decode, score.

    The Gumbel noise and the channel stream indices pin every random input,
    so two calls with identical arguments produce bitwise-identical losses;
    finite-difference checks rely on this.
    """
    if lam < 0:
        raise DomainError(f"reconstruction weight must be nonnegative, got {lam}")
    if not isinstance(x, Tensor):
        x = Tensor(np.asarray(x, dtype=np.float64))
    if not isinstance(labels, Tensor):
        labels = Tensor(np.asarray(labels, dtype=np.float64))
    p = model.encoder.encode(x)
    block = sample_soft(p, noise, tau)
    z_hat = awgn_apply(block, chan_cfg, *channel_indices)
    class_probs = model.semantic.decode(z_hat)
    x_hat = model.recon.decode(z_hat)
    ce = cross_entropy(labels, class_probs)
    sq = mse(x, x_hat)
    loss = ce + (sq * lam)
    return LossBreakdown(
        ce_semantic=ce.item(),
        mse_recon=sq.item(),
        lam=float(lam),
        total=loss.item(),
        loss=loss,
    )
