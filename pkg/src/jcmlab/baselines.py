"""Benchmark transmission pipelines: analog, 8-bit uniform quantizer, learned 1-bit quantizer.

All three share the channel module and its SNR convention, so a given
snr_db means the same noise standard deviation everywhere.  Channel-use
accounting for a budget of n symbols:

  analog   - n real values, power-normalized to unit average energy
  uniform8 - the encoder emits n/8 reals; each becomes 8 bits, sent as
             n BPSK symbols
  nn1bit   - n sigmoid outputs thresholded to n BPSK symbols

The 8-bit baseline trains in analog mode by default and is quantized only
at evaluation time; an alternative straight-through mode runs the full
bit pipeline inside the training loss with identity gradients across the
quantize/transmit/dequantize block.  The 1-bit quantizer always trains
straight-through with gradient gain 2, the slope of the soft decision
2*sigmoid(a) - 1 that the hard threshold replaces.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .channel import ChannelConfig, awgn_apply
from .decoders import LossBreakdown, ReconDecoder, SemanticDecoder, cross_entropy, mse
from .errors import ConfigError, DomainError
from .nn import MLP
from .sampler import SymbolBlock
from .training import StepContext

QUANT_LEVELS = 256
QUANT_STEP = 2.0 / QUANT_LEVELS  # input range [-1, 1]


def quantize_uniform_8bit(v: np.ndarray) -> np.ndarray:
    """Map values (clipped to [-1,1]) to level codes 0..255."""
    clipped = np.clip(np.asarray(v, dtype=np.float64), -1.0, 1.0)
    codes = np.floor((clipped + 1.0) / 2.0 * QUANT_LEVELS)
    return np.minimum(codes, QUANT_LEVELS - 1).astype(np.int64)


def dequantize_8bit(codes: np.ndarray) -> np.ndarray:
    """Level midpoints: code c maps to -1 + (c + 0.5) * step."""
    codes = np.asarray(codes)
    if np.any((codes < 0) | (codes > QUANT_LEVELS - 1)):
        raise DomainError("quantizer codes must lie in 0..255")
    return -1.0 + (codes.astype(np.float64) + 0.5) * QUANT_STEP


def codes_to_bits(codes: np.ndarray) -> np.ndarray:
    """Unpack 8-bit codes to bits, most significant bit first, along the last axis."""
    codes = np.asarray(codes, dtype=np.int64)
    shifts = np.arange(7, -1, -1)
    bits = (codes[..., None] >> shifts) & 1
    return bits.reshape(*codes.shape[:-1], codes.shape[-1] * 8)


def bits_to_codes(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] % 8:
        raise DomainError(f"bit count must be a multiple of 8, got {bits.shape[-1]}")
    grouped = bits.reshape(*bits.shape[:-1], bits.shape[-1] // 8, 8)
    weights = 1 << np.arange(7, -1, -1)
    return (grouped * weights).sum(axis=-1)


def bits_to_bpsk(bits: np.ndarray) -> SymbolBlock:
    """0 -> -1, 1 -> +1."""
    bits = np.asarray(bits)
    if not np.all(np.isin(bits, (0, 1))):
        raise DomainError("bits must be 0 or 1")
    return SymbolBlock(values=Tensor(bits.astype(np.float64) * 2.0 - 1.0), mode="hard")


def bpsk_to_bits(z_hat: np.ndarray) -> np.ndarray:
    """Sign threshold at 0; a received value of exactly 0 decodes as bit 0."""
    return (np.asarray(z_hat) > 0).astype(np.int64)


def one_bit_nn_quantize(v: np.ndarray, quantizer: MLP) -> np.ndarray:
    """Hard 1-bit decisions from the sigmoid quantizer; exactly 0.5 decides 0."""
    y = quantizer(Tensor(np.asarray(v, dtype=np.float64))).data
    return (y > 0.5).astype(np.int64)


def _score(semantic, recon, decoder_input: Tensor, x: Tensor, labels: Tensor, lam: float) -> LossBreakdown:
    ce = cross_entropy(labels, semantic.decode(decoder_input))
    sq = mse(x, recon.decode(decoder_input))
    loss = ce + (sq * lam)
    return LossBreakdown(
        ce_semantic=ce.item(), mse_recon=sq.item(), lam=float(lam), total=loss.item(), loss=loss
    )


class AnalogSystem:
    """Tanh encoder whose real-valued output is power-normalized and sent raw.

    The receiver multiplies by the (known) batch gain before decoding, so
    at sigma = 0 the decoder input equals the raw encoder output up to
    rounding.
    """

    method = "analog"

    def __init__(self, source_dim: int, block_len: int, num_classes: int, hidden_enc, hidden_dec, rng):
        self.source_dim = int(source_dim)
        self.block_len = int(block_len)
        self.num_classes = int(num_classes)
        self.encoder = MLP((source_dim, *hidden_enc, block_len), rng, out_act="tanh")
        self.semantic = SemanticDecoder(block_len, num_classes, hidden_dec, rng)
        self.recon = ReconDecoder(block_len, source_dim, hidden_dec, rng)

    def parameters(self) -> list[Tensor]:
        return self.encoder.parameters() + self.semantic.parameters() + self.recon.parameters()

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for prefix, net in (("enc", self.encoder), ("sem", self.semantic.net), ("rec", self.recon.net)):
            for name, value in net.state_arrays().items():
                out[f"{prefix}.{name}"] = value
        return out

    def load_state_arrays(self, arrays) -> None:
        for prefix, net in (("enc", self.encoder), ("sem", self.semantic.net), ("rec", self.recon.net)):
            sub = {k[len(prefix) + 1:]: v for k, v in arrays.items() if k.startswith(prefix + ".")}
            net.load_state_arrays(sub)

    def transmit(self, x: Tensor) -> tuple[Tensor, Tensor]:
        """Return (unit-average-power block, batch gain); raw output = block * gain."""
        v = self.encoder(x)
        power = ad.tmean(v * v) + 1e-12
        t = ad.scale(v, ad.powc(power, -0.5))
        gain = ad.powc(power, 0.5)
        return t, gain

    def training_loss(self, x: Tensor, labels: Tensor, ctx: StepContext, draw: int) -> LossBreakdown:
        t, gain = self.transmit(x)
        cfg = ChannelConfig(kind="awgn", snr_db=ctx.snr_db, seed=ctx.master_seed)
        received = awgn_apply(t, cfg, ctx.step, draw)
        decoder_input = ad.scale(received, gain)
        return _score(self.semantic, self.recon, decoder_input, x, labels, ctx.lam)

    def infer_batch(self, x: np.ndarray, snr_db: float, seed: int, index: int):
        t, gain = self.transmit(Tensor(x))
        cfg = ChannelConfig(kind="awgn", snr_db=snr_db, seed=seed)
        received = awgn_apply(t, cfg, index)
        decoder_input = ad.scale(received, gain)
        return self.semantic.decode(decoder_input).data, self.recon.decode(decoder_input).data


class Uniform8System:
    """Analog encoder feeding an 8-bit uniform quantizer and BPSK bit transport.

    ``train_mode`` selects how the training loss treats quantization:
    "analog" (default) ignores it and trains the embedded analog system;
    "st" runs the full quantize/BPSK/AWGN/dequantize pipeline forward and
    passes gradients straight through it.
    """

    method = "uniform8"

    def __init__(
        self,
        source_dim: int,
        block_len: int,
        num_classes: int,
        hidden_enc,
        hidden_dec,
        rng,
        train_mode: str = "analog",
    ):
        if block_len % 8:
            raise ConfigError(f"uniform8 needs a block length divisible by 8, got {block_len}")
        if train_mode not in ("analog", "st"):
            raise ConfigError(f"train_mode must be 'analog' or 'st', got {train_mode!r}")
        self.block_len = int(block_len)
        self.values_per_block = block_len // 8
        self.train_mode = train_mode
        self.analog = AnalogSystem(
            source_dim, self.values_per_block, num_classes, hidden_enc, hidden_dec, rng
        )

    @property
    def source_dim(self):
        return self.analog.source_dim

    @property
    def num_classes(self):
        return self.analog.num_classes

    def parameters(self) -> list[Tensor]:
        return self.analog.parameters()

    def state_arrays(self) -> dict[str, np.ndarray]:
        return self.analog.state_arrays()

    def load_state_arrays(self, arrays) -> None:
        self.analog.load_state_arrays(arrays)

    def _bit_pipeline(self, v: np.ndarray, snr_db: float, seed: int, *indices: int) -> np.ndarray:
        """Quantize, transmit every bit as a BPSK symbol, demap, dequantize."""
        codes = quantize_uniform_8bit(v)
        symbols = bits_to_bpsk(codes_to_bits(codes))
        cfg = ChannelConfig(kind="awgn", snr_db=snr_db, seed=seed)
        received = awgn_apply(symbols, cfg, *indices)
        return dequantize_8bit(bits_to_codes(bpsk_to_bits(received.data)))

    def training_loss(self, x: Tensor, labels: Tensor, ctx: StepContext, draw: int) -> LossBreakdown:
        if self.train_mode == "analog":
            return self.analog.training_loss(x, labels, ctx, draw)
        v = ad.clip(self.analog.encoder(x), -1.0, 1.0)
        deq = self._bit_pipeline(v.data, ctx.snr_db, ctx.master_seed, ctx.step, draw)
        decoder_input = ad.straight_through(v, deq, 1.0, "st_quant8")
        return _score(self.analog.semantic, self.analog.recon, decoder_input, x, labels, ctx.lam)

    def infer_batch(self, x: np.ndarray, snr_db: float, seed: int, index: int):
        v = np.clip(self.analog.encoder(Tensor(x)).data, -1.0, 1.0)
        deq = Tensor(self._bit_pipeline(v, snr_db, seed, index))
        return self.analog.semantic.decode(deq).data, self.analog.recon.decode(deq).data


class OneBitSystem:
    """Tanh encoder plus a one-layer sigmoid quantizer making hard 1-bit decisions."""

    method = "nn1bit"

    def __init__(self, source_dim: int, block_len: int, num_classes: int, hidden_enc, hidden_dec, rng):
        self.source_dim = int(source_dim)
        self.block_len = int(block_len)
        self.num_classes = int(num_classes)
        self.encoder = MLP((source_dim, *hidden_enc, block_len), rng, out_act="tanh")
        self.quantizer = MLP((block_len, block_len), rng, out_act="sigmoid")
        self.semantic = SemanticDecoder(block_len, num_classes, hidden_dec, rng)
        self.recon = ReconDecoder(block_len, source_dim, hidden_dec, rng)

    def parameters(self) -> list[Tensor]:
        return (
            self.encoder.parameters()
            + self.quantizer.parameters()
            + self.semantic.parameters()
            + self.recon.parameters()
        )

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        nets = (
            ("enc", self.encoder),
            ("qnt", self.quantizer),
            ("sem", self.semantic.net),
            ("rec", self.recon.net),
        )
        for prefix, net in nets:
            for name, value in net.state_arrays().items():
                out[f"{prefix}.{name}"] = value
        return out

    def load_state_arrays(self, arrays) -> None:
        nets = (
            ("enc", self.encoder),
            ("qnt", self.quantizer),
            ("sem", self.semantic.net),
            ("rec", self.recon.net),
        )
        for prefix, net in nets:
            sub = {k[len(prefix) + 1:]: v for k, v in arrays.items() if k.startswith(prefix + ".")}
            net.load_state_arrays(sub)

    def symbols_soft_st(self, x: Tensor) -> Tensor:
        """Hard +/-1 decisions forward, straight-through gradients (gain 2) back."""
        y = self.quantizer(self.encoder(x))
        hard = np.where(y.data > 0.5, 1.0, -1.0)
        return ad.straight_through(y, hard, 2.0, "st_onebit")

    def training_loss(self, x: Tensor, labels: Tensor, ctx: StepContext, draw: int) -> LossBreakdown:
        sym = self.symbols_soft_st(x)
        cfg = ChannelConfig(kind="awgn", snr_db=ctx.snr_db, seed=ctx.master_seed)
        z_hat = awgn_apply(sym, cfg, ctx.step, draw)
        return _score(self.semantic, self.recon, z_hat, x, labels, ctx.lam)

    def infer_batch(self, x: np.ndarray, snr_db: float, seed: int, index: int):
        bits = one_bit_nn_quantize(self.encoder(Tensor(x)).data, self.quantizer)
        block = bits_to_bpsk(bits)
        cfg = ChannelConfig(kind="awgn", snr_db=snr_db, seed=seed)
        z_hat = awgn_apply(block, cfg, index)
        return self.semantic.decode(z_hat).data, self.recon.decode(z_hat).data
