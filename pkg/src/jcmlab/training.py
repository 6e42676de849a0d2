"""Training loop, optimizers, temperature schedule, and checkpoint persistence.

Every random draw in a run is pinned by the master seed through per-purpose
streams: parameter init, batch sampling, Gumbel noise, and channel noise.
Two runs with the same config are therefore bitwise identical.

Checkpoint file layout (all integers little-endian):
  magic b"JCM1" | u16 version = 1 | u32 blob length | UTF-8 key=value lines |
  u32 tensor count | per tensor: u16 name length, name bytes, u8 rank,
  u32 dims..., raw float32 little-endian data.
The training-step counter travels inside the blob under the reserved key
``step``.  Tensors are stored at float32; round trips are bitwise exact at
that precision.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .channel import ChannelConfig, awgn_apply
from .decoders import JcmModel, LossBreakdown, jcm_loss
from .errors import (
    CheckpointFormatError,
    ConfigError,
    DomainError,
    NonFiniteError,
)
from .sampler import GumbelNoise, sample_hard
from .seeding import derive_rng

CHECKPOINT_MAGIC = b"JCM1"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 2000
    batch_size: int = 64
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    lam: float = 1.0
    snr_db_train: float = 10.0
    tau_start: float = 2.0
    tau_end: float = 0.3
    anneal_frac: float = 0.8
    master_seed: int = 0
    num_noise_draws: int = 1

    def __post_init__(self):
        # steps = 0 is allowed and means "return the initial parameters".
        if self.steps < 0:
            raise ConfigError(f"steps must be >= 0, got {self.steps}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be adam or sgd, got {self.optimizer!r}")
        if self.tau_start <= 0 or self.tau_end <= 0:
            raise ConfigError("temperatures must be positive")
        if not 0.0 < self.anneal_frac <= 1.0:
            raise ConfigError(f"anneal_frac must lie in (0, 1], got {self.anneal_frac}")
        if self.num_noise_draws < 1:
            raise ConfigError(f"num_noise_draws must be >= 1, got {self.num_noise_draws}")

    def temperature_at(self, step: int) -> float:
        """Exponential anneal from tau_start to tau_end over the first anneal_frac of training."""
        horizon = max(1, int(round(self.anneal_frac * self.steps)))
        frac = min(step, horizon) / horizon
        return float(self.tau_start * (self.tau_end / self.tau_start) ** frac)

    def config_lines(self) -> dict[str, str]:
        return {
            "steps": str(self.steps),
            "batch_size": str(self.batch_size),
            "learning_rate": repr(self.learning_rate),
            "optimizer": self.optimizer,
            "lambda": repr(self.lam),
            "snr_db_train": repr(self.snr_db_train),
            "tau_start": repr(self.tau_start),
            "tau_end": repr(self.tau_end),
            "anneal_frac": repr(self.anneal_frac),
            "master_seed": str(self.master_seed),
            "num_noise_draws": str(self.num_noise_draws),
        }


@dataclass(frozen=True)
class StepContext:
    """Everything a system needs to build one training-step loss graph."""

    step: int
    tau: float
    master_seed: int
    snr_db: float
    lam: float


class Adam:
    """Adam with bias correction; beta1 = 0.9, beta2 = 0.999, eps = 1e-8."""

    def __init__(self, params, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def step(self) -> None:
        self.t += 1
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / (1.0 - self.beta1**self.t)
            v_hat = self.v[i] / (1.0 - self.beta2**self.t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class SGD:
    def __init__(self, params, lr: float):
        self.params = list(params)
        self.lr = lr

    def step(self) -> None:
        for p in self.params:
            if p.grad is not None:
                p.data = p.data - self.lr * p.grad


def make_optimizer(cfg: TrainConfig, params):
    if cfg.optimizer == "adam":
        return Adam(params, cfg.learning_rate)
    return SGD(params, cfg.learning_rate)


class JcmTrainable:
    """Adapter giving the learned coding-modulation model the training-loop protocol."""

    method = "jcm"

    def __init__(self, model: JcmModel):
        self.model = model

    def parameters(self) -> list[Tensor]:
        return self.model.parameters()

    def state_arrays(self) -> dict[str, np.ndarray]:
        return self.model.state_arrays()

    def load_state_arrays(self, arrays) -> None:
        self.model.load_state_arrays(arrays)

    def training_loss(self, x: Tensor, labels: Tensor, ctx: StepContext, draw: int) -> LossBreakdown:
        noise = GumbelNoise.draw(
            (x.shape[0], self.model.encoder.code_length), ctx.master_seed, ctx.step, draw
        )
        cfg = ChannelConfig(kind="awgn", snr_db=ctx.snr_db, seed=ctx.master_seed)
        return jcm_loss(x, labels, self.model, cfg, noise, ctx.tau, ctx.lam, ctx.step, draw)

    def infer_batch(self, x: np.ndarray, snr_db: float, seed: int, index: int):
        """Evaluation forward: stochastic hard sampling, then both decoders.

        Returns (class probabilities, reconstruction) as plain arrays.
        """
        p = self.model.encoder.encode(Tensor(x))
        noise = GumbelNoise.draw(p.shape, seed, index)
        block = sample_hard(p, noise)
        cfg = ChannelConfig(kind="awgn", snr_db=snr_db, seed=seed)
        z_hat = awgn_apply(block, cfg, index)
        return self.model.semantic.decode(z_hat).data, self.model.recon.decode(z_hat).data


@dataclass(frozen=True)
class TraceRow:
    step: int
    total: float
    ce: float
    mse: float


@dataclass
class Checkpoint:
    version: int
    config: dict[str, str]
    step: int
    tensors: dict[str, np.ndarray]


def train(system, dataset, cfg: TrainConfig, extra_config: dict[str, str] | None = None):
    """Run the optimizer for cfg.steps steps; returns (Checkpoint, loss trace).

    ``system`` provides parameters(), state_arrays(), and
    training_loss(x, labels, ctx, draw).  ``dataset`` provides features,
    labels one-hot-convertible, and num_classes.  With steps = 0 the
    initial parameters are returned untouched.
    """
    if len(dataset.labels) == 0:
        raise DomainError("dataset is empty")
    params = system.parameters()
    opt = make_optimizer(cfg, params)
    onehot = np.eye(dataset.num_classes)[dataset.labels]
    trace: list[TraceRow] = []
    count = dataset.features.shape[0]
    for step in range(cfg.steps):
        batch_rng = derive_rng(cfg.master_seed, "batch", step)
        idx = batch_rng.integers(0, count, size=cfg.batch_size)
        x = Tensor(dataset.features[idx])
        labels = Tensor(onehot[idx])
        ctx = StepContext(
            step=step,
            tau=cfg.temperature_at(step),
            master_seed=cfg.master_seed,
            snr_db=cfg.snr_db_train,
            lam=cfg.lam,
        )
        sums = [np.zeros_like(p.data) for p in params]
        totals = np.zeros(3)
        try:
            for draw in range(cfg.num_noise_draws):
                for p in params:
                    p.grad = None
                bd = system.training_loss(x, labels, ctx, draw)
                bd.loss.backward()
                for acc, p in zip(sums, params):
                    if p.grad is not None:
                        acc += p.grad
                totals += (bd.total, bd.ce_semantic, bd.mse_recon)
        except NonFiniteError as e:
            raise NonFiniteError(f"training aborted at step {step}: {e}") from e
        n = cfg.num_noise_draws
        for p, acc in zip(params, sums):
            p.grad = acc / n
        opt.step()
        trace.append(TraceRow(step=step, total=totals[0] / n, ce=totals[1] / n, mse=totals[2] / n))
    config = dict(cfg.config_lines())
    if extra_config:
        config.update(extra_config)
    ckpt = Checkpoint(
        version=CHECKPOINT_VERSION, config=config, step=cfg.steps, tensors=system.state_arrays()
    )
    return ckpt, trace


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    blob_lines = [f"step={ckpt.step}"]
    for key, value in ckpt.config.items():
        if key == "step":
            continue
        if "=" in key or "\n" in key or "\n" in str(value):
            raise ConfigError(f"config key {key!r} cannot be serialized")
        blob_lines.append(f"{key}={value}")
    blob = "\n".join(blob_lines).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<H", ckpt.version))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(struct.pack("<I", len(ckpt.tensors)))
        for name, value in ckpt.tensors.items():
            encoded = name.encode("utf-8")
            arr = np.asarray(value, dtype="<f4")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                f.write(struct.pack("<I", dim))
            f.write(arr.tobytes())


class _Reader:
    """Byte reader that reports the offset of any truncation."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, count: int, what: str) -> bytes:
        if self.pos + count > len(self.data):
            raise CheckpointFormatError(
                f"truncated while reading {what} at byte offset {self.pos}"
            )
        out = self.data[self.pos : self.pos + count]
        self.pos += count
        return out

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        data = f.read()
    r = _Reader(data)
    magic = r.take(4, "magic")
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r} at byte offset 0")
    version = r.u16("version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(f"unsupported version {version} at byte offset 4")
    blob_len = r.u32("config length")
    blob = r.take(blob_len, "config blob").decode("utf-8")
    config: dict[str, str] = {}
    for line in blob.splitlines():
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CheckpointFormatError(f"malformed config line {line!r}")
        config[key] = value
    step = int(config.pop("step", "0"))
    count = r.u32("tensor count")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        name_len = r.u16("tensor name length")
        name = r.take(name_len, "tensor name").decode("utf-8")
        rank = r.u8("tensor rank")
        dims = tuple(r.u32(f"dim {i} of {name}") for i in range(rank))
        size = int(np.prod(dims)) if dims else 1
        raw = r.take(4 * size, f"data of {name}")
        tensors[name] = (
            np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float64)
        )
    if r.pos != len(data):
        raise CheckpointFormatError(
            f"{len(data) - r.pos} trailing bytes at byte offset {r.pos}"
        )
    return Checkpoint(version=version, config=config, step=step, tensors=tensors)
