"""Experiment harness: flat key=value configs, per-point training, caching, CSV output.

One model is trained per (method, snr_db, n, seed) point, at the SNR it
will be evaluated on.  Finished checkpoints are cached under a sha256 hash
of the full point configuration; rerunning a sweep reuses them and
reproduces the metrics bitwise.  Metric rows are always emitted in sorted
(method, snr_db, n, seed) order with the fixed header
``method,snr_db,n,seed,accuracy,psnr_db``.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .baselines import AnalogSystem, OneBitSystem, Uniform8System
from .datasets import Dataset, generate_synthetic, load_dataset
from .decoders import JcmModel
from .errors import CheckpointFormatError, ConfigError, DimensionError
from .metrics import MetricsRecord, evaluate_system
from .seeding import derive_rng
from .training import (
    JcmTrainable,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    train,
)

METHODS = ("jcm", "analog", "uniform8", "nn1bit")
CSV_HEADER = "method,snr_db,n,seed,accuracy,psnr_db"
TRACE_HEADER = "step,total,ce,mse"


def parse_kv_file(path) -> dict[str, tuple[str, int]]:
    """Read key=value lines; returns key -> (value, line number).

    Blank lines and lines starting with '#' are ignored.  Duplicate keys
    and lines without '=' are config errors naming the line.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    entries: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
        key = key.strip()
        if key in entries:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        entries[key] = (value.strip(), lineno)
    return entries


def _parse_int(key, value, lineno):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: key {key!r} needs an integer, got {value!r}") from None


def _parse_float(key, value, lineno):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: key {key!r} needs a number, got {value!r}") from None


def _parse_int_list(key, value, lineno):
    return tuple(_parse_int(key, part.strip(), lineno) for part in value.split(",") if part.strip())


def _parse_float_list(key, value, lineno):
    return tuple(_parse_float(key, part.strip(), lineno) for part in value.split(",") if part.strip())


_KNOWN_KEYS = {
    "method", "methods", "n", "snr_db", "seeds", "seed",
    "steps", "batch_size", "learning_rate", "optimizer", "lambda",
    "tau_start", "tau_end", "anneal_frac", "num_noise_draws",
    "hidden_enc", "hidden_dec", "uniform8_train_mode",
    "data", "classes", "dim", "per_class", "per_class_test", "noise_std", "data_seed",
    "train_manifest", "test_manifest",
    "eval_batch", "out", "cache_dir", "checkpoint",
}


@dataclass(frozen=True)
class DataSpec:
    kind: str  # "synthetic" or "manifest"
    classes: int = 4
    dim: int = 64
    per_class: int = 500
    per_class_test: int = 250
    noise_std: float = 0.1
    data_seed: int = 0
    train_manifest: str = ""
    test_manifest: str = ""

    def fingerprint(self) -> str:
        if self.kind == "synthetic":
            return (
                f"synthetic:classes={self.classes},dim={self.dim},per_class={self.per_class},"
                f"per_class_test={self.per_class_test},noise_std={self.noise_std!r},"
                f"data_seed={self.data_seed}"
            )
        return f"manifest:{os.path.abspath(self.train_manifest)}|{os.path.abspath(self.test_manifest)}"

    def load(self) -> tuple[Dataset, Dataset]:
        if self.kind == "synthetic":
            train_ds = generate_synthetic(
                self.classes, self.dim, self.per_class, self.noise_std, self.data_seed, "train"
            )
            test_ds = generate_synthetic(
                self.classes, self.dim, self.per_class_test, self.noise_std, self.data_seed, "test"
            )
            return train_ds, test_ds
        return load_dataset(self.train_manifest), load_dataset(self.test_manifest)


@dataclass(frozen=True)
class ExperimentConfig:
    methods: tuple[str, ...] = ("jcm",)
    n: int = 64
    snrs: tuple[float, ...] = (10.0,)
    seeds: tuple[int, ...] = (0,)
    train: TrainConfig = TrainConfig()
    data: DataSpec = DataSpec(kind="synthetic")
    hidden_enc: tuple[int, ...] = (256, 256)
    hidden_dec: tuple[int, ...] = (256, 256)
    uniform8_train_mode: str = "analog"
    eval_batch: int = 512
    out: str = ""
    cache_dir: str = ""
    checkpoint: str = ""

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; expected one of {METHODS}")
        if self.n < 8:
            raise ConfigError(f"n must be >= 8, got {self.n}")
        if "uniform8" in self.methods and self.n % 8:
            raise ConfigError(f"uniform8 requires n divisible by 8, got {self.n}")
        if not self.snrs:
            raise ConfigError("snr_db list must be non-empty")
        if not self.seeds:
            raise ConfigError("seeds list must be non-empty")
        if self.uniform8_train_mode not in ("analog", "st"):
            raise ConfigError(
                f"uniform8_train_mode must be 'analog' or 'st', got {self.uniform8_train_mode!r}"
            )


def load_experiment_config(path, seed_override: int | None = None, out_override: str | None = None) -> ExperimentConfig:
    entries = parse_kv_file(path)
    for key, (_, lineno) in entries.items():
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")

    def get(key, default=None):
        return entries[key][0] if key in entries else default

    def line(key):
        return entries[key][1]

    methods: tuple[str, ...]
    if "methods" in entries:
        methods = tuple(p.strip() for p in get("methods").split(",") if p.strip())
    elif "method" in entries:
        methods = (get("method"),)
    else:
        methods = ("jcm",)

    snrs = _parse_float_list("snr_db", get("snr_db", "10"), line("snr_db") if "snr_db" in entries else 0)
    if "seeds" in entries:
        seeds = _parse_int_list("seeds", get("seeds"), line("seeds"))
    elif "seed" in entries:
        seeds = (_parse_int("seed", get("seed"), line("seed")),)
    else:
        seeds = (0,)
    if seed_override is not None:
        seeds = (int(seed_override),)

    train_cfg = TrainConfig(
        steps=_parse_int("steps", get("steps", "2000"), line("steps") if "steps" in entries else 0),
        batch_size=_parse_int("batch_size", get("batch_size", "64"), 0),
        learning_rate=_parse_float("learning_rate", get("learning_rate", "1e-3"), 0),
        optimizer=get("optimizer", "adam"),
        lam=_parse_float("lambda", get("lambda", "1.0"), 0),
        tau_start=_parse_float("tau_start", get("tau_start", "2.0"), 0),
        tau_end=_parse_float("tau_end", get("tau_end", "0.3"), 0),
        anneal_frac=_parse_float("anneal_frac", get("anneal_frac", "0.8"), 0),
        num_noise_draws=_parse_int("num_noise_draws", get("num_noise_draws", "1"), 0),
    )

    data_kind = get("data", "manifest" if "train_manifest" in entries else "synthetic")
    if data_kind not in ("synthetic", "manifest"):
        raise ConfigError(f"data must be 'synthetic' or 'manifest', got {data_kind!r}")
    if data_kind == "manifest":
        if "train_manifest" not in entries or "test_manifest" not in entries:
            raise ConfigError("manifest data needs train_manifest and test_manifest keys")
        data = DataSpec(
            kind="manifest",
            train_manifest=get("train_manifest"),
            test_manifest=get("test_manifest"),
        )
    else:
        per_class = _parse_int("per_class", get("per_class", "500"), 0)
        data = DataSpec(
            kind="synthetic",
            classes=_parse_int("classes", get("classes", "4"), 0),
            dim=_parse_int("dim", get("dim", "64"), 0),
            per_class=per_class,
            per_class_test=_parse_int(
                "per_class_test", get("per_class_test", str(max(1, per_class // 2))), 0
            ),
            noise_std=_parse_float("noise_std", get("noise_std", "0.1"), 0),
            data_seed=_parse_int("data_seed", get("data_seed", "0"), 0),
        )

    return ExperimentConfig(
        methods=methods,
        n=_parse_int("n", get("n", "64"), 0),
        snrs=snrs,
        seeds=seeds,
        train=train_cfg,
        data=data,
        hidden_enc=_parse_int_list("hidden_enc", get("hidden_enc", "256,256"), 0),
        hidden_dec=_parse_int_list("hidden_dec", get("hidden_dec", "256,256"), 0),
        uniform8_train_mode=get("uniform8_train_mode", "analog"),
        eval_batch=_parse_int("eval_batch", get("eval_batch", "512"), 0),
        out=out_override if out_override is not None else get("out", ""),
        cache_dir=get("cache_dir", ""),
        checkpoint=get("checkpoint", ""),
    )


def build_system(method, source_dim, n, num_classes, hidden_enc, hidden_dec, init_seed, u8_mode="analog"):
    rng = derive_rng(init_seed, "init")
    if method == "jcm":
        return JcmTrainable(JcmModel.build(source_dim, n, num_classes, hidden_enc, hidden_dec, rng))
    if method == "analog":
        return AnalogSystem(source_dim, n, num_classes, hidden_enc, hidden_dec, rng)
    if method == "uniform8":
        return Uniform8System(source_dim, n, num_classes, hidden_enc, hidden_dec, rng, u8_mode)
    if method == "nn1bit":
        return OneBitSystem(source_dim, n, num_classes, hidden_enc, hidden_dec, rng)
    raise ConfigError(f"unknown method {method!r}")


def point_config_blob(cfg: ExperimentConfig, method: str, snr_db: float, seed: int,
                      source_dim: int, classes: int) -> dict[str, str]:
    """Everything that determines a trained point, as checkpoint blob lines."""
    train_cfg = replace(cfg.train, master_seed=seed, snr_db_train=snr_db)
    blob = dict(train_cfg.config_lines())
    blob.update(
        {
            "method": method,
            "n": str(cfg.n),
            "source_dim": str(source_dim),
            "classes": str(classes),
            "hidden_enc": ",".join(map(str, cfg.hidden_enc)),
            "hidden_dec": ",".join(map(str, cfg.hidden_dec)),
            "uniform8_train_mode": cfg.uniform8_train_mode,
            "data": cfg.data.fingerprint(),
        }
    )
    return blob


def config_hash(blob: dict[str, str]) -> str:
    canonical = "\n".join(f"{k}={blob[k]}" for k in sorted(blob))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def system_from_blob(blob: dict[str, str]):
    """Rebuild an untrained system matching a checkpoint's recorded architecture."""
    try:
        method = blob["method"]
        n = int(blob["n"])
        source_dim = int(blob["source_dim"])
        classes = int(blob["classes"])
        hidden_enc = tuple(int(v) for v in blob["hidden_enc"].split(",") if v)
        hidden_dec = tuple(int(v) for v in blob["hidden_dec"].split(",") if v)
        seed = int(blob["master_seed"])
        u8_mode = blob.get("uniform8_train_mode", "analog")
    except (KeyError, ValueError) as e:
        raise CheckpointFormatError(f"checkpoint config blob is incomplete: {e}") from e
    return build_system(method, source_dim, n, classes, hidden_enc, hidden_dec, seed, u8_mode)


def train_point(cfg: ExperimentConfig, method: str, snr_db: float, seed: int, train_ds: Dataset):
    """Train one point from scratch; returns (system, checkpoint, trace)."""
    blob = point_config_blob(cfg, method, snr_db, seed, train_ds.dim, train_ds.num_classes)
    system = system_from_blob(blob)
    train_cfg = replace(cfg.train, master_seed=seed, snr_db_train=snr_db)
    ckpt, trace = train(system, train_ds, train_cfg, extra_config=blob)
    return system, ckpt, trace


def run_point(cfg: ExperimentConfig, method: str, snr_db: float, seed: int,
              train_ds: Dataset, test_ds: Dataset) -> MetricsRecord:
    """Train (or reuse a cached checkpoint) and evaluate one sweep point."""
    blob = point_config_blob(cfg, method, snr_db, seed, train_ds.dim, train_ds.num_classes)
    cache_path = None
    system = None
    if cfg.cache_dir:
        os.makedirs(cfg.cache_dir, exist_ok=True)
        cache_path = os.path.join(cfg.cache_dir, config_hash(blob) + ".ckpt")
        if os.path.exists(cache_path):
            try:
                ckpt = load_checkpoint(cache_path)
                if ckpt.config == blob:
                    system = system_from_blob(blob)
                    system.load_state_arrays(ckpt.tensors)
            except (CheckpointFormatError, DimensionError):
                system = None  # stale or damaged cache entry: retrain below
    if system is None:
        system, ckpt, _ = train_point(cfg, method, snr_db, seed, train_ds)
        if cache_path:
            save_checkpoint(ckpt, cache_path)
            # the in-memory parameters are float64; evaluation must match
            # later cache reloads bitwise, so reload the float32 snapshot
            system = system_from_blob(blob)
            system.load_state_arrays(load_checkpoint(cache_path).tensors)
    acc, ps = evaluate_system(system, test_ds, snr_db, seed, batch_size=cfg.eval_batch)
    return MetricsRecord(
        method=method, snr_db=snr_db, n=cfg.n, seed=seed,
        accuracy=acc, psnr_db=ps.db, psnr_capped=ps.capped,
    )


def _run_point_args(args):
    return run_point(*args)


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> list[MetricsRecord]:
    train_ds, test_ds = cfg.data.load()
    points = [
        (cfg, method, snr, seed, train_ds, test_ds)
        for method in cfg.methods
        for snr in cfg.snrs
        for seed in cfg.seeds
    ]
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_point_args, points))
    else:
        records = [run_point(*p) for p in points]
    records.sort(key=lambda r: (r.method, r.snr_db, r.n, r.seed))
    return records


def format_metrics_csv(records) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.method},{r.snr_db:.6g},{r.n},{r.seed},{r.accuracy:.6g},{r.psnr_db:.6g}"
        )
    return "\n".join(lines) + "\n"


def format_trace_csv(trace) -> str:
    lines = [TRACE_HEADER]
    for row in trace:
        lines.append(f"{row.step},{row.total:.10g},{row.ce:.10g},{row.mse:.10g}")
    return "\n".join(lines) + "\n"
