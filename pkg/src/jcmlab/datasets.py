"""Synthetic dataset generation and manifest-based dataset I/O.

A dataset on disk is a small key=value manifest naming two raw
little-endian binary files: features (u8 pixels or f32) and labels (u8
class ids).  Features are always in [0,1] in memory; u8 data is divided
by 255 on load.  Synthetic data places one uniform random template per
class and adds clipped Gaussian noise around it; train and test splits
draw from disjoint seed streams.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DatasetError
from .seeding import derive_rng

_SPLIT_CODES = {"train": 0, "test": 1}
_FEATURE_DTYPES = {"u8": np.uint8, "f32le": "<f4"}


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (count, dim), float64 in [0, 1]
    labels: np.ndarray    # (count,), integer class ids
    num_classes: int
    split: str            # "train" or "test"

    def __post_init__(self):
        if self.features.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise DatasetError(
                f"feature count {self.features.shape[0]} != label count {self.labels.shape}"
            )
        if self.features.size and (self.features.min() < 0.0 or self.features.max() > 1.0):
            raise DatasetError("features must lie in [0, 1]")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise DatasetError(
                f"labels must lie in 0..{self.num_classes - 1}, found {self.labels.max()}"
            )
        if self.split not in _SPLIT_CODES:
            raise DatasetError(f"split must be train or test, got {self.split!r}")

    @property
    def count(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


def generate_synthetic(
    classes: int,
    dim: int,
    per_class: int,
    noise_std: float,
    seed: int,
    split: str = "train",
) -> Dataset:
    """Clipped Gaussian clouds around one uniform template per class.

    Templates depend only on (seed, classes, dim), so the train and test
    splits of the same seed share class structure while their noise comes
    from disjoint streams.
    """
    if classes < 2:
        raise DatasetError(f"need at least 2 classes, got {classes}")
    if dim < 2:
        raise DatasetError(f"need at least 2 dimensions, got {dim}")
    if split not in _SPLIT_CODES:
        raise DatasetError(f"split must be train or test, got {split!r}")
    templates = derive_rng(seed, "templates").uniform(size=(classes, dim))
    noise_rng = derive_rng(seed, "sample-noise", _SPLIT_CODES[split])
    features = np.repeat(templates, per_class, axis=0)
    features = np.clip(features + noise_rng.normal(scale=noise_std, size=features.shape), 0.0, 1.0)
    labels = np.repeat(np.arange(classes), per_class)
    return Dataset(features=features, labels=labels, num_classes=classes, split=split)


def save_dataset(ds: Dataset, directory, name: str | None = None) -> str:
    """Write manifest + raw binaries; returns the manifest path.

    Features are stored as f32 little-endian, labels as u8 (so at most
    256 classes).
    """
    if ds.num_classes > 256:
        raise DatasetError("u8 label storage supports at most 256 classes")
    name = name or ds.split
    os.makedirs(directory, exist_ok=True)
    feature_file = f"{name}_features.bin"
    label_file = f"{name}_labels.bin"
    ds.features.astype("<f4").tofile(os.path.join(directory, feature_file))
    ds.labels.astype(np.uint8).tofile(os.path.join(directory, label_file))
    manifest_path = os.path.join(directory, f"{name}.manifest")
    lines = [
        f"count={ds.count}",
        f"dim={ds.dim}",
        f"classes={ds.num_classes}",
        f"feature_file={feature_file}",
        f"label_file={label_file}",
        "feature_dtype=f32le",
        f"split={ds.split}",
    ]
    with open(manifest_path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    return manifest_path


def _parse_manifest(path) -> dict[str, str]:
    entries: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = f.read()
    except OSError as e:
        raise DatasetError(f"cannot read manifest {path}: {e}") from e
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DatasetError(f"{path}:{lineno}: expected key=value, got {line!r}")
        entries[key.strip()] = value.strip()
    return entries


def load_dataset(manifest_path) -> Dataset:
    entries = _parse_manifest(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    required = ("count", "dim", "classes", "feature_file", "label_file", "feature_dtype")
    for key in required:
        if key not in entries:
            raise DatasetError(f"manifest missing required field {key!r}")
    try:
        count = int(entries["count"])
        dim = int(entries["dim"])
        classes = int(entries["classes"])
    except ValueError as e:
        raise DatasetError(f"manifest has a non-integer size field: {e}") from e
    dtype_name = entries["feature_dtype"]
    if dtype_name not in _FEATURE_DTYPES:
        raise DatasetError(f"feature_dtype must be one of {sorted(_FEATURE_DTYPES)}, got {dtype_name!r}")
    feature_path = os.path.join(base, entries["feature_file"])
    label_path = os.path.join(base, entries["label_file"])
    for field_name, p in (("feature_file", feature_path), ("label_file", label_path)):
        if not os.path.exists(p):
            raise DatasetError(f"{field_name} points to a missing file: {p}")
    features = np.fromfile(feature_path, dtype=_FEATURE_DTYPES[dtype_name])
    if features.size != count * dim:
        raise DatasetError(
            f"feature_file holds {features.size} values, manifest promises {count}x{dim}"
        )
    features = features.astype(np.float64).reshape(count, dim)
    if dtype_name == "u8":
        features = features / 255.0
    labels = np.fromfile(label_path, dtype=np.uint8)
    if labels.size != count:
        raise DatasetError(f"label_file holds {labels.size} labels, manifest promises {count}")
    if labels.size and labels.max() >= classes:
        raise DatasetError(f"label_file contains class id {labels.max()} but classes={classes}")
    split = entries.get("split", "train")
    return Dataset(
        features=features, labels=labels.astype(np.int64), num_classes=classes, split=split
    )
