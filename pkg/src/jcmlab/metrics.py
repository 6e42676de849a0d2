"""Evaluation metrics: classification accuracy and PSNR.

PSNR convention, applied identically to every method: per-pixel MSE
(squared error averaged over all pixels of one image), peak value 1.0,
10*log10(max^2 / mse).  An image with per-pixel MSE below 1e-12 is
reported as 120 dB and flagged as capped.  Batch-level PSNR is the mean
of per-image PSNR values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

PSNR_CAP_DB = 120.0
PSNR_MSE_FLOOR = 1e-12


def predict_classes(probs: np.ndarray) -> np.ndarray:
    """Argmax per row; ties resolve to the lowest class id."""
    return np.argmax(np.asarray(probs), axis=1)


def accuracy(predicted: np.ndarray, labels: np.ndarray) -> float:
    predicted = np.asarray(predicted)
    labels = np.asarray(labels)
    if predicted.shape != labels.shape:
        raise DimensionError(
            f"prediction count {predicted.shape} != label count {labels.shape}"
        )
    return float((predicted == labels).mean())


@dataclass(frozen=True)
class PsnrValue:
    db: float
    capped: bool


def psnr(x: np.ndarray, x_hat: np.ndarray, max_value: float = 1.0) -> PsnrValue:
    """PSNR in dB over all elements of one image (or any equal-shape pair)."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise DimensionError(f"psnr operands differ in shape: {x.shape} vs {x_hat.shape}")
    per_pixel_mse = float(((x - x_hat) ** 2).mean())
    if per_pixel_mse < PSNR_MSE_FLOOR:
        return PsnrValue(db=PSNR_CAP_DB, capped=True)
    return PsnrValue(db=float(10.0 * np.log10(max_value**2 / per_pixel_mse)), capped=False)


def mean_psnr(x: np.ndarray, x_hat: np.ndarray, max_value: float = 1.0) -> PsnrValue:
    """Average of per-image PSNR over the batch axis; capped if any image capped."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape or x.ndim != 2:
        raise DimensionError(f"expected matching 2-D batches, got {x.shape} and {x_hat.shape}")
    values = [psnr(a, b, max_value) for a, b in zip(x, x_hat)]
    return PsnrValue(
        db=float(np.mean([v.db for v in values])),
        capped=any(v.capped for v in values),
    )


@dataclass(frozen=True)
class MetricsRecord:
    method: str
    snr_db: float
    n: int
    seed: int
    accuracy: float
    psnr_db: float
    psnr_capped: bool = False

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise DimensionError(f"accuracy out of range: {self.accuracy}")


def evaluate_system(
    system,
    dataset,
    snr_db: float,
    seed: int,
    batch_size: int = 512,
) -> tuple[float, PsnrValue]:
    """Run the system's evaluation forward over the dataset in chunks.

    Returns (accuracy, batch PSNR).  The chunk index feeds the noise
    streams, so results are independent of batch_size only in
    distribution, but fully reproducible for a fixed one.
    """
    preds = []
    recons = []
    count = dataset.count
    for chunk, start in enumerate(range(0, count, batch_size)):
        x = dataset.features[start : start + batch_size]
        probs, x_hat = system.infer_batch(x, snr_db, seed, chunk)
        preds.append(predict_classes(probs))
        recons.append(x_hat)
    predicted = np.concatenate(preds)
    x_hat = np.concatenate(recons, axis=0)
    return accuracy(predicted, dataset.labels), mean_psnr(dataset.features, x_hat)
