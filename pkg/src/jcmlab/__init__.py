"""Learned binary joint coding-modulation laboratory.

A numpy/scipy research package for a BPSK digital semantic communication
system: a stochastic Bernoulli encoder, Gumbel-based modulation, an AWGN
channel, paired semantic and reconstruction decoders, classical baselines,
and an exact enumeration oracle for the mutual-information bounds that the
training objective maximizes.
"""

from .autodiff import Tensor, finite_diff_check
from .baselines import AnalogSystem, OneBitSystem, Uniform8System
from .channel import ChannelConfig, awgn_apply, flip_apply, snr_to_sigma
from .datasets import Dataset, generate_synthetic, load_dataset, save_dataset
from .decoders import JcmModel, LossBreakdown, jcm_loss
from .encoder import BernoulliEncoder, bernoulli_pmf, bernoulli_pmf_table, enumerate_symbol_blocks
from .errors import (
    CheckpointFormatError,
    ConfigError,
    DatasetError,
    DeterminismError,
    DimensionError,
    DomainError,
    JcmError,
    NonFiniteError,
)
from .experiments import ExperimentConfig, load_experiment_config, run_sweep
from .metrics import MetricsRecord, accuracy, evaluate_system, mean_psnr, psnr
from .oracle import TinySystem, exact_mi, lemma1_rhs, mi_objective, theorem1_rhs, verify_bounds
from .sampler import GumbelNoise, SymbolBlock, sample_hard, sample_soft
from .seeding import derive_rng
from .training import (
    Checkpoint,
    JcmTrainable,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AnalogSystem",
    "BernoulliEncoder",
    "Checkpoint",
    "CheckpointFormatError",
    "ChannelConfig",
    "ConfigError",
    "Dataset",
    "DatasetError",
    "DeterminismError",
    "DimensionError",
    "DomainError",
    "ExperimentConfig",
    "GumbelNoise",
    "JcmError",
    "JcmModel",
    "JcmTrainable",
    "LossBreakdown",
    "MetricsRecord",
    "NonFiniteError",
    "OneBitSystem",
    "SymbolBlock",
    "Tensor",
    "TinySystem",
    "TrainConfig",
    "Uniform8System",
    "accuracy",
    "awgn_apply",
    "bernoulli_pmf",
    "bernoulli_pmf_table",
    "derive_rng",
    "enumerate_symbol_blocks",
    "evaluate_system",
    "exact_mi",
    "finite_diff_check",
    "flip_apply",
    "generate_synthetic",
    "jcm_loss",
    "lemma1_rhs",
    "load_checkpoint",
    "load_dataset",
    "load_experiment_config",
    "mean_psnr",
    "mi_objective",
    "psnr",
    "run_sweep",
    "sample_hard",
    "sample_soft",
    "save_checkpoint",
    "save_dataset",
    "snr_to_sigma",
    "theorem1_rhs",
    "train",
    "verify_bounds",
]
