"""Adaptive experience replay for continually adapting learners."""

from ._backend import BACKEND
from .buffer import DomainDataset, ExperienceBuffer, new_buffer, rs_ebu_update, stored_domains
from .config import RunConfig
from .errors import (
    ConfigError,
    ContractViolation,
    NegativeWeightError,
    NormalizationError,
    NumericFailure,
    RunError,
    WeightValidationError,
)
from .harness import run, run_ablation, sweep_l, write_metrics
from .kernels import KernelSpec, MultiKernel, default_multikernel, median_heuristic_bandwidth, mk_mmd, mmd_squared
from .learner import LearnerState, WeightedBatch, replay_loss, train_step
from .selection import SelectionResult, ddm_es, random_selection

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "ContractViolation",
    "DomainDataset",
    "ExperienceBuffer",
    "KernelSpec",
    "LearnerState",
    "MultiKernel",
    "NegativeWeightError",
    "NormalizationError",
    "NumericFailure",
    "RunConfig",
    "RunError",
    "SelectionResult",
    "WeightValidationError",
    "WeightedBatch",
    "ddm_es",
    "default_multikernel",
    "median_heuristic_bandwidth",
    "mk_mmd",
    "mmd_squared",
    "new_buffer",
    "random_selection",
    "replay_loss",
    "rs_ebu_update",
    "run",
    "run_ablation",
    "stored_domains",
    "sweep_l",
    "train_step",
    "write_metrics",
]
