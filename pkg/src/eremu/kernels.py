"""Kernels, the biased MMD estimator and multi-kernel MMD.

All distances are squared RKHS norms between empirical mean embeddings,
estimated with the V-statistic (diagonal terms included).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist

from . import _backend
from .errors import ContractViolation, NegativeWeightError, NormalizationError

GAUSSIAN = "gaussian"
LINEAR = "linear"

WEIGHT_SUM_TOL = 1e-9
DEFAULT_SCALES = (0.25, 0.5, 1.0, 2.0, 4.0)

# pooled sample cap for the median heuristic; larger pools are strided
MEDIAN_MAX_POINTS = 1024


@dataclass(frozen=True)
class KernelSpec:
    family: str = GAUSSIAN
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.family not in (GAUSSIAN, LINEAR):
            raise ContractViolation(f"unknown kernel family {self.family!r}")
        if self.family == GAUSSIAN and not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ContractViolation(f"gaussian bandwidth must be positive, got {self.bandwidth}")


@dataclass(frozen=True)
class MultiKernel:
    kernels: tuple[KernelSpec, ...]
    weights: tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "kernels", tuple(self.kernels))
        if not self.kernels:
            raise ContractViolation("a MultiKernel needs at least one kernel")
        if not self.weights:
            m = len(self.kernels)
            object.__setattr__(self, "weights", (1.0 / m,) * m)
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) != len(self.kernels):
            raise ContractViolation(
                f"{len(self.kernels)} kernels but {len(self.weights)} weights"
            )

    @classmethod
    def gaussian(cls, bandwidths: Sequence[float], weights: Sequence[float] = ()) -> "MultiKernel":
        return cls(tuple(KernelSpec(GAUSSIAN, float(s)) for s in bandwidths), tuple(weights))


def as_features(x, name: str = "features") -> np.ndarray:
    """Coerce to a finite 2-D float64 array with at least one row."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ContractViolation(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} contains non-finite entries")
    return arr


def _paired(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = as_features(a, "a")
    b = as_features(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ContractViolation(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return a, b


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ContractViolation(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ContractViolation("kernel inputs must be finite")
    if spec.family == LINEAR:
        return float(np.dot(x, y))
    diff = x - y
    return math.exp(-float(np.dot(diff, diff)) / (2.0 * spec.bandwidth**2))


def median_heuristic_bandwidth(a, b) -> float:
    """Median pairwise Euclidean distance over the pooled samples.

    Falls back to 1.0 when the median is zero (e.g. all points coincide).
    """
    a, b = _paired(a, b)
    return _median_distance(np.vstack([a, b]))


def _median_distance(pooled: np.ndarray) -> float:
    if pooled.shape[0] < 2:
        raise ContractViolation("median heuristic needs at least 2 pooled samples")
    if pooled.shape[0] > MEDIAN_MAX_POINTS:
        stride = -(-pooled.shape[0] // MEDIAN_MAX_POINTS)
        pooled = pooled[::stride]
    med = float(np.median(pdist(pooled)))
    return med if med > 0 else 1.0


def _linear_mmd(a: np.ndarray, b: np.ndarray) -> float:
    # equal to the double sums of inner products, without the O(n^2) work
    diff = a.mean(axis=0) - b.mean(axis=0)
    return float(np.dot(diff, diff))


def _per_kernel(a: np.ndarray, b: np.ndarray, kernels: Sequence[KernelSpec]) -> list[float]:
    gauss_idx = [u for u, k in enumerate(kernels) if k.family == GAUSSIAN]
    values = [0.0] * len(kernels)
    if gauss_idx:
        raw = _backend.gaussian_mmd(a, b, [kernels[u].bandwidth for u in gauss_idx])
        for u, v in zip(gauss_idx, raw):
            values[u] = float(v)
    for u, k in enumerate(kernels):
        if k.family == LINEAR:
            values[u] = _linear_mmd(a, b)
    # round-off can push a zero distance slightly negative
    return [v if v > 0.0 else 0.0 for v in values]


def mmd_squared(a, b, spec: KernelSpec) -> float:
    a, b = _paired(a, b)
    return _per_kernel(a, b, (spec,))[0]


def validate_kernel_weights(mk: MultiKernel) -> None:
    weights = mk.weights
    negative = [w for w in weights if not w >= 0.0]
    if negative:
        raise NegativeWeightError(f"kernel weights must be non-negative, got {list(weights)}")
    total = math.fsum(weights)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise NormalizationError(f"kernel weights must sum to 1, got {total!r}")


def mk_mmd_terms(a, b, mk: MultiKernel) -> list[float]:
    """Per-kernel MMD^2 values, in kernel order."""
    validate_kernel_weights(mk)
    a, b = _paired(a, b)
    return _per_kernel(a, b, mk.kernels)


def mk_mmd(a, b, mk: MultiKernel) -> float:
    total = 0.0
    for w, v in zip(mk.weights, mk_mmd_terms(a, b, mk)):
        total += w * v
    return total


def default_multikernel(
    a,
    b=None,
    scales: Sequence[float] = DEFAULT_SCALES,
    weights: Sequence[float] = (),
    bandwidth: float | None = None,
) -> MultiKernel:
    """Gaussian family at ``scales`` x a base bandwidth.

    The base bandwidth is the median heuristic over ``a`` (pooled with ``b``
    when given) unless ``bandwidth`` fixes it.
    """
    if bandwidth is None:
        if b is None:
            bandwidth = _median_distance(as_features(a, "a"))
        else:
            bandwidth = median_heuristic_bandwidth(a, b)
    return MultiKernel.gaussian([s * bandwidth for s in scales], weights)
