"""Linear softmax learner trained on the weighted replay objective.

The objective for one update round is the current-domain loss plus a weighted
sum of losses on replayed domains::

    L(theta) = loss(theta, current) + sum_j w_j * loss(theta, replay_j)

``LearnerState`` is an immutable value; ``train_step`` returns a new one.
Any object exposing ``loss_and_grad``, ``scores`` and ``apply_step`` with the
same signatures can stand in for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np
from scipy.special import logsumexp

from .errors import ContractViolation, NumericFailure


@dataclass(frozen=True, eq=False)
class WeightedBatch:
    features: np.ndarray
    labels: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        if not self.weight > 0:
            raise ContractViolation(f"batch weight must be positive, got {self.weight}")
        if len(self.labels) != len(self.features):
            raise ContractViolation("labels must align with feature rows")


@dataclass(frozen=True, eq=False)
class LearnerState:
    weights: np.ndarray  # (num_classes, dim)
    bias: np.ndarray  # (num_classes,)
    step_size: float = 0.05
    rng_seed: int | None = None

    def __post_init__(self):
        if not (self.step_size > 0 and math.isfinite(self.step_size)):
            raise ContractViolation(f"step_size must be positive, got {self.step_size}")
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ContractViolation(f"bad parameter shapes {w.shape}, {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise NumericFailure("learner parameters are not finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @classmethod
    def initial(
        cls, num_classes: int, dim: int, step_size: float = 0.05, seed: int | None = None, init_scale: float = 0.01
    ) -> "LearnerState":
        """Small Gaussian weights (zero when ``seed`` is None) and zero bias."""
        if seed is None:
            w = np.zeros((num_classes, dim))
        else:
            w = init_scale * np.random.default_rng(seed).standard_normal((num_classes, dim))
        return cls(w, np.zeros(num_classes), step_size, seed)

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def _check(self, features, labels=None):
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ContractViolation(f"expected features of dim {self.dim}, got shape {x.shape}")
        if labels is None:
            return x, None
        y = np.asarray(labels, dtype=np.int64)
        if y.shape != (x.shape[0],):
            raise ContractViolation("labels must align with feature rows")
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise ContractViolation(f"labels must lie in [0, {self.num_classes})")
        return x, y

    def scores(self, features) -> np.ndarray:
        x, _ = self._check(features)
        return x @ self.weights.T + self.bias

    def loss_and_grad(self, features, labels) -> tuple[float, np.ndarray, np.ndarray]:
        """Mean cross-entropy and its gradient w.r.t. (weights, bias)."""
        x, y = self._check(features, labels)
        n = x.shape[0]
        if n == 0:
            raise ContractViolation("empty batch")
        z = x @ self.weights.T + self.bias
        lse = logsumexp(z, axis=1)
        rows = np.arange(n)
        value = float(np.mean(lse - z[rows, y]))
        resid = np.exp(z - lse[:, None])
        resid[rows, y] -= 1.0
        resid /= n
        return max(value, 0.0), resid.T @ x, resid.sum(axis=0)

    def apply_step(self, grad_w: np.ndarray, grad_b: np.ndarray) -> "LearnerState":
        return replace(
            self,
            weights=self.weights - self.step_size * grad_w,
            bias=self.bias - self.step_size * grad_b,
        )


def _batches(selection) -> tuple[WeightedBatch, ...]:
    if selection is None:
        return ()
    if hasattr(selection, "as_batches"):
        return selection.as_batches()
    return tuple(selection)


def _xy(data):
    if hasattr(data, "features"):
        return data.features, data.labels
    return data


def loss(state: LearnerState, data) -> float:
    """Mean cross-entropy of ``state`` on ``data`` (a dataset or ``(X, y)``)."""
    return state.loss_and_grad(*_xy(data))[0]


def replay_loss(state: LearnerState, current, selection=None) -> float:
    total = loss(state, current)
    for batch in _batches(selection):
        total += batch.weight * loss(state, batch)
    return total


def replay_loss_and_grad(state: LearnerState, current, selection=None):
    value, gw, gb = state.loss_and_grad(*_xy(current))
    for batch in _batches(selection):
        v, w_, b_ = state.loss_and_grad(batch.features, batch.labels)
        value += batch.weight * v
        gw = gw + batch.weight * w_
        gb = gb + batch.weight * b_
    return value, gw, gb


def train_step(state: LearnerState, current, selection=None) -> LearnerState:
    """One full-batch gradient-descent step on the replay objective."""
    # overflow is caught by the finiteness checks below
    with np.errstate(over="ignore", invalid="ignore"):
        _, gw, gb = replay_loss_and_grad(state, current, selection)
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise NumericFailure("non-finite gradient")
        new = state.apply_step(gw, gb)
    if not (np.all(np.isfinite(new.weights)) and np.all(np.isfinite(new.bias))):
        raise NumericFailure("parameters diverged")
    return new


def train_round(state: LearnerState, current, selection=None, steps: int = 50) -> LearnerState:
    batches = _batches(selection)
    for _ in range(steps):
        state = train_step(state, current, batches)
    return state


def predict(state: LearnerState, features) -> np.ndarray:
    # argmax returns the first maximum, so ties go to the lowest class index
    return np.argmax(state.scores(features), axis=1)


def evaluate(state: LearnerState, data) -> float:
    x, y = _xy(data)
    x, y = state._check(x, y)
    if x.shape[0] == 0:
        raise ContractViolation("cannot evaluate on an empty dataset")
    correct = int(np.count_nonzero(predict(state, x) == y))
    return correct / x.shape[0]


def stack(batches: Iterable[WeightedBatch]):
    """Concatenate batches into one ``(X, y)`` pair (weights dropped)."""
    batches = list(batches)
    return np.vstack([b.features for b in batches]), np.concatenate([b.labels for b in batches])
