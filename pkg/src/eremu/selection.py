"""Distance-ranked selection of buffered domains for replay.

Each buffered domain is scored by its multi-kernel MMD to the current domain.
The ``l`` most distant ones are replayed, each weighted by the sigmoid of its
distance, so the more dissimilar a domain the larger its share of the loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .buffer import BufferEntry, DomainDataset, ExperienceBuffer
from .errors import ContractViolation
from .kernels import MultiKernel, mk_mmd, validate_kernel_weights
from .learner import WeightedBatch


def sigmoid(x: float) -> float:
    x = float(x)
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[BufferEntry, ...] = ()
    weights: tuple[float, ...] = ()
    # NaN when the selection was not distance-driven (random replay)
    distances: tuple[float, ...] = ()

    def __post_init__(self):
        if not len(self.selected) == len(self.weights) == len(self.distances):
            raise ContractViolation("selected, weights and distances must be aligned")

    def __len__(self):
        return len(self.selected)

    def __bool__(self):
        return bool(self.selected)

    @property
    def domain_ids(self) -> tuple[str, ...]:
        return tuple(e.domain_id for e in self.selected)

    def as_batches(self) -> tuple[WeightedBatch, ...]:
        return tuple(
            WeightedBatch(e.samples.features, e.samples.labels, w)
            for e, w in zip(self.selected, self.weights)
        )


EMPTY = SelectionResult()


def rank_domains_by_distance(distances: Sequence[tuple[str, float]], descending: bool = True) -> list[int]:
    """Permutation ordering ``distances`` by value.

    The input must be oldest-first (buffer order); the sort is stable, so ties
    keep the older domain ahead.
    """
    values = [float(d) for _, d in distances]
    if not all(math.isfinite(v) for v in values):
        raise ContractViolation("distances must be finite")
    return sorted(range(len(values)), key=values.__getitem__, reverse=descending)


def domain_distances(buf: ExperienceBuffer, current: DomainDataset, mk: MultiKernel) -> list[float]:
    entries = buf.stored_domains()
    for e in entries:
        if e.samples.dim != current.dim:
            raise ContractViolation(
                f"domain {e.domain_id!r} has dim {e.samples.dim}, current {current.domain_id!r} has {current.dim}"
            )
    return [mk_mmd(current.features, e.samples.features, mk) for e in entries]


def ddm_es(
    buf: ExperienceBuffer,
    current: DomainDataset,
    l: int,
    mk: MultiKernel,
    ascending: bool = False,
) -> SelectionResult:
    """Pick up to ``l`` buffered domains by MK-MMD to ``current``.

    By default the largest distances win. ``ascending=True`` keeps the
    smallest instead (for comparison runs). The buffer is not modified.
    """
    if l < 1:
        raise ContractViolation(f"l must be >= 1, got {l}")
    validate_kernel_weights(mk)
    if buf.is_empty():
        return EMPTY
    entries = buf.stored_domains()
    dists = domain_distances(buf, current, mk)
    order = rank_domains_by_distance(
        [(e.domain_id, d) for e, d in zip(entries, dists)], descending=not ascending
    )[:l]
    return SelectionResult(
        selected=tuple(entries[j] for j in order),
        weights=tuple(sigmoid(dists[j]) for j in order),
        distances=tuple(dists[j] for j in order),
    )


def random_selection(
    buf: ExperienceBuffer,
    l: int,
    rng: np.random.Generator,
    weighting: str = "unit",
    current: DomainDataset | None = None,
    mk: MultiKernel | None = None,
) -> SelectionResult:
    """Uniformly choose ``min(l, len(buf))`` domains, oldest first.

    With ``weighting="unit"`` every chosen domain gets weight 1 and no
    distances are computed. ``weighting="sigmoid"`` keeps the distance-based
    weights (requires ``current`` and ``mk``), so only the choice is random.
    """
    if l < 1:
        raise ContractViolation(f"l must be >= 1, got {l}")
    if weighting not in ("unit", "sigmoid"):
        raise ContractViolation(f"unknown weighting {weighting!r}")
    entries = buf.stored_domains()
    if not entries:
        return EMPTY
    k = min(l, len(entries))
    picks = np.sort(rng.choice(len(entries), size=k, replace=False))
    if weighting == "unit":
        return SelectionResult(
            selected=tuple(entries[j] for j in picks),
            weights=(1.0,) * k,
            distances=(math.nan,) * k,
        )
    if current is None or mk is None:
        raise ContractViolation("sigmoid weighting needs the current domain and a MultiKernel")
    dists = domain_distances(buf, current, mk)
    return SelectionResult(
        selected=tuple(entries[j] for j in picks),
        weights=tuple(sigmoid(dists[j]) for j in picks),
        distances=tuple(dists[j] for j in picks),
    )
