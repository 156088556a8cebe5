"""FIFO experience buffer and its random-sampling update rule.

The buffer holds one block of at most ``per_domain`` samples for each of the
``capacity`` most recent domains. When a new domain arrives and the buffer is
full, the oldest domain's block is evicted as a unit, which keeps every
retained domain equally represented.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .kernels import as_features


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DomainDataset:
    """Labeled samples from one target domain.

    ``arrival_index`` is the update round in which the domain was observed.
    Arrays are stored read-only.
    """

    domain_id: str
    arrival_index: int
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        feats = as_features(self.features)
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.shape[0] != feats.shape[0]:
            raise ContractViolation(
                f"domain {self.domain_id!r}: {labels.shape} labels for {feats.shape[0]} rows"
            )
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise ContractViolation(f"domain {self.domain_id!r}: labels must be integers")
        labels = labels.astype(np.int64)
        if labels.size and labels.min() < 0:
            raise ContractViolation(f"domain {self.domain_id!r}: negative class label")
        object.__setattr__(self, "features", _frozen(feats.copy()))
        object.__setattr__(self, "labels", _frozen(labels.copy()))
        object.__setattr__(self, "arrival_index", int(self.arrival_index))

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, rows) -> "DomainDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return DomainDataset(self.domain_id, self.arrival_index, self.features[rows], self.labels[rows])


@dataclass(frozen=True, eq=False)
class BufferEntry:
    domain_id: str
    arrival_index: int
    samples: DomainDataset
    # row indices into the source dataset, kept for auditing
    source_rows: np.ndarray


class ExperienceBuffer:
    def __init__(self, capacity: int, per_domain: int):
        for name, value in (("capacity", capacity), ("per_domain", per_domain)):
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ContractViolation(f"{name} must be a positive integer, got {value!r}")
        self.capacity = int(capacity)
        self.per_domain = int(per_domain)
        self._entries: deque[BufferEntry] = deque()

    def __len__(self):
        return len(self._entries)

    def __repr__(self):
        ids = [e.domain_id for e in self._entries]
        return f"ExperienceBuffer(capacity={self.capacity}, per_domain={self.per_domain}, entries={ids})"

    def is_empty(self) -> bool:
        return not self._entries

    def is_full(self) -> bool:
        return len(self._entries) == self.capacity

    def stored_domains(self) -> tuple[BufferEntry, ...]:
        """Oldest-first snapshot of the buffered domains."""
        return tuple(self._entries)

    def update(self, domain: DomainDataset, rng: np.random.Generator) -> BufferEntry | None:
        """Insert a uniform random subset of ``domain``; return the evicted entry, if any."""
        n = len(domain)
        if n < 1:
            raise ContractViolation(f"domain {domain.domain_id!r} has no samples")
        if self._entries and domain.arrival_index <= self._entries[-1].arrival_index:
            raise ContractViolation(
                f"arrival index {domain.arrival_index} is not after "
                f"{self._entries[-1].arrival_index} (domain {domain.domain_id!r})"
            )
        evicted = self._entries.popleft() if self.is_full() else None
        keep = min(self.per_domain, n)
        rows = np.sort(rng.choice(n, size=keep, replace=False))
        entry = BufferEntry(domain.domain_id, domain.arrival_index, domain.subset(rows), _frozen(rows))
        self._entries.append(entry)
        return evicted

    def fingerprint(self) -> tuple:
        """Hashable summary of the contents; changes whenever the contents change."""
        return tuple(
            (e.domain_id, e.arrival_index, e.samples.features.tobytes(), e.samples.labels.tobytes())
            for e in self._entries
        )


def new_buffer(capacity: int, per_domain: int) -> ExperienceBuffer:
    return ExperienceBuffer(capacity, per_domain)


def is_full(buf: ExperienceBuffer) -> bool:
    return buf.is_full()


def rs_ebu_update(buf: ExperienceBuffer, domain: DomainDataset, rng: np.random.Generator) -> ExperienceBuffer:
    buf.update(domain, rng)
    return buf


def stored_domains(buf: ExperienceBuffer) -> tuple[BufferEntry, ...]:
    return buf.stored_domains()
