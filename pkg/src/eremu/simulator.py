"""Synthetic cyclic domain streams.

Each phase is a constellation of per-class Gaussian clusters. Day and night
analogs share one constellation, with night translated by a fixed offset
vector; a small drift vector separates the two variants of each (``day1`` vs
``day2``). A phase schedule repeats the phases for a number of cycles, and
every occurrence becomes a fresh target domain. Labels come from the
generating class, standing in for a perfect cloud labeler.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .buffer import DomainDataset
from .errors import ContractViolation
from .kernels import MultiKernel, as_features, mk_mmd


@dataclass(frozen=True, eq=False)
class PhaseSpec:
    phase_id: str
    class_means: np.ndarray
    class_spread: float = 1.0
    samples_per_domain: int = 400

    def __post_init__(self):
        means = as_features(self.class_means, "class_means")
        if not self.class_spread > 0:
            raise ContractViolation(f"class_spread must be positive, got {self.class_spread}")
        if self.samples_per_domain < 1:
            raise ContractViolation("samples_per_domain must be >= 1")
        if len(np.unique(means, axis=0)) != means.shape[0]:
            raise ContractViolation(f"phase {self.phase_id!r}: class means must be pairwise distinct")
        means = means.copy()
        means.setflags(write=False)
        object.__setattr__(self, "class_means", means)

    @property
    def num_classes(self) -> int:
        return self.class_means.shape[0]

    @property
    def dim(self) -> int:
        return self.class_means.shape[1]


@dataclass(frozen=True)
class Schedule:
    entries: tuple[tuple[int, PhaseSpec], ...]
    cycles: int = 1

    def __post_init__(self):
        if not self.entries:
            raise ContractViolation("schedule must be non-empty")
        idx = [i for i, _ in self.entries]
        if idx != list(range(1, len(idx) + 1)):
            raise ContractViolation("arrival indices must run 1..n")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def phase_ids(self) -> list[str]:
        return [p.phase_id for _, p in self.entries]

    @property
    def phases(self) -> list[PhaseSpec]:
        """Distinct phases in first-appearance order."""
        seen: dict[str, PhaseSpec] = {}
        for _, p in self.entries:
            seen.setdefault(p.phase_id, p)
        return list(seen.values())


def build_repeat_schedule(phases: Sequence[PhaseSpec], cycles: int) -> Schedule:
    if cycles < 1:
        raise ContractViolation(f"cycles must be >= 1, got {cycles}")
    if not phases:
        raise ContractViolation("need at least one phase")
    seq = [p for _ in range(cycles) for p in phases]
    return Schedule(tuple((i + 1, p) for i, p in enumerate(seq)), cycles)


def balanced_labels(n: int, num_classes: int) -> np.ndarray:
    # n // C per class, the remainder goes round-robin from class 0
    return np.arange(n) % num_classes


def generate_domain(
    spec: PhaseSpec,
    arrival_index: int,
    rng: np.random.Generator,
    n: int | None = None,
    label_noise: float = 0.0,
    domain_id: str | None = None,
) -> DomainDataset:
    n = spec.samples_per_domain if n is None else n
    if n < 1:
        raise ContractViolation("need at least one sample")
    if not 0.0 <= label_noise < 1.0:
        raise ContractViolation(f"label_noise must lie in [0, 1), got {label_noise}")
    classes = rng.permutation(balanced_labels(n, spec.num_classes))
    noise = rng.standard_normal((n, spec.dim))
    features = spec.class_means[classes] + spec.class_spread * noise
    labels = classes
    if label_noise > 0 and spec.num_classes > 1:
        flip = rng.random(n) < label_noise
        shift = rng.integers(1, spec.num_classes, size=n)
        labels = np.where(flip, (classes + shift) % spec.num_classes, classes)
    if domain_id is None:
        domain_id = f"{spec.phase_id}#{arrival_index}"
    return DomainDataset(domain_id, arrival_index, features, labels)


def phase_distance_oracle(
    a: PhaseSpec,
    b: PhaseSpec,
    mk: MultiKernel,
    n: int,
    rng: np.random.Generator,
    rng_b: np.random.Generator | None = None,
) -> float:
    """MK-MMD between fresh ``n``-point draws from two phases.

    ``b`` is drawn from ``rng_b`` when given, otherwise from ``rng`` after ``a``.
    """
    if a.dim != b.dim:
        raise ContractViolation(f"phase dims differ: {a.dim} vs {b.dim}")
    xa = generate_domain(a, 0, rng, n=n)
    xb = generate_domain(b, 0, rng if rng_b is None else rng_b, n=n)
    return mk_mmd(xa.features, xb.features, mk)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _constellation(g: np.random.Generator, num_classes: int, dim: int, radius: float) -> np.ndarray:
    base = g.standard_normal((num_classes, dim))
    return radius * base / np.linalg.norm(base, axis=1, keepdims=True)


def _offset(g: np.random.Generator, base: np.ndarray, magnitude: float, alignment: float) -> np.ndarray:
    """Offset mixing a class-difference direction (weight ``alignment``) with a random one.

    The aligned part moves clusters along a discriminative direction, which is
    what makes a translated constellation conflict with a linear classifier
    fitted to the untranslated one.
    """
    i, j = g.choice(base.shape[0], size=2, replace=False)
    aligned = _unit(base[j] - base[i])
    free = _unit(g.standard_normal(base.shape[1]))
    return magnitude * _unit(alignment * aligned + free)


def day_night_phases(
    seed: int,
    dim: int = 16,
    num_classes: int = 4,
    radius: float = 4.0,
    night_offset: float = 8.0,
    alignment: float = 1.0,
    drift: float = 1.0,
    spread: float = 1.0,
    samples_per_domain: int = 400,
) -> list[PhaseSpec]:
    """``day1, day2, night1, night2`` with night = day translated by a fixed offset."""
    if num_classes < 2:
        raise ContractViolation("need at least 2 classes")
    g = np.random.default_rng(seed)
    day = _constellation(g, num_classes, dim, radius)
    night = day + _offset(g, day, night_offset, alignment)
    shift = drift * _unit(g.standard_normal(dim))
    return [
        PhaseSpec("day1", day, spread, samples_per_domain),
        PhaseSpec("day2", day + shift, spread, samples_per_domain),
        PhaseSpec("night1", night, spread, samples_per_domain),
        PhaseSpec("night2", night + shift, spread, samples_per_domain),
    ]


def diverse_phases(
    seed: int,
    num_phases: int = 8,
    dim: int = 16,
    num_classes: int = 4,
    radius: float = 4.0,
    max_offset: float = 8.0,
    alignment: float = 1.0,
    spread: float = 1.0,
    samples_per_domain: int = 400,
) -> list[PhaseSpec]:
    """``num_phases`` translates of one constellation with spread-out offset sizes."""
    g = np.random.default_rng(seed)
    base = _constellation(g, num_classes, dim, radius)
    sizes = np.linspace(max_offset / num_phases, max_offset, num_phases)
    sizes = g.permutation(sizes)
    return [
        PhaseSpec(f"p{k + 1}", base + _offset(g, base, float(s), alignment), spread, samples_per_domain)
        for k, s in enumerate(sizes)
    ]


def write_domains_csv(path, domains: Sequence[DomainDataset]) -> None:
    """One row per sample: ``f0..f{d-1}, label, domain_id``."""
    if not domains:
        raise ContractViolation("nothing to write")
    dim = domains[0].dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{k}" for k in range(dim)] + ["label", "domain_id"])
        for d in domains:
            if d.dim != dim:
                raise ContractViolation(f"domain {d.domain_id!r} has dim {d.dim}, expected {dim}")
            for row, label in zip(d.features, d.labels):
                w.writerow([repr(float(v)) for v in row] + [int(label), d.domain_id])


def read_domains_csv(path) -> list[DomainDataset]:
    """Inverse of :func:`write_domains_csv`; arrival indices follow first appearance."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ContractViolation(f"{path}: empty file") from None
        dim = len(header) - 2
        expected = [f"f{k}" for k in range(dim)] + ["label", "domain_id"]
        if dim < 1 or header != expected:
            raise ContractViolation(f"{path}: expected header f0..f{{d-1}},label,domain_id")
        rows: dict[str, tuple[list, list]] = {}
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != dim + 2:
                raise ContractViolation(f"{path}:{lineno}: expected {dim + 2} fields, got {len(rec)}")
            feats, labels = rows.setdefault(rec[-1], ([], []))
            feats.append([float(v) for v in rec[:dim]])
            labels.append(int(rec[dim]))
    return [
        DomainDataset(did, i + 1, np.array(f, dtype=np.float64), np.array(lab, dtype=np.int64))
        for i, (did, (f, lab)) in enumerate(rows.items())
    ]
