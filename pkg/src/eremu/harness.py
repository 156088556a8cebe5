"""The adaptive-replay update loop, its ablations and the l-sweep.

Each round of :func:`run` processes one target domain in a fixed order:

1. select replay domains from the buffer (before the new domain is inserted,
   so a domain can never select itself),
2. train on the current domain plus the weighted replay losses,
3. insert a random subset of the domain into the FIFO buffer,
4. evaluate on held-out samples of every phase seen so far.

All randomness derives from the master seed through named streams, so the
replay modes see identical data and buffer contents sample for sample.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import learner as lrn
from .buffer import DomainDataset, ExperienceBuffer
from .config import RunConfig
from .errors import ConfigError, RunError
from .kernels import MultiKernel, median_heuristic_bandwidth
from .selection import EMPTY, SelectionResult, ddm_es, random_selection
from .simulator import (
    PhaseSpec,
    build_repeat_schedule,
    day_night_phases,
    diverse_phases,
    generate_domain,
    read_domains_csv,
)

# stream ids for np.random.default_rng([seed, stream, ...])
_GEOMETRY, _DOMAIN, _EVAL, _BUFFER, _INIT, _RANDOM_SELECT, _SPLIT = range(7)


def _rng(seed: int, stream: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream, *extra])


@dataclass
class RoundRow:
    arrival_index: int
    phase_id: str
    domain_id: str
    accuracy_after_adaptation: float
    mean_accuracy_over_all_seen_phases: float
    phase_accuracy: dict[str, float]
    selected: list[str]
    weights: list[float]
    # None for randomly chosen domains (no distance computed)
    distances: list[float | None]
    replay_loss: float
    params_sha256: str


@dataclass
class MetricsReport:
    mode: str
    seed: int
    rows: list[RoundRow]
    revisit_gain: dict[str, float]
    overall_mean: float
    current_mean: float
    config: dict = field(default_factory=dict)

    @property
    def schedule(self) -> list[str]:
        return [r.phase_id for r in self.rows]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        data = dict(data)
        data["rows"] = [RoundRow(**r) for r in data["rows"]]
        return cls(**data)


@dataclass
class AblationReport:
    er_emu: MetricsReport
    random_selection: MetricsReport

    @property
    def difference(self) -> float:
        return self.er_emu.overall_mean - self.random_selection.overall_mean

    @property
    def reports(self) -> list[MetricsReport]:
        return [self.er_emu, self.random_selection]


@dataclass
class _Stream:
    """Training domains in schedule order plus one held-out set per phase."""

    train: list[tuple[str, DomainDataset]]
    eval_sets: dict[str, DomainDataset]
    num_classes: int
    dim: int


def build_phases(config: RunConfig) -> list[PhaseSpec]:
    s = config.schedule
    geo_seed = s.geometry_seed
    if geo_seed is None:
        geo_seed = int(_rng(config.seed, _GEOMETRY).integers(2**63))
    common = dict(
        dim=s.dim,
        num_classes=s.num_classes,
        radius=s.radius,
        alignment=s.alignment,
        spread=s.spread,
        samples_per_domain=s.samples_per_domain,
    )
    if s.kind == "day_night":
        return day_night_phases(geo_seed, night_offset=s.offset, drift=s.drift, **common)
    if s.kind == "diverse":
        return diverse_phases(geo_seed, num_phases=s.num_phases, max_offset=s.offset, **common)
    raise ConfigError(f"schedule kind {s.kind!r} has no synthetic phases")


def _synthetic_stream(config: RunConfig) -> _Stream:
    s = config.schedule
    phases = build_phases(config)
    schedule = build_repeat_schedule(phases, s.cycles)
    train = [
        (
            phase.phase_id,
            generate_domain(phase, i, _rng(config.seed, _DOMAIN, i), label_noise=s.label_noise),
        )
        for i, phase in schedule
    ]
    eval_sets = {
        p.phase_id: generate_domain(p, 0, _rng(config.seed, _EVAL, k), n=s.eval_samples)
        for k, p in enumerate(phases)
    }
    return _Stream(train, eval_sets, s.num_classes, s.dim)


def _csv_stream(config: RunConfig) -> _Stream:
    s = config.schedule
    try:
        domains = read_domains_csv(s.csv_path)
    except OSError as exc:
        raise ConfigError(f"cannot read {s.csv_path}: {exc.strerror}") from exc
    if not domains:
        raise ConfigError(f"{s.csv_path}: no samples")
    train_parts, eval_sets = [], {}
    for k, d in enumerate(domains):
        n = len(d)
        n_eval = int(round(n * s.eval_fraction))
        if n_eval < 1 or n - n_eval < 1:
            raise ConfigError(f"domain {d.domain_id!r} has too few samples ({n}) to split")
        perm = _rng(config.seed, _SPLIT, k).permutation(n)
        eval_sets[d.domain_id] = d.subset(np.sort(perm[:n_eval]))
        train_parts.append(d.subset(np.sort(perm[n_eval:])))
    train = []
    for i, part in enumerate([p for _ in range(s.cycles) for p in train_parts], start=1):
        train.append((part.domain_id, DomainDataset(f"{part.domain_id}#{i}", i, part.features, part.labels)))
    labels = np.concatenate([d.labels for d in domains])
    return _Stream(train, eval_sets, int(labels.max()) + 1, domains[0].dim)


def build_stream(config: RunConfig) -> _Stream:
    return _csv_stream(config) if config.schedule.kind == "csv" else _synthetic_stream(config)


def round_multikernel(config: RunConfig, current: DomainDataset, buf: ExperienceBuffer) -> MultiKernel:
    """Gaussian kernel family for one round.

    The base bandwidth is shared by every buffered domain in the round so their
    distances are comparable: the median heuristic over the current domain
    pooled with all buffered samples (unless fixed in the config).
    """
    k = config.kernel
    base = k.bandwidth
    if base is None:
        stored = [e.samples.features for e in buf.stored_domains()]
        pooled = np.vstack(stored) if stored else current.features[:0]
        base = median_heuristic_bandwidth(current.features, pooled)
    return MultiKernel.gaussian([s * base for s in k.scales], k.weights or ())


def _select(config: RunConfig, buf, current, select_rng) -> SelectionResult:
    mode = config.replay_mode
    if mode == "no_replay" or buf.is_empty():
        return EMPTY
    if mode == "random_selection":
        if config.random_weighting == "unit":
            return random_selection(buf, config.l, select_rng)
        mk = round_multikernel(config, current, buf)
        return random_selection(buf, config.l, select_rng, "sigmoid", current, mk)
    mk = round_multikernel(config, current, buf)
    return ddm_es(buf, current, config.l, mk, ascending=(mode == "literal_ascending"))


def _digest(state: lrn.LearnerState) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(state.weights).tobytes())
    h.update(np.ascontiguousarray(state.bias).tobytes())
    return h.hexdigest()


def _finite_or_none(values) -> list[float | None]:
    return [None if math.isnan(v) else float(v) for v in values]


def _config_echo(config: RunConfig) -> dict:
    # the output location is not part of the experiment, so reruns into
    # different directories produce identical reports
    echo = config.to_dict()
    echo.pop("output", None)
    return echo


def revisit_gains(rows: Sequence[RoundRow]) -> dict[str, float]:
    """Second-visit minus first-visit accuracy for each phase seen at least twice."""
    visits: dict[str, list[float]] = {}
    for r in rows:
        visits.setdefault(r.phase_id, []).append(r.accuracy_after_adaptation)
    return {p: v[1] - v[0] for p, v in visits.items() if len(v) >= 2}


def run(config: RunConfig, stream: _Stream | None = None, keep_state: bool = False):
    """Execute the schedule once in ``config.replay_mode``.

    Returns a :class:`MetricsReport` (and the final learner state when
    ``keep_state`` is set).
    """
    config.validate()
    stream = build_stream(config) if stream is None else stream
    lc = config.learner
    state = lrn.LearnerState(
        _rng(config.seed, _INIT).standard_normal((stream.num_classes, stream.dim)) * lc.init_scale,
        np.zeros(stream.num_classes),
        lc.step_size,
        config.seed,
    )
    buf = ExperienceBuffer(config.buffer_capacity, config.per_domain)
    buffer_rng = _rng(config.seed, _BUFFER)
    select_rng = _rng(config.seed, _RANDOM_SELECT)
    seen: list[str] = []
    rows: list[RoundRow] = []
    for phase_id, current in stream.train:
        i = current.arrival_index
        try:
            selection = _select(config, buf, current, select_rng)
            batches = selection.as_batches()
            state = lrn.train_round(state, current, batches, lc.steps_per_round)
            final_loss = lrn.replay_loss(state, current, batches)
            buf.update(current, buffer_rng)
            if phase_id not in seen:
                seen.append(phase_id)
            acc = {p: lrn.evaluate(state, stream.eval_sets[p]) for p in seen}
        except Exception as exc:
            raise RunError(f"round {i} ({phase_id}): {type(exc).__name__}: {exc}") from exc
        rows.append(
            RoundRow(
                arrival_index=i,
                phase_id=phase_id,
                domain_id=current.domain_id,
                accuracy_after_adaptation=acc[phase_id],
                mean_accuracy_over_all_seen_phases=float(np.mean(list(acc.values()))),
                phase_accuracy=acc,
                selected=list(selection.domain_ids),
                weights=[float(w) for w in selection.weights],
                distances=_finite_or_none(selection.distances),
                replay_loss=float(final_loss),
                params_sha256=_digest(state),
            )
        )
    report = MetricsReport(
        mode=config.replay_mode,
        seed=config.seed,
        rows=rows,
        revisit_gain=revisit_gains(rows),
        overall_mean=float(np.mean([r.mean_accuracy_over_all_seen_phases for r in rows])),
        current_mean=float(np.mean([r.accuracy_after_adaptation for r in rows])),
        config=_config_echo(config),
    )
    return (report, state) if keep_state else report


def with_overrides(config: RunConfig, **changes) -> RunConfig:
    new = copy.deepcopy(config)
    for key, value in changes.items():
        setattr(new, key, value)
    return new.validate()


def run_ablation(config: RunConfig) -> AblationReport:
    """Distance-ranked selection vs random selection on identical data."""
    stream = build_stream(config)
    return AblationReport(
        er_emu=run(with_overrides(config, replay_mode="er_emu"), stream),
        random_selection=run(with_overrides(config, replay_mode="random_selection"), stream),
    )


def sweep_l(config: RunConfig, l_values: Sequence[int]) -> list[MetricsReport]:
    if not l_values:
        raise ConfigError("l_values must be non-empty")
    for v in l_values:
        if isinstance(v, bool) or int(v) != v or v < 1:
            raise ConfigError(f"every l must be a positive integer, got {v!r}")
    stream = build_stream(config)
    return [run(with_overrides(config, l=int(v)), stream) for v in l_values]


# ---------------------------------------------------------------------------
# output


def table_rows(reports: Sequence[MetricsReport], label=lambda r: r.mode) -> tuple[list[str], list[list]]:
    """Table-shaped view: one row per report, one column per schedule entry, then Mean."""
    header = ["method"] + list(reports[0].schedule) + ["Mean"]
    body = []
    for r in reports:
        accs = [row.accuracy_after_adaptation for row in r.rows]
        body.append([label(r)] + accs + [float(np.mean(accs))])
    return header, body


def _metrics_payload(reports: Sequence[MetricsReport]) -> dict:
    if len(reports) == 1:
        return reports[0].to_dict()
    return {"reports": [r.to_dict() for r in reports]}


def write_metrics(reports, out_dir, label=lambda r: r.mode, extra: dict | None = None) -> tuple[Path, Path]:
    """Write ``metrics.json`` and ``table.csv`` into ``out_dir``."""
    if isinstance(reports, MetricsReport):
        reports = [reports]
    elif isinstance(reports, AblationReport):
        reports = reports.reports
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to write")
    out = Path(out_dir)
    payload = _metrics_payload(reports)
    if extra:
        payload = {**payload, **extra}
    try:
        out.mkdir(parents=True, exist_ok=True)
        metrics_path = out / "metrics.json"
        metrics_path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")
        table_path = out / "table.csv"
        header, body = table_rows(reports, label)
        with open(table_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in body:
                w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write metrics: {exc.strerror}", str(exc.filename or out)) from exc
    return metrics_path, table_path


def read_metrics(path) -> MetricsReport | list[MetricsReport]:
    data = json.loads(Path(path).read_text())
    if "reports" in data:
        return [MetricsReport.from_dict(r) for r in data["reports"]]
    return MetricsReport.from_dict(data)
