"""Run configuration, loaded from JSON with strict key checking."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError

REPLAY_MODES = ("er_emu", "random_selection", "no_replay", "literal_ascending")
SCHEDULE_KINDS = ("day_night", "diverse", "csv")


@dataclass
class KernelConfig:
    # multipliers applied to the median-heuristic (or fixed) base bandwidth
    scales: list[float] = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0])
    # None means uniform 1/m
    weights: list[float] | None = None
    bandwidth: float | None = None


@dataclass
class LearnerConfig:
    step_size: float = 0.002
    steps_per_round: int = 50
    init_scale: float = 0.01


@dataclass
class ScheduleConfig:
    kind: str = "day_night"
    cycles: int = 2
    dim: int = 16
    num_classes: int = 4
    samples_per_domain: int = 400
    eval_samples: int = 1000
    spread: float = 1.0
    radius: float = 4.0
    # day/night: offset between constellations; diverse: largest offset
    offset: float = 10.0
    alignment: float = 1.0
    drift: float = 1.0
    num_phases: int = 8
    label_noise: float = 0.0
    # None derives the phase geometry from the master seed
    geometry_seed: int | None = None
    csv_path: str | None = None
    # csv schedules: fraction of each domain held out for evaluation
    eval_fraction: float = 0.3


@dataclass
class RunConfig:
    buffer_capacity: int = 8
    per_domain: int = 100
    l: int = 3
    kernel: KernelConfig = field(default_factory=KernelConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    replay_mode: str = "er_emu"
    # weighting used by random_selection: "unit" (weight 1) or "sigmoid"
    random_weighting: str = "unit"
    seed: int = 0
    output: str | None = None

    def validate(self) -> "RunConfig":
        try:
            self._validate()
        except TypeError as exc:
            raise ConfigError(f"config value has the wrong type: {exc}") from None
        return self

    def _validate(self) -> None:
        def positive_int(name, v):
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")

        positive_int("buffer_capacity", self.buffer_capacity)
        positive_int("per_domain", self.per_domain)
        positive_int("l", self.l)
        if self.replay_mode not in REPLAY_MODES:
            raise ConfigError(f"replay_mode must be one of {REPLAY_MODES}, got {self.replay_mode!r}")
        if self.random_weighting not in ("unit", "sigmoid"):
            raise ConfigError(f"random_weighting must be 'unit' or 'sigmoid', got {self.random_weighting!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")

        k = self.kernel
        if not k.scales or any(not s > 0 for s in k.scales):
            raise ConfigError("kernel.scales must be a non-empty list of positive numbers")
        if k.weights is not None and len(k.weights) != len(k.scales):
            raise ConfigError("kernel.weights must match kernel.scales in length")
        if k.bandwidth is not None and not k.bandwidth > 0:
            raise ConfigError("kernel.bandwidth must be positive")

        lc = self.learner
        if not lc.step_size > 0:
            raise ConfigError("learner.step_size must be positive")
        positive_int("learner.steps_per_round", lc.steps_per_round)
        if lc.init_scale < 0:
            raise ConfigError("learner.init_scale must be non-negative")

        s = self.schedule
        if s.kind not in SCHEDULE_KINDS:
            raise ConfigError(f"schedule.kind must be one of {SCHEDULE_KINDS}, got {s.kind!r}")
        positive_int("schedule.cycles", s.cycles)
        if s.kind == "csv":
            if not s.csv_path:
                raise ConfigError("schedule.csv_path is required for csv schedules")
            if not 0 < s.eval_fraction < 1:
                raise ConfigError("schedule.eval_fraction must lie in (0, 1)")
        else:
            for name in ("dim", "samples_per_domain", "eval_samples", "num_phases"):
                positive_int(f"schedule.{name}", getattr(s, name))
            if s.num_classes < 2:
                raise ConfigError("schedule.num_classes must be >= 2")
            if not s.spread > 0:
                raise ConfigError("schedule.spread must be positive")
        if not 0 <= s.label_noise < 1:
            raise ConfigError("schedule.label_noise must lie in [0, 1)")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        return _build(cls, data, "").validate()

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data)


_NESTED = {"kernel": KernelConfig, "learner": LearnerConfig, "schedule": ScheduleConfig}


def _build(cls, data: dict[str, Any], prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix.rstrip('.') or 'config'} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(prefix + k for k in unknown)}")
    kwargs = {}
    for key, value in data.items():
        if cls is RunConfig and key in _NESTED:
            value = _build(_NESTED[key], value, f"{key}.")
        kwargs[key] = value
    return cls(**kwargs)
