"""Run configuration: strict JSON with nested sections, validated before any work."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

from .cross_validation import SCHEMES
from .evaluation.compare import GROUPINGS

DATA_ROOT_ENV = "STREAMCAST_DATA_ROOT"


class ConfigError(ValueError):
    pass


@dataclass
class ModelSection:
    hindcast_length: int = 365
    hidden_size: int = 32
    batch_size: int = 16
    training_steps: int = 2000
    learning_rate: float = 1e-3
    lr_schedule: str = "cosine"
    clip_norm: float = 1.0
    statics_in_decoder: bool = True
    shared_head: bool = True
    validate_every: int = 1000
    n_members: int = 3
    forecast_sources: list = field(default_factory=lambda: ["hres"])


@dataclass
class SplitSection:
    scheme: str = "random"
    k: int | None = 10
    seed: int = 0
    n_time_folds: int = 2
    buffer_days: int = 365
    start: str | None = None
    end: str | None = None


@dataclass
class FrequencySection:
    return_periods: list = field(default_factory=lambda: [1, 2, 5, 10])
    min_years: int = 10
    min_coverage: float = 0.8
    start_month: int = 1
    threshold_lead: int = 0


@dataclass
class EvaluationSection:
    window_days: int = 2
    metric: str = "f1"
    grouping: list = field(default_factory=lambda: ["T", "lead"])
    start: str | None = None
    end: str | None = None


@dataclass
class SkillSection:
    n_estimators: int = 500
    k: int = 5
    similar_band: float = 0.05
    seed: int = 0


@dataclass
class RunConfig:
    data_root: str = "data"
    output_root: str = "out"
    area_tolerance: float = 0.2
    seed: int = 0
    model: ModelSection = field(default_factory=ModelSection)
    split: SplitSection = field(default_factory=SplitSection)
    frequency: FrequencySection = field(default_factory=FrequencySection)
    evaluation: EvaluationSection = field(default_factory=EvaluationSection)
    skill: SkillSection = field(default_factory=SkillSection)

    def to_dict(self):
        return asdict(self)

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self):
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    @property
    def data_path(self) -> Path:
        return Path(os.environ.get(DATA_ROOT_ENV) or self.data_root)

    @property
    def output_path(self) -> Path:
        return Path(self.output_root)


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    kwargs = {}
    for name, value in data.items():
        default = known[name].default_factory() if callable(known[name].default_factory) else known[name].default
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}")
        else:
            kwargs[name] = value
    return cls(**kwargs)


def validate(cfg: RunConfig) -> RunConfig:
    m, s, fr, ev, sk = cfg.model, cfg.split, cfg.frequency, cfg.evaluation, cfg.skill
    checks = [
        (0 < cfg.area_tolerance < 1, "area_tolerance must lie in (0, 1)"),
        (m.hindcast_length >= 1, "model.hindcast_length must be >= 1"),
        (m.hidden_size >= 1, "model.hidden_size must be >= 1"),
        (m.batch_size >= 1, "model.batch_size must be >= 1"),
        (m.training_steps >= 0, "model.training_steps must be >= 0"),
        (m.learning_rate >= 0, "model.learning_rate must be >= 0"),
        (m.lr_schedule in ("cosine", "constant"), "model.lr_schedule must be 'cosine' or 'constant'"),
        (m.n_members >= 1, "model.n_members must be >= 1"),
        (s.scheme in SCHEMES, f"split.scheme must be one of {SCHEMES}"),
        (s.n_time_folds >= 1, "split.n_time_folds must be >= 1"),
        (s.buffer_days >= 0, "split.buffer_days must be >= 0"),
        (all(float(T) >= 1 for T in fr.return_periods), "frequency.return_periods must be >= 1"),
        (fr.min_years >= 3, "frequency.min_years must be >= 3"),
        (0 < fr.min_coverage <= 1, "frequency.min_coverage must lie in (0, 1]"),
        (1 <= fr.start_month <= 12, "frequency.start_month must be a month number"),
        (ev.window_days >= 0, "evaluation.window_days must be >= 0"),
        (ev.metric in ("precision", "recall", "f1"), "evaluation.metric must be precision, recall or f1"),
        (all(g in GROUPINGS for g in ev.grouping), f"evaluation.grouping entries must be in {sorted(GROUPINGS)}"),
        (sk.n_estimators >= 1, "skill.n_estimators must be >= 1"),
        (sk.k >= 2, "skill.k must be >= 2"),
        (sk.similar_band >= 0, "skill.similar_band must be >= 0"),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)
    return cfg


def load_config(path=None, overrides=None) -> RunConfig:
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
    cfg = _build(RunConfig, data, "config")
    for dotted, value in (overrides or {}).items():
        target = cfg
        *parents, leaf = dotted.split(".")
        for p in parents:
            target = getattr(target, p)
        setattr(target, leaf, value)
    return validate(cfg)
