"""Flat key-value run configuration shared by the trainer and the CLI.

The file format is one ``key = value`` pair per line; blank lines and
lines starting with ``#`` are ignored.  Keys are exactly the schedule
field names plus the model dimensions, the retrieval feature choice, and
the dataset path; anything else is rejected by name.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ValidationError
from .network import FEATURE_KINDS
from .trainer import RriSchedule

_SCHEDULE_INT_KEYS = ("step0_epochs", "restraint_epochs", "relaxation_epochs", "max_rri", "batch_size", "seed")
_SCHEDULE_FLOAT_KEYS = ("lr_step0", "lr_restraint", "lr_relaxation", "epsilon_s")


@dataclass
class RunConfig:
    schedule: RriSchedule = field(default_factory=RriSchedule)
    hidden_dims: tuple[int, ...] = (128, 128)
    eigen_dim: int = 64
    feature: str = "input"
    dataset: str | None = None

    def validate(self) -> "RunConfig":
        self.schedule.validate()
        if self.eigen_dim < 1 or any(d < 1 for d in self.hidden_dims):
            raise ValidationError("hidden_dims and eigen_dim must all be >= 1")
        if self.feature not in FEATURE_KINDS:
            raise ValidationError(f"config key 'feature': expected one of {FEATURE_KINDS}, got {self.feature!r}")
        return self

    def to_dict(self) -> dict:
        out = {f.name: getattr(self.schedule, f.name) for f in fields(RriSchedule)}
        out["hidden_dims"] = list(self.hidden_dims)
        out["eigen_dim"] = self.eigen_dim
        out["feature"] = self.feature
        out["dataset"] = self.dataset
        return out


CONFIG_KEYS = tuple(_SCHEDULE_INT_KEYS) + tuple(_SCHEDULE_FLOAT_KEYS) + ("hidden_dims", "eigen_dim", "feature", "dataset")


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValidationError(f"config key {key!r}: expected an integer, got {value!r}") from None


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ValidationError(f"config key {key!r}: expected a number, got {value!r}") from None


def _parse_dims(key: str, value: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(part.strip()) for part in value.split(",") if part.strip())
    except ValueError:
        raise ValidationError(f"config key {key!r}: expected comma-separated integers, got {value!r}") from None
    if not dims:
        raise ValidationError(f"config key {key!r}: expected at least one dimension")
    return dims


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse config text into a RunConfig; unknown keys and malformed
    values raise ValidationError naming the key."""
    schedule_kwargs: dict = {}
    other: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _SCHEDULE_INT_KEYS:
            schedule_kwargs[key] = _parse_int(key, value)
        elif key in _SCHEDULE_FLOAT_KEYS:
            schedule_kwargs[key] = _parse_float(key, value)
        elif key == "hidden_dims":
            other[key] = _parse_dims(key, value)
        elif key == "eigen_dim":
            other[key] = _parse_int(key, value)
        elif key == "feature":
            other[key] = value
        elif key == "dataset":
            other[key] = value
        else:
            raise ValidationError(f"{source}:{lineno}: unknown config key {key!r}")
    cfg = RunConfig(schedule=RriSchedule(**schedule_kwargs), **other)
    return cfg.validate()


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(), source=str(path))


def override_config(cfg: RunConfig, **overrides) -> RunConfig:
    """Apply non-None overrides keyed by config key name (flag > file)."""
    schedule_kwargs = {}
    top = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key in _SCHEDULE_INT_KEYS or key in _SCHEDULE_FLOAT_KEYS:
            schedule_kwargs[key] = value
        elif key in ("hidden_dims", "eigen_dim", "feature", "dataset"):
            top[key] = value
        else:
            raise ValidationError(f"unknown config key {key!r}")
    if schedule_kwargs:
        top["schedule"] = replace(cfg.schedule, **schedule_kwargs)
    cfg = replace(cfg, **top) if top else cfg
    return cfg.validate()
