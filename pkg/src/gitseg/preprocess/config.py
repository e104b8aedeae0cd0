"""Augmentation parameters and their flat ``key = value`` config format.

Keys are exactly the :class:`AugmentationSpec` field names. Ranges are
written as two comma-separated numbers, e.g. ``contrast_range = 0.9, 1.1``.
Lines starting with ``#`` or ``;`` are comments.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from ..errors import GitSegError

_SECTION = "augmentation"


class ConfigError(GitSegError):
    pass


@dataclass(frozen=True)
class AugmentationSpec:
    target_width: int = 320
    target_height: int = 384
    hflip_prob: float = 0.5
    rotate_max_deg: float = 15.0
    elastic_alpha: float = 50.0
    elastic_sigma: float = 7.0
    elastic_prob: float = 0.3
    dropout_holes: int = 5
    dropout_hole_w: tuple[int, int] = (8, 32)
    dropout_hole_h: tuple[int, int] = (8, 32)
    dropout_prob: float = 0.3
    dropout_masks: bool = False
    brightness_delta: float = 0.1
    contrast_range: tuple[float, float] = (0.9, 1.1)
    seed: int = 0

    def __post_init__(self):
        if self.target_width < 1 or self.target_height < 1:
            raise ConfigError("target dimensions must be >= 1")
        for name in ("hflip_prob", "elastic_prob", "dropout_prob", "brightness_delta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.rotate_max_deg < 0 or self.elastic_alpha < 0:
            raise ConfigError("rotate_max_deg and elastic_alpha must be >= 0")
        if not self.elastic_sigma > 0:
            raise ConfigError("elastic_sigma must be > 0")
        if self.dropout_holes < 0:
            raise ConfigError("dropout_holes must be >= 0")
        for name in ("dropout_hole_w", "dropout_hole_h"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise ConfigError(f"{name} must satisfy 1 <= lo <= hi, got {(lo, hi)}")
        lo, hi = self.contrast_range
        if not 0 < lo <= hi:
            raise ConfigError(f"contrast_range must satisfy 0 < lo <= hi, got {(lo, hi)}")
        if not -(2**63) <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")

    @classmethod
    def resize_only(cls, **overrides) -> "AugmentationSpec":
        """A spec whose only effect is resizing to the target dimensions."""
        params = dict(
            hflip_prob=0.0,
            rotate_max_deg=0.0,
            elastic_prob=0.0,
            dropout_prob=0.0,
            brightness_delta=0.0,
            contrast_range=(1.0, 1.0),
        )
        params.update(overrides)
        return cls(**params)

    def replace(self, **changes) -> "AugmentationSpec":
        return dataclasses.replace(self, **changes)


def _convert(field_type, raw: str, key: str):
    raw = raw.strip()
    try:
        if field_type in ("int", int):
            return int(raw)
        if field_type in ("float", float):
            return float(raw)
        if field_type in ("bool", bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        elem = int if "int" in str(field_type) else float
        parts = [p for p in raw.replace(",", " ").split()]
        if len(parts) != 2:
            raise ValueError(raw)
        return (elem(parts[0]), elem(parts[1]))
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse_spec(text: str, base: AugmentationSpec | None = None) -> AugmentationSpec:
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#", ";"), delimiters=("=", ":")
    )
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n{text}")
    except configparser.Error as exc:
        raise ConfigError(f"unreadable augmentation config: {exc}") from None
    types = {f.name: f.type for f in fields(AugmentationSpec)}
    values = {}
    for key, raw in parser[_SECTION].items():
        if key not in types:
            raise ConfigError(f"unknown augmentation key {key!r}")
        values[key] = _convert(types[key], raw, key)
    return dataclasses.replace(base or AugmentationSpec(), **values)


def load_spec(path, base: AugmentationSpec | None = None) -> AugmentationSpec:
    return parse_spec(Path(path).read_text(encoding="utf-8"), base)


def format_spec(spec: AugmentationSpec) -> str:
    lines = []
    for f in fields(spec):
        v = getattr(spec, f.name)
        if isinstance(v, tuple):
            v = f"{v[0]}, {v[1]}"
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def save_spec(spec: AugmentationSpec, path) -> None:
    Path(path).write_text(format_spec(spec), encoding="utf-8")
