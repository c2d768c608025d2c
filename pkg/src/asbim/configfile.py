"""Flat ``key = value`` config files with ``#`` comments.

Values are coerced to the type of the matching dataclass field. Tuples are
written comma separated (``t1_dist = 0.69, 0.28``).
"""

from __future__ import annotations

import dataclasses
import typing
from pathlib import Path

from .errors import ConfigurationError


def read_config(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{path}:{lineno}: empty key")
        if key in out:
            raise ConfigurationError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _coerce(value: str, default, key: str):
    try:
        if isinstance(default, bool):
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            return tuple(float(v) for v in value.split(","))
    except ValueError as exc:
        raise ConfigurationError(f"config key {key!r}: cannot parse {value!r}") from exc
    return value


def coerce_fields(cls, values: dict[str, str], ignore_unknown: bool = False) -> dict:
    """Map string values onto the fields of dataclass ``cls``."""
    defaults = {f.name: f.default for f in dataclasses.fields(cls)}
    out = {}
    for key, value in values.items():
        if key not in defaults:
            if ignore_unknown:
                continue
            raise ConfigurationError(f"unknown config key {key!r} for {cls.__name__}; "
                                     f"known: {', '.join(sorted(defaults))}")
        out[key] = _coerce(value, defaults[key], key)
    return out


def dump_config(values: dict) -> str:
    lines = []
    for key in sorted(values):
        v = values[key]
        if isinstance(v, (tuple, list)):
            v = ", ".join(repr(float(x)) if isinstance(x, (int, float)) else str(x) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"
