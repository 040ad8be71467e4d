"""Run configuration: hyperparameters, defaults and the flat ``key = value``
config file format."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

VARIANTS = ("full", "lp-only", "gnn-only")
DELTA_MODES = ("fixed", "median-heuristic")


class ConfigError(ValueError):
    """Unknown key, unparsable value or violated constraint."""


@dataclass(frozen=True)
class Hyperparams:
    alpha: float = 0.1
    mu: float = 10.0
    delta: float = 0.1
    lambda0: float = 0.1
    lambda_growth: float = 1.25
    # None means 0.9 * ln(K), resolved once K is known
    lambda_cap: float | None = None
    r: float = 0.5
    s_neg: int = 10
    B: int = 512
    T1: int = 200
    T2: int = 50
    lr_enc: float = 10.0
    lr_lp: float = 0.05
    d: int = 64
    hidden_dim: int = 128
    neighbor_sample_size: int = 10
    max_outer_iters: int = 50
    patience: int = 5
    seed: int = 0
    variant: str = "full"
    delta_mode: str = "fixed"
    normalize_attrs: bool = False

    def __post_init__(self) -> None:
        for name in ("alpha", "mu", "delta", "lambda0", "lr_enc", "lr_lp"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be > 0, got {value}")
        if not 0.0 <= self.r <= 1.0:
            raise ConfigError(f"r must lie in [0, 1], got {self.r}")
        for name in ("s_neg", "B", "T1", "T2", "d", "hidden_dim", "neighbor_sample_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("max_outer_iters", "patience"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.lambda_growth < 1.0:
            raise ConfigError(f"lambda_growth must be >= 1, got {self.lambda_growth}")
        if self.lambda_cap is not None and self.lambda_cap < 0:
            raise ConfigError(f"lambda_cap must be >= 0, got {self.lambda_cap}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.delta_mode not in DELTA_MODES:
            raise ConfigError(f"delta_mode must be one of {DELTA_MODES}, got {self.delta_mode!r}")

    def resolved_lambda_cap(self, num_classes: int) -> float:
        if self.lambda_cap is not None:
            return self.lambda_cap
        return 0.9 * math.log(num_classes)

    def replace(self, **changes: Any) -> "Hyperparams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _field_types() -> dict[str, str]:
    # annotations are strings under postponed evaluation
    return {f.name: str(f.type) for f in fields(Hyperparams)}


def coerce(key: str, raw: str) -> Any:
    """Convert a raw string to the type of field ``key``."""
    types = _field_types()
    if key not in types:
        raise ConfigError(f"unknown key {key!r}; valid keys: {', '.join(sorted(types))}")
    kind = types[key]
    text = raw.strip()
    try:
        if kind == "float | None":
            return None if text.lower() in ("", "none", "auto") else float(text)
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "bool":
            return _parse_bool(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None


def parse_config(text: str) -> Hyperparams:
    overrides: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        # "r = 0.5, s_neg = 10" style lines carry several assignments
        for chunk in stripped.split(","):
            if not chunk.strip():
                continue
            if "=" not in chunk:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {chunk.strip()!r}")
            key, value = chunk.split("=", 1)
            overrides[key.strip()] = coerce(key.strip(), value)
    return Hyperparams(**overrides)


def load_config(path: str | Path | None) -> Hyperparams:
    if path is None:
        return Hyperparams()
    return parse_config(Path(path).read_text())


def dump_config(hp: Hyperparams) -> str:
    lines = []
    for key, value in hp.to_dict().items():
        lines.append(f"{key} = {'auto' if value is None else value}")
    return "\n".join(lines) + "\n"
