from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError


@dataclass(frozen=True)
class RunConfig:
    """Pipeline parameters shared by the library and the CLI.

    Defaults are the published implementation constants: Morlet omega0 = 6,
    dj = 0.125, s0 = 2 dt, a 7-step mean filter, 13x13 Gaussian derivative
    filters and a minimum of four repetitions.
    """

    omega0: float = 6.0
    dj: float = 0.125
    s0_factor: float = 2.0
    mean_window: int = 7
    kernel_size: int = 13
    kernel_sigma: float = 2.0
    min_reps: float = 4.0
    fourier_factor_conversion: bool = True
    path_mode: str = "dp"
    coi_exclude: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.path_mode not in ("dp", "greedy"):
            raise ConfigError(f"path_mode must be 'dp' or 'greedy', got {self.path_mode!r}")
        if self.mean_window < 1 or self.mean_window % 2 == 0:
            raise ConfigError("mean_window must be a positive odd integer")
        if self.kernel_size < 3 or self.kernel_size % 2 == 0:
            raise ConfigError("kernel_size must be an odd integer >= 3")
        if self.kernel_sigma <= 0 or self.dj <= 0 or self.s0_factor <= 0 or self.omega0 <= 0:
            raise ConfigError("kernel_sigma, dj, s0_factor and omega0 must be positive")
        if self.min_reps <= 0:
            raise ConfigError("min_reps must be positive")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any], base: RunConfig | None = None) -> RunConfig:
        """Override fields of ``base`` (or the defaults); unknown keys are an error."""
        base = base or cls()
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        updates = {}
        for key, value in values.items():
            default = getattr(base, key)
            if isinstance(default, bool):
                if not isinstance(value, bool):
                    raise ConfigError(f"{key} must be a boolean")
            elif isinstance(default, int):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"{key} must be an integer")
            elif isinstance(default, float):
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"{key} must be a number")
                value = float(value)
            elif not isinstance(value, type(default)):
                raise ConfigError(f"{key} must be of type {type(default).__name__}")
            updates[key] = value
        return dataclasses.replace(base, **updates)

    @classmethod
    def from_file(cls, path: str | os.PathLike, base: RunConfig | None = None) -> RunConfig:
        try:
            values = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(values, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_mapping(values, base)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def worker_count() -> int:
    """Worker cap from REPCOUNT_THREADS (0 or unset means one per CPU)."""
    raw = os.environ.get("REPCOUNT_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"REPCOUNT_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("REPCOUNT_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)
