from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import BadAnnotation


@dataclass(frozen=True)
class VideoAnnotation:
    """Per-cycle temporal bounds of one video (cycle k spans [b_k, b_k+1))."""

    id: str
    fps: float
    cycle_bounds: tuple[int, ...]

    def __post_init__(self):
        bounds = tuple(int(b) for b in self.cycle_bounds)
        if len(bounds) < 2:
            raise BadAnnotation(f"{self.id}: need at least 2 cycle bounds")
        if any(b1 <= b0 for b0, b1 in zip(bounds, bounds[1:])):
            raise BadAnnotation(f"{self.id}: cycle bounds must be strictly increasing")
        if not self.fps > 0:
            raise BadAnnotation(f"{self.id}: fps must be positive")
        object.__setattr__(self, "cycle_bounds", bounds)

    @property
    def count(self) -> int:
        return len(self.cycle_bounds) - 1

    @property
    def cycle_lengths(self) -> list[int]:
        b = self.cycle_bounds
        return [b1 - b0 for b0, b1 in zip(b, b[1:])]

    @property
    def cycle_length_variation(self) -> float:
        """(longest - shortest cycle) / mean cycle length."""
        lengths = self.cycle_lengths
        return (max(lengths) - min(lengths)) / (sum(lengths) / len(lengths))

    def to_dict(self) -> dict:
        return {"id": self.id, "fps": self.fps, "cycle_bounds": list(self.cycle_bounds)}

    @classmethod
    def from_dict(cls, data: dict) -> VideoAnnotation:
        try:
            return cls(id=str(data["id"]), fps=data["fps"], cycle_bounds=tuple(data["cycle_bounds"]))
        except (KeyError, TypeError) as exc:
            raise BadAnnotation(f"malformed annotation record: {exc}") from exc


def format_annotation(annotation: VideoAnnotation) -> str:
    return json.dumps(annotation.to_dict(), sort_keys=True)


def parse_annotation(text: str) -> VideoAnnotation:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadAnnotation(f"invalid annotation JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise BadAnnotation("annotation JSON must be an object")
    return VideoAnnotation.from_dict(data)
