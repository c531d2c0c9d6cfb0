"""Synthetic ground-truth data.

Flow sequences for the 18 fundamental recurrence cases (motion type x
continuity x viewpoint), idealized 1-D signals drawn through cycle
annotations, additive noise and the halfway-acceleration transform.
"""
from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .annotation import VideoAnnotation
from .errors import BadAnnotation, InvalidParams
from .flowfield import FlowField, ForegroundMask, write_flo, write_mask_pgm
from .tfa import Signal

TEXTURE_CONTRAST = 0.5
RAMP_FRACTION = 0.1


class MotionType(enum.Enum):
    TRANSLATION = "translation"
    ROTATION = "rotation"
    EXPANSION = "expansion"


class Continuity(enum.Enum):
    CONSTANT = "constant"
    INTERMITTENT = "intermittent"
    OSCILLATING = "oscillating"


class View(enum.Enum):
    SIDE = "side"
    FRONTAL = "frontal"


@dataclass(frozen=True)
class MotionCase:
    motion_type: MotionType
    continuity: Continuity
    view: View

    @property
    def name(self) -> str:
        return f"{self.motion_type.value}/{self.continuity.value}/{self.view.value}"

    @property
    def slug(self) -> str:
        return self.name.replace("/", "_")

    @classmethod
    def parse(cls, text: str) -> MotionCase:
        parts = text.replace("_", "/").replace("-", "/").lower().split("/")
        try:
            motion, continuity, view = parts
            return cls(MotionType(motion), Continuity(continuity), View(view))
        except ValueError:
            valid = ", ".join(c.name for c in ALL_CASES)
            raise InvalidParams(f"invalid case {text!r}; valid cases: {valid}") from None


ALL_CASES = tuple(
    MotionCase(m, c, v) for m, c, v in itertools.product(MotionType, Continuity, View)
)


@dataclass(frozen=True)
class CaseParams:
    period_frames: int = 20
    n_frames: int = 200
    size: tuple[int, int] = (64, 64)
    amplitude: float = 1.0
    texture_period: float | None = None
    duty_cycle: float = 0.5
    seed: int = 0
    fps: float = 30.0
    drift: tuple[float, float] = (0.0, 0.0)
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.period_frames < 4:
            raise InvalidParams("period_frames must be >= 4")
        if self.n_frames < 4 * self.period_frames:
            raise InvalidParams("n_frames must be >= 4 * period_frames")
        if not self.amplitude > 0:
            raise InvalidParams("amplitude must be positive")
        if not 0 < self.duty_cycle <= 1:
            raise InvalidParams("duty_cycle must lie in (0, 1]")
        if self.texture_period is not None and not self.texture_period > 0:
            raise InvalidParams("texture_period must be positive")
        if min(self.size) < 13:
            raise InvalidParams("frame size must be at least 13x13")
        if not self.fps > 0 or self.noise_sigma < 0:
            raise InvalidParams("fps must be positive and noise_sigma non-negative")

    @property
    def spatial_period(self) -> float:
        """Texture period in pixels; defaults to one amplitude-length per frame."""
        if self.texture_period is not None:
            return self.texture_period
        return self.period_frames * self.amplitude


@dataclass(frozen=True)
class SyntheticSequence:
    frames: list
    truth_count: float
    case: MotionCase
    cycle_bounds: tuple[int, ...]
    params: CaseParams = field(default_factory=CaseParams)

    def annotation(self) -> VideoAnnotation:
        return VideoAnnotation(self.case.slug, self.params.fps, self.cycle_bounds)


def _pulse(phase: np.ndarray, duty: float) -> np.ndarray:
    """Raised-cosine edged square pulse of width ``duty`` on phase in [0, 1)."""
    ramp = RAMP_FRACTION * duty
    out = np.where(phase < duty, 1.0, 0.0)
    if ramp > 0:
        rise = phase < ramp
        fall = (phase >= duty - ramp) & (phase < duty)
        out = np.where(rise, 0.5 * (1 - np.cos(np.pi * phase / ramp)), out)
        out = np.where(fall, 0.5 * (1 - np.cos(np.pi * (duty - phase) / ramp)), out)
    return out


def temporal_amplitude(continuity: Continuity, params: CaseParams, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    T = params.period_frames
    if continuity is Continuity.OSCILLATING:
        return params.amplitude * np.sin(2 * np.pi * t / T)
    if continuity is Continuity.INTERMITTENT:
        return params.amplitude * _pulse(np.mod(t, T) / T, params.duty_cycle)
    return np.full_like(t, params.amplitude)


class _Geometry:
    def __init__(self, params: CaseParams):
        width, height = params.size
        yy, xx = np.mgrid[:height, :width].astype(float)
        self.X = xx - (width - 1) / 2
        self.Y = yy - (height - 1) / 2
        self.r = np.hypot(self.X, self.Y)
        self.theta = np.arctan2(self.Y, self.X)
        self.R = 0.3 * min(width, height)
        edge = max(3.0, 0.1 * min(width, height))
        self.taper = _soft_step(self.r, self.R, edge)
        self.band_taper = _soft_step(np.abs(self.Y), self.R, edge)
        self.disk = self.r <= self.R
        self.band = np.abs(self.Y) <= self.R


def _soft_step(d: np.ndarray, inner: float, width: float) -> np.ndarray:
    """1 up to ``inner``, raised-cosine fall to 0 over ``width``."""
    s = np.clip((d - inner) / width, 0.0, 1.0)
    return 0.5 * (1 + np.cos(np.pi * s))


def _spatial_pattern(case: MotionCase, g: _Geometry) -> tuple[np.ndarray, np.ndarray]:
    X, Y, R = g.X, g.Y, g.R
    zero = np.zeros_like(X)
    m, view = case.motion_type, case.view
    if m is MotionType.TRANSLATION and view is View.SIDE:
        if case.continuity is Continuity.CONSTANT:
            return g.band_taper, zero
        return g.taper, zero
    if m is MotionType.TRANSLATION:
        # motion along the optical axis: flow radiates from the vanishing point
        return X / R, Y / R
    if m is MotionType.ROTATION and view is View.SIDE:
        # rigid profile turning about an in-plane axis: halves move in opposite directions
        return Y / R * g.taper, zero
    if m is MotionType.ROTATION:
        return -Y / R * g.taper, X / R * g.taper
    if view is View.SIDE:
        return X / R * g.taper, zero
    return X / R * g.taper, Y / R * g.taper


def _texture(case: MotionCase, g: _Geometry, params: CaseParams, t: float) -> np.ndarray | float:
    if case.continuity is not Continuity.CONSTANT:
        return 1.0
    T = params.period_frames
    S = params.spatial_period
    # the texture runs along a direction in which the spatial pattern is
    # divergence-free for rotations and curl-free for expansions
    if case.view is View.FRONTAL:
        coord = g.r
    elif case.motion_type is MotionType.EXPANSION:
        coord = np.abs(g.X)
    elif case.motion_type is MotionType.ROTATION:
        coord = g.Y
    else:
        coord = g.X
    return 1 + TEXTURE_CONTRAST * np.cos(2 * np.pi * (coord / S - t / T))


def _mask(case: MotionCase, g: _Geometry) -> np.ndarray:
    if (
        case.motion_type is MotionType.TRANSLATION
        and case.view is View.SIDE
        and case.continuity is Continuity.CONSTANT
    ):
        return g.band
    return g.disk


def case_truth(params: CaseParams) -> tuple[float, tuple[int, ...]]:
    T, N = params.period_frames, params.n_frames
    bounds = tuple(range(0, N + 1, T))
    return N / T, bounds


def generate_case(case: MotionCase, params: CaseParams = CaseParams()) -> SyntheticSequence:
    """Flow frames and masks realising ``case`` with period ``params.period_frames``."""
    if not isinstance(case, MotionCase):
        raise InvalidParams(f"not a motion case: {case!r}")
    g = _Geometry(params)
    pu, pv = _spatial_pattern(case, g)
    mask = ForegroundMask(_mask(case, g))
    amps = temporal_amplitude(case.continuity, params, np.arange(params.n_frames))
    rng = np.random.default_rng(params.seed)
    drift_u, drift_v = params.drift
    frames = []
    for t, a in enumerate(amps):
        tex = _texture(case, g, params, t)
        u = a * tex * pu + drift_u
        v = a * tex * pv + drift_v
        if params.noise_sigma > 0:
            u = u + rng.normal(0.0, params.noise_sigma, u.shape)
            v = v + rng.normal(0.0, params.noise_sigma, v.shape)
        frames.append((FlowField(u, v), mask))
    truth, bounds = case_truth(params)
    return SyntheticSequence(frames, truth, case, bounds, params)


def stationary_corpus(n: int = 20, seed: int = 0, size: tuple[int, int] = (48, 48)) -> list[tuple[str, SyntheticSequence]]:
    """``n`` constant-period sequences cycling through the oscillating and intermittent cases."""
    rng = np.random.default_rng(seed)
    cases = [c for c in ALL_CASES if c.continuity is not Continuity.CONSTANT]
    out = []
    for i in range(n):
        period = int(rng.integers(12, 31))
        count = int(rng.integers(8, 17))
        params = CaseParams(period_frames=period, n_frames=period * count, size=size, seed=seed + i)
        case = cases[i % len(cases)]
        out.append((f"{i:03d}_{case.slug}", generate_case(case, params)))
    return out


def write_sequence(seq: SyntheticSequence, out_dir) -> Path:
    """Write numbered ``.flo`` frames, PGM masks and ``truth.json`` into ``out_dir``.

    The record's ``id`` is the directory name.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, (flow, mask) in enumerate(seq.frames):
        (out / f"frame_{i:05d}.flo").write_bytes(write_flo(flow))
        (out / f"mask_{i:05d}.pgm").write_bytes(write_mask_pgm(mask))
    params = asdict(seq.params)
    params["size"] = list(params["size"])
    params["drift"] = list(params["drift"])
    record = seq.annotation().to_dict()
    record.update(id=out.name, truth_count=seq.truth_count, case=seq.case.name, params=params)
    (out / "truth.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return out


def idealized_signal(annotation: VideoAnnotation) -> Signal:
    """Sinusoid whose every annotated cycle spans exactly one period."""
    bounds = np.asarray(annotation.cycle_bounds)
    if bounds.size < 2 or np.any(np.diff(bounds) <= 0):
        raise BadAnnotation("cycle bounds must hold at least 2 strictly increasing frames")
    t = np.arange(bounds[0], bounds[-1] + 1)
    k = np.clip(np.searchsorted(bounds, t, side="right") - 1, 0, bounds.size - 2)
    start, end = bounds[k], bounds[k + 1]
    phase = 2 * np.pi * (t - start) / (end - start) + 2 * np.pi * k
    return Signal(np.sin(phase), 1.0 / annotation.fps)


def add_noise(signal: Signal, sigma: float, seed=None) -> Signal:
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return signal
    rng = np.random.default_rng(seed)
    return Signal(signal.samples + rng.normal(0.0, sigma, len(signal)), signal.dt)


def accelerate_halfway(samples: Sequence):
    """Keep the first half, then every second sample from the midpoint on."""
    n = len(samples)
    if n < 2:
        raise ValueError("need at least 2 samples")
    m = n // 2
    if isinstance(samples, Signal):
        return Signal(accelerate_halfway(samples.samples), samples.dt)
    if isinstance(samples, np.ndarray):
        return np.concatenate((samples[:m], samples[m::2]))
    return list(samples[:m]) + list(samples[m::2])
