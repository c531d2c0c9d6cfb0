"""Dense flow fields, their differentials, and pooled per-frame signals.

Arrays are stored row-major as ``(height, width)``; ``x`` runs along columns
and ``y`` along rows.
"""
from __future__ import annotations

import math
import re
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.ndimage import convolve1d

from .config import worker_count
from .errors import (
    BadMagic,
    DimensionMismatch,
    EmptyMask,
    EmptySequence,
    FieldTooSmall,
    InvalidKernelSpec,
    MaskFormatError,
    NonFinite,
    Truncated,
)

FLO_MAGIC = 202021.25
CHANNELS = ("Fx", "Fy", "GradXFx", "GradYFy", "Div", "Curl")
MASK_FALLBACK_FRACTION = 0.01


@dataclass(frozen=True, eq=False)
class FlowField:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u)
        v = np.asarray(self.v)
        if u.dtype.kind != "f":
            u = u.astype(float)
        if v.dtype.kind != "f":
            v = v.astype(float)
        if u.ndim != 2 or u.shape != v.shape or min(u.shape) < 1:
            raise DimensionMismatch(f"u and v must be equal non-empty 2-D arrays, got {u.shape} and {v.shape}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise NonFinite("flow field contains NaN or Inf")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape

    def __eq__(self, other):
        if not isinstance(other, FlowField):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
        )


@dataclass(frozen=True, eq=False)
class ForegroundMask:
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2 or min(bits.shape) < 1:
            raise DimensionMismatch("mask must be a non-empty 2-D array")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def full(cls, height: int, width: int) -> ForegroundMask:
        return cls(np.ones((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @property
    def foreground_fraction(self) -> float:
        return float(self.bits.mean())

    def __eq__(self, other):
        if not isinstance(other, ForegroundMask):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)


@dataclass(frozen=True)
class SignalBundle:
    """Six synchronised pooled time series sampled every ``dt`` seconds."""

    channels: dict
    dt: float

    def __post_init__(self):
        if set(self.channels) != set(CHANNELS):
            raise ValueError(f"bundle needs exactly the channels {CHANNELS}")
        arrays = {k: np.asarray(self.channels[k], dtype=float) for k in CHANNELS}
        lengths = {a.shape for a in arrays.values()}
        if len(lengths) != 1 or len(next(iter(lengths))) != 1 or next(iter(lengths))[0] < 2:
            raise ValueError("bundle channels must be 1-D with identical length >= 2")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "channels", arrays)

    def __len__(self):
        return self.channels[CHANNELS[0]].size


# -- Middlebury .flo -------------------------------------------------------

def read_flo(data: bytes) -> FlowField:
    if len(data) < 4 or struct.unpack("<f", data[:4])[0] != FLO_MAGIC:
        raise BadMagic("not a .flo file (bad magic number)")
    if len(data) < 12:
        raise Truncated("truncated .flo header")
    width, height = struct.unpack("<ii", data[4:12])
    if width < 1 or height < 1:
        raise BadMagic(f"invalid .flo dimensions {width}x{height}")
    expected = 12 + 8 * width * height
    if len(data) < expected:
        raise Truncated(f".flo payload too short: {len(data)} bytes, expected {expected}")
    payload = np.frombuffer(data, dtype="<f4", count=2 * width * height, offset=12)
    if not np.all(np.isfinite(payload)):
        raise NonFinite(".flo payload contains NaN or Inf")
    payload = payload.reshape(height, width, 2).astype(np.float32)
    return FlowField(payload[..., 0].copy(), payload[..., 1].copy())


def write_flo(field: FlowField) -> bytes:
    header = struct.pack("<fii", FLO_MAGIC, field.width, field.height)
    payload = np.stack([field.u, field.v], axis=-1).astype("<f4")
    return header + payload.tobytes()


# -- PGM / PBM masks -------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if not m:
            raise MaskFormatError("truncated PNM header")
        tokens.append(m.group(1))
        pos = m.end()
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise MaskFormatError("malformed PNM header")
    return tokens, pos + 1


def read_mask(data: bytes) -> ForegroundMask:
    """Parse a binary PGM (P5; value > maxval/2 is foreground) or PBM (P4; 1 bits)."""
    magic = data[:2]
    if magic == b"P5":
        (_, w, h, maxval), pos = _header_tokens(data, 4)
        width, height, maxval = int(w), int(h), int(maxval)
        dtype = np.uint8 if maxval < 256 else ">u2"
        nbytes = width * height * (1 if maxval < 256 else 2)
        if len(data) - pos < nbytes:
            raise MaskFormatError("truncated PGM payload")
        pixels = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
        return ForegroundMask(pixels.reshape(height, width) > maxval // 2)
    if magic == b"P4":
        (_, w, h), pos = _header_tokens(data, 3)
        width, height = int(w), int(h)
        row_bytes = (width + 7) // 8
        if len(data) - pos < row_bytes * height:
            raise MaskFormatError("truncated PBM payload")
        packed = np.frombuffer(data, dtype=np.uint8, count=row_bytes * height, offset=pos)
        bits = np.unpackbits(packed.reshape(height, row_bytes), axis=1)[:, :width]
        return ForegroundMask(bits.astype(bool))
    raise MaskFormatError("mask must be a binary PGM (P5) or PBM (P4) image")


def write_mask_pgm(mask: ForegroundMask) -> bytes:
    header = f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii")
    return header + np.where(mask.bits, 255, 0).astype(np.uint8).tobytes()


# -- differential operators ------------------------------------------------

def gaussian_derivative_kernel(size: int = 13, sigma: float = 2.0, order: int = 0) -> np.ndarray:
    """Sampled Gaussian (order 0) or Gaussian derivative (order 1).

    Taps sit on offsets ``-(size-1)/2 .. (size-1)/2``. The order-1 kernel is in
    convolution orientation and scaled so that convolving the ramp ``f(x) = x``
    gives exactly 1; its taps sum to 0.
    """
    if size < 3 or size % 2 == 0:
        raise InvalidKernelSpec(f"kernel size must be odd and >= 3, got {size}")
    if not sigma > 0:
        raise InvalidKernelSpec(f"sigma must be positive, got {sigma}")
    x = np.arange(size, dtype=float) - (size - 1) / 2
    g = np.exp(-0.5 * (x / sigma) ** 2)
    if order == 0:
        return g / g.sum()
    if order == 1:
        d = -x * g
        d -= d.mean()
        return d / -np.dot(d, x)
    raise InvalidKernelSpec(f"order must be 0 or 1, got {order}")


def _derivative(values: np.ndarray, axis: int, smooth: np.ndarray, deriv: np.ndarray) -> np.ndarray:
    # axis 1 is x, axis 0 is y; smooth along the other axis
    out = convolve1d(values, deriv, axis=axis, mode="nearest")
    return convolve1d(out, smooth, axis=1 - axis, mode="nearest")


def differentials(field: FlowField, size: int = 13, sigma: float = 2.0) -> dict[str, np.ndarray]:
    """Gradient diagonal, divergence and (scalar) curl of a 2-D flow field."""
    if field.width < size or field.height < size:
        raise FieldTooSmall(f"field {field.width}x{field.height} smaller than the {size}x{size} filter")
    g = gaussian_derivative_kernel(size, sigma, 0)
    d = gaussian_derivative_kernel(size, sigma, 1)
    u = field.u.astype(float)
    v = field.v.astype(float)
    gradxx = _derivative(u, 1, g, d)
    gradyy = _derivative(v, 0, g, d)
    dvdx = _derivative(v, 1, g, d)
    dudy = _derivative(u, 0, g, d)
    return {"gradxx": gradxx, "gradyy": gradyy, "div": gradxx + gradyy, "curl": dvdx - dudy}


# -- pooling ---------------------------------------------------------------

def pooling_disk(mask: ForegroundMask) -> np.ndarray:
    """Boolean disk at the foreground centroid, radius ``max(3, 0.2*sqrt(area))``."""
    ys, xs = np.nonzero(mask.bits)
    if xs.size == 0:
        raise EmptyMask("mask has no foreground pixels")
    cx, cy = xs.mean(), ys.mean()
    radius = max(3.0, 0.2 * math.sqrt(xs.size))
    yy, xx = np.ogrid[: mask.height, : mask.width]
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= radius**2


def pooled_measurement(values: np.ndarray, mask: ForegroundMask) -> float:
    values = np.asarray(values, dtype=float)
    if values.shape != mask.shape:
        raise DimensionMismatch(f"field {values.shape} and mask {mask.shape} differ")
    return float(values[pooling_disk(mask)].mean())


def mask_fallback(current: ForegroundMask, previous: ForegroundMask | None = None) -> ForegroundMask:
    """Reuse the previous mask when the current one is nearly empty."""
    if previous is not None and previous.shape != current.shape:
        raise DimensionMismatch(f"mask {current.shape} and previous {previous.shape} differ")
    if current.foreground_fraction >= MASK_FALLBACK_FRACTION:
        return current
    if previous is None:
        return ForegroundMask.full(current.height, current.width)
    if previous.foreground_fraction >= MASK_FALLBACK_FRACTION:
        return previous
    return current


def frame_measurements(field: FlowField, mask: ForegroundMask, size: int = 13, sigma: float = 2.0) -> tuple:
    """The six pooled values of one frame, in ``CHANNELS`` order."""
    if field.shape != mask.shape:
        raise DimensionMismatch(f"flow {field.shape} and mask {mask.shape} differ")
    disk = pooling_disk(mask)
    diff = differentials(field, size, sigma)
    fields = (field.u, field.v, diff["gradxx"], diff["gradyy"], diff["div"], diff["curl"])
    return tuple(float(np.asarray(f, dtype=float)[disk].mean()) for f in fields)


def extract_signals(
    frames: Sequence[tuple[FlowField, ForegroundMask | None]],
    fps: float,
    size: int = 13,
    sigma: float = 2.0,
) -> SignalBundle:
    """Pool the six flow signals over every frame.

    A ``None`` mask means full frame. Nearly empty masks are replaced following
    :func:`mask_fallback` before pooling.
    """
    if len(frames) == 0:
        raise EmptySequence("no flow frames")
    if len(frames) < 2:
        raise EmptySequence("need at least 2 frames")
    if not fps > 0:
        raise ValueError("fps must be positive")
    shape = frames[0][0].shape
    masks, previous = [], None
    for field, mask in frames:
        if field.shape != shape:
            raise DimensionMismatch(f"frame of shape {field.shape} in a sequence of {shape}")
        if mask is None:
            mask = ForegroundMask.full(*shape)
        previous = mask_fallback(mask, previous)
        masks.append(previous)

    def measure(i):
        return frame_measurements(frames[i][0], masks[i], size, sigma)

    workers = min(worker_count(), len(frames))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(measure, range(len(frames))))
    else:
        rows = [measure(i) for i in range(len(frames))]
    table = np.array(rows)
    return SignalBundle({name: table[:, k] for k, name in enumerate(CHANNELS)}, 1.0 / fps)


# -- sequence directories --------------------------------------------------

_DIGITS = re.compile(r"(\d+)")


def frame_index(path: Path) -> int | None:
    runs = _DIGITS.findall(path.stem)
    return int(runs[-1]) if runs else None


def _numbered(paths: Iterable[Path]) -> list[tuple[int, Path]]:
    indexed = [(frame_index(p), p) for p in paths]
    return sorted(((i, p) for i, p in indexed if i is not None), key=lambda ip: (ip[0], ip[1].name))


def list_flow_files(flow_dir) -> list[Path]:
    return [p for _, p in _numbered(Path(flow_dir).glob("*.flo"))]


def load_sequence(flow_dir, mask_dir=None) -> tuple[list[tuple[FlowField, ForegroundMask | None]], list[Path]]:
    """Read numbered ``.flo`` frames and matching masks.

    Masks are matched by frame number among ``.pgm``/``.pbm`` files in
    ``mask_dir``; frames without a mask get ``None``. Returns the frames and the
    list of frame numbers that had no mask. Errors name the offending file.
    """
    flow_files = _numbered(Path(flow_dir).glob("*.flo"))
    masks_by_index = {}
    if mask_dir is not None:
        mask_paths = list(Path(mask_dir).glob("*.pgm")) + list(Path(mask_dir).glob("*.pbm"))
        for i, p in _numbered(mask_paths):
            masks_by_index.setdefault(i, p)
    frames, missing = [], []
    for i, path in flow_files:
        try:
            field = read_flo(path.read_bytes())
        except (OSError, ValueError) as exc:
            raise type(exc)(f"{path}: {exc}") from exc
        mask = None
        if i in masks_by_index:
            mpath = masks_by_index[i]
            try:
                mask = read_mask(mpath.read_bytes())
            except (OSError, ValueError) as exc:
                raise type(exc)(f"{mpath}: {exc}") from exc
            if mask.shape != field.shape:
                raise DimensionMismatch(f"{mpath}: mask {mask.shape} does not match flow {field.shape}")
        else:
            missing.append(i)
        frames.append((field, mask))
    return frames, missing
