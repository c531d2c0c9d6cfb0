"""Preprocessing and time-frequency analysis of 1-D signals.

The continuous wavelet transform uses the Morlet wavelet on a logarithmic
scale grid ``s_j = s0 * 2**(j*dj)``. Two numerically equivalent routes are
provided: direct summation over the sampled daughter wavelet, and multiplication
in the discrete Fourier domain on a zero-padded copy. The Fourier route is the
default.

Summation order (for bitwise reproducibility): the direct route evaluates each
scale as a dense matrix-vector product with ``n'`` ascending; the Fourier route
uses ``numpy.fft`` on a buffer of length ``next_pow2(2N - 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SignalTooShort, WindowTooLarge

__all__ = [
    "Signal",
    "ScaleGrid",
    "Scalogram",
    "fourier_factor",
    "scale_to_period",
    "detrend_and_smooth",
    "linear_detrend",
    "moving_average",
    "morlet_daughter",
    "make_scale_grid",
    "cwt",
    "periodogram",
    "periodogram_count",
    "write_scalogram_csv",
    "scalogram_pgm_bytes",
]


@dataclass(frozen=True)
class Signal:
    samples: np.ndarray
    dt: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("signal samples must be one-dimensional")
        if samples.size < 2:
            raise SignalTooShort("signal too short: need at least 2 samples")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not np.all(np.isfinite(samples)):
            raise ValueError("signal contains non-finite samples")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size * self.dt


@dataclass(frozen=True)
class ScaleGrid:
    s0: float
    dj: float
    J: int
    scales: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.s0 > 0 and self.dj > 0 and self.J >= 1):
            raise ValueError("scale grid needs s0 > 0, dj > 0 and J >= 1")
        scales = self.s0 * 2.0 ** (np.arange(self.J + 1) * self.dj)
        scales.setflags(write=False)
        object.__setattr__(self, "scales", scales)

    def __len__(self):
        return self.J + 1


@dataclass(frozen=True)
class Scalogram:
    """Wavelet power ``|W_n(s_j)|**2`` laid out as (time, scale)."""

    power: np.ndarray
    grid: ScaleGrid
    dt: float
    coi: np.ndarray
    omega0: float = 6.0

    @property
    def n_times(self) -> int:
        return self.power.shape[0]

    @property
    def scales(self) -> np.ndarray:
        return self.grid.scales

    def periods(self, fourier_factor_conversion: bool = True) -> np.ndarray:
        return scale_to_period(self.grid.scales, self.omega0, fourier_factor_conversion)


def fourier_factor(omega0: float = 6.0) -> float:
    """Ratio between the equivalent Fourier period and the Morlet scale."""
    return 4.0 * math.pi / (omega0 + math.sqrt(2.0 + omega0**2))


def scale_to_period(scales, omega0: float = 6.0, fourier_factor_conversion: bool = True):
    """Fourier period of each scale; with the conversion off the scale itself is used."""
    scales = np.asarray(scales, dtype=float)
    if not fourier_factor_conversion:
        return scales
    return fourier_factor(omega0) * scales


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average whose window shrinks symmetrically at the ends."""
    x = np.asarray(x, dtype=float)
    n = x.size
    half = np.minimum(window // 2, np.minimum(np.arange(n), n - 1 - np.arange(n)))
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(n)
    return (csum[idx + half + 1] - csum[idx - half]) / (2 * half + 1)


def linear_detrend(x: np.ndarray) -> np.ndarray:
    """Subtract the least-squares line."""
    x = np.asarray(x, dtype=float)
    t = np.arange(x.size, dtype=float)
    t -= t.mean()
    xc = x - x.mean()
    slope = np.dot(t, xc) / np.dot(t, t)
    out = xc - slope * t
    # one refinement pass removes the rounding left by the first fit
    return out - out.mean() - (np.dot(t, out) / np.dot(t, t)) * t


def detrend_and_smooth(signal: Signal, window: int = 7) -> Signal:
    """Mean filter with ``window`` then remove the least-squares line."""
    n = len(signal)
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window}")
    if window > n:
        raise WindowTooLarge(f"window {window} exceeds signal length {n}")
    return Signal(linear_detrend(moving_average(signal.samples, window)), signal.dt)


def morlet_daughter(eta, omega0: float = 6.0):
    """Morlet mother wavelet ``pi**-0.25 * exp(i*omega0*eta) * exp(-eta**2/2)``."""
    eta = np.asarray(eta, dtype=float)
    out = math.pi**-0.25 * np.exp(1j * omega0 * eta - 0.5 * eta**2)
    return out[()] if out.ndim == 0 else out


def make_scale_grid(
    N: int,
    dt: float,
    min_reps: float = 4,
    s0: float | None = None,
    dj: float = 0.125,
    omega0: float = 6.0,
    fourier_factor_conversion: bool = True,
) -> ScaleGrid:
    """Log-spaced scales from ``s0`` up to the scale whose period fits ``min_reps`` cycles."""
    if s0 is None:
        s0 = 2.0 * dt
    max_period = N * dt / min_reps
    s_max = max_period / (fourier_factor(omega0) if fourier_factor_conversion else 1.0)
    if s_max <= s0:
        raise SignalTooShort(
            f"signal too short: {N} samples cannot host {min_reps} cycles above scale {s0:g}"
        )
    J = math.floor(math.log2(s_max / s0) / dj + 1e-9)
    if J < 1:
        raise SignalTooShort(f"signal too short: only {J + 1} scale(s) fit between s0 and s_max")
    return ScaleGrid(s0=s0, dj=dj, J=J)


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def _daughter_lags(N: int, dt: float, scale: float, omega0: float) -> np.ndarray:
    """Energy-normalised daughter wavelet at lags -(N-1)..(N-1)."""
    lags = np.arange(-(N - 1), N, dtype=float)
    return morlet_daughter(lags * dt / scale, omega0) * math.sqrt(dt / scale)


def _cwt_direct(h: np.ndarray, dt: float, scales: np.ndarray, omega0: float) -> np.ndarray:
    N = h.size
    n = np.arange(N)
    offsets = n[None, :] - n[:, None] + (N - 1)
    W = np.empty((N, scales.size), dtype=complex)
    for j, s in enumerate(scales):
        kernel = np.conj(_daughter_lags(N, dt, s, omega0))
        W[:, j] = kernel[offsets] @ h
    return W


def _cwt_fft(h: np.ndarray, dt: float, scales: np.ndarray, omega0: float) -> np.ndarray:
    # W_n = sum_n' h_n' conj(psi((n'-n)dt/s)) = (h conv psi_s)[n], since the Morlet
    # satisfies psi(-eta) = conj(psi(eta)). M >= 2N-1 makes the circular product exact.
    N = h.size
    M = _next_pow2(2 * N - 1)
    lags = np.arange(-(N - 1), N)
    buf = np.zeros((scales.size, M), dtype=complex)
    for j, s in enumerate(scales):
        buf[j, lags % M] = _daughter_lags(N, dt, s, omega0)
    H = np.fft.fft(h, n=M)
    W = np.fft.ifft(np.fft.fft(buf, axis=1) * H[None, :], axis=1)[:, :N]
    return W.T


def cwt(
    signal: Signal,
    grid: ScaleGrid,
    omega0: float = 6.0,
    method: str = "fft",
    return_coefficients: bool = False,
):
    """Morlet continuous wavelet transform of ``signal`` on ``grid``.

    Returns a :class:`Scalogram`; with ``return_coefficients`` the complex
    coefficients (time, scale) are returned alongside it.
    """
    h = signal.samples
    if method == "fft":
        W = _cwt_fft(h, signal.dt, grid.scales, omega0)
    elif method == "direct":
        W = _cwt_direct(h, signal.dt, grid.scales, omega0)
    else:
        raise ValueError(f"unknown cwt method {method!r}")
    power = W.real**2 + W.imag**2
    N = h.size
    edge = np.minimum(np.arange(N), N - 1 - np.arange(N)) * signal.dt
    coi = edge / math.sqrt(2.0)
    sc = Scalogram(power=power, grid=grid, dt=signal.dt, coi=coi, omega0=omega0)
    return (sc, W) if return_coefficients else sc


def periodogram(signal: Signal) -> tuple[np.ndarray, np.ndarray]:
    """Frequencies (Hz) and untapered power of the linearly detrended signal."""
    x = linear_detrend(signal.samples)
    power = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(x.size, d=signal.dt)
    return freqs, power


def periodogram_count(signal: Signal, min_reps: float = 4) -> float:
    """Count from the strongest periodogram bin with at least ``min_reps`` cycles."""
    N = len(signal)
    if N < 8:
        raise SignalTooShort(f"signal too short for a periodogram: {N} < 8 samples")
    freqs, power = periodogram(signal)
    cycles = freqs * N * signal.dt
    allowed = np.flatnonzero(cycles >= min_reps - 1e-9)
    if allowed.size == 0:
        raise SignalTooShort(f"signal too short: no frequency bin with {min_reps} cycles")
    best = allowed[np.argmax(power[allowed])]
    return float(cycles[best])


def write_scalogram_csv(sc: Scalogram, path) -> None:
    """One header row of scales (seconds), then one row of power per timestep."""
    lines = [",".join(["time_s"] + [repr(float(s)) for s in sc.scales])]
    for n, row in enumerate(sc.power):
        lines.append(",".join([repr(n * sc.dt)] + [repr(float(v)) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n")


def scalogram_pgm_bytes(sc: Scalogram) -> bytes:
    """8-bit binary PGM heatmap: time on x, scale index on y (smallest scale on top)."""
    peak = sc.power.max()
    img = sc.power.T / peak if peak > 0 else np.zeros_like(sc.power.T)
    pixels = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    height, width = pixels.shape
    return f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes()
