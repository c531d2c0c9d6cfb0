"""Repetition counts from scalograms, and min-cost selection among signals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .errors import AllChannelsDegenerate
from .tfa import Scalogram, Signal, cwt, detrend_and_smooth, make_scale_grid

__all__ = [
    "EPSILON",
    "ChannelAnalysis",
    "CountEstimate",
    "max_power_ridge",
    "integrate_count",
    "min_cost_path",
    "path_cost",
    "analyze_signal",
    "select_signal",
]

EPSILON = 1e-12
# channels whose detrended peak is below this fraction of the bundle's largest
# raw value are treated as numerically zero
DEGENERATE_RELATIVE = 1e-9


@dataclass(frozen=True)
class ChannelAnalysis:
    channel: str
    scalogram: Scalogram | None
    ridge: np.ndarray
    path: np.ndarray
    cost: float
    count: float
    degenerate: bool = False


@dataclass(frozen=True)
class CountEstimate:
    count: float
    cost: float
    channel: str
    ridge: np.ndarray
    path: np.ndarray
    scales: np.ndarray
    per_channel: tuple[ChannelAnalysis, ...] = ()

    def to_dict(self) -> dict:
        return {
            "count": float(self.count),
            "cost": float(self.cost),
            "channel": self.channel,
            "per_timestep_scale_seconds": [float(s) for s in self.scales[self.ridge]],
        }


def max_power_ridge(sc: Scalogram) -> np.ndarray:
    """Scale index of maximum power at every timestep (ties go to the smaller scale)."""
    return np.argmax(sc.power, axis=1)


def integrate_count(
    ridge: np.ndarray,
    sc: Scalogram,
    fourier_factor_conversion: bool = True,
    coi_exclude: bool = False,
) -> float:
    """Sum of local frequencies ``dt / period(s_n)`` along the ridge.

    With ``coi_exclude`` the mean local frequency over timesteps whose ridge
    scale lies inside the cone of influence is extrapolated to the full length.
    """
    ridge = np.asarray(ridge)
    if ridge.shape != (sc.n_times,):
        raise ValueError("ridge length does not match the scalogram")
    periods = sc.periods(fourier_factor_conversion)[ridge]
    local = sc.dt / periods
    if coi_exclude:
        trusted = sc.scales[ridge] <= sc.coi
        if trusted.any():
            return float(local[trusted].mean() * sc.n_times)
    return float(local.sum())


def _cost_surface(power: np.ndarray) -> np.ndarray | None:
    peak = power.max()
    if not peak > 0:
        return None
    return 1.0 / (power / peak + EPSILON)


def path_cost(sc: Scalogram, path: np.ndarray) -> float:
    """Per-timestep cost of ``path`` on the inverted, peak-normalised power."""
    cost = _cost_surface(sc.power)
    if cost is None:
        return 1.0 / EPSILON
    total = 0.0
    for n, j in enumerate(path):
        total += cost[n, j]
    return total / sc.n_times


def _first_min_neighbour(row: np.ndarray, j: int) -> int:
    lo = max(j - 1, 0)
    hi = min(j + 2, row.size)
    return lo + int(np.argmin(row[lo:hi]))


def min_cost_path(sc: Scalogram, mode: str = "dp") -> tuple[np.ndarray, float]:
    """Cheapest path through ``1/(p + eps)`` moving at most one scale per step.

    ``mode="dp"`` finds the exact optimum over all start scales;
    ``mode="greedy"`` starts at the cheapest first-column node and follows the
    cheapest neighbour. Returns the path and its total cost divided by N.
    """
    N, S = sc.power.shape
    cost = _cost_surface(sc.power)
    if cost is None:
        return np.zeros(N, dtype=int), 1.0 / EPSILON

    if mode == "greedy":
        path = np.empty(N, dtype=int)
        path[0] = int(np.argmin(cost[0]))
        total = cost[0, path[0]]
        for n in range(1, N):
            path[n] = _first_min_neighbour(cost[n], path[n - 1])
            total += cost[n, path[n]]
        return path, float(total / N)
    if mode != "dp":
        raise ValueError(f"unknown path mode {mode!r}")

    acc = np.empty((N, S))
    acc[0] = cost[0]
    inf = np.array([np.inf])
    for n in range(1, N):
        prev = acc[n - 1]
        down = np.concatenate((inf, prev[:-1]))  # arriving from j-1
        up = np.concatenate((prev[1:], inf))  # arriving from j+1
        acc[n] = cost[n] + np.minimum(np.minimum(down, prev), up)

    path = np.empty(N, dtype=int)
    path[-1] = int(np.argmin(acc[-1]))
    for n in range(N - 1, 0, -1):
        path[n - 1] = _first_min_neighbour(acc[n - 1], path[n])
    return path, float(acc[-1, path[-1]] / N)


def analyze_signal(signal: Signal, config: RunConfig = RunConfig(), channel: str = "signal") -> ChannelAnalysis:
    """Full wavelet pipeline for one signal: smooth, detrend, CWT, ridge, path, count."""
    prepared = detrend_and_smooth(signal, config.mean_window)
    grid = make_scale_grid(
        len(prepared),
        prepared.dt,
        min_reps=config.min_reps,
        s0=config.s0_factor * prepared.dt,
        dj=config.dj,
        omega0=config.omega0,
        fourier_factor_conversion=config.fourier_factor_conversion,
    )
    sc = cwt(prepared, grid, omega0=config.omega0)
    ridge = max_power_ridge(sc)
    path, cost = min_cost_path(sc, config.path_mode)
    count = integrate_count(ridge, sc, config.fourier_factor_conversion, config.coi_exclude)
    degenerate = not sc.power.max() > 0
    return ChannelAnalysis(channel, sc, ridge, path, cost, count, degenerate)


def _degenerate(channel: str, n: int) -> ChannelAnalysis:
    flat = np.zeros(n, dtype=int)
    return ChannelAnalysis(channel, None, flat, flat, 1.0 / EPSILON, 0.0, True)


def select_signal(bundle, config: RunConfig = RunConfig()) -> CountEstimate:
    """Analyse every channel of ``bundle`` and keep the one with minimum path cost.

    The count comes from integrating the max-power ridge of the chosen channel;
    ties in cost go to the earlier channel in canonical order.
    """
    names = list(bundle.channels)
    raw_scale = max(float(np.max(np.abs(bundle.channels[k]))) for k in names)
    results = []
    for name in names:
        signal = Signal(bundle.channels[name], bundle.dt)
        prepared = detrend_and_smooth(signal, config.mean_window).samples
        if raw_scale == 0 or np.max(np.abs(prepared)) <= DEGENERATE_RELATIVE * raw_scale:
            results.append(_degenerate(name, len(signal)))
            continue
        results.append(analyze_signal(signal, config, name))

    live = [r for r in results if not r.degenerate]
    if not live:
        raise AllChannelsDegenerate("every channel is constant or zero")
    best = min(live, key=lambda r: r.cost)
    return CountEstimate(
        count=best.count,
        cost=best.cost,
        channel=best.channel,
        ridge=best.ridge,
        path=best.path,
        scales=best.scalogram.scales,
        per_channel=tuple(results),
    )
