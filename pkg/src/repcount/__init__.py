"""Repetition counting from sequences of 2-D flow fields.

Six pooled flow signals are decomposed with a Morlet wavelet transform; the
max-power ridge of each scalogram is integrated into a count and the signal
whose spectrum admits the cheapest min-cost path is selected.
"""

__version__ = "0.1.0"

from .config import RunConfig
from .estimate import CountEstimate, integrate_count, max_power_ridge, min_cost_path, select_signal
from .flowfield import (
    CHANNELS,
    FlowField,
    ForegroundMask,
    SignalBundle,
    differentials,
    extract_signals,
    read_flo,
    write_flo,
)
from .tfa import Signal, cwt, detrend_and_smooth, make_scale_grid, periodogram_count

__all__ = [
    "CHANNELS",
    "CountEstimate",
    "FlowField",
    "ForegroundMask",
    "RunConfig",
    "Signal",
    "SignalBundle",
    "cwt",
    "detrend_and_smooth",
    "differentials",
    "extract_signals",
    "integrate_count",
    "make_scale_grid",
    "max_power_ridge",
    "min_cost_path",
    "periodogram_count",
    "read_flo",
    "select_signal",
    "write_flo",
]
