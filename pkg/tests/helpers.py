import numpy as np


def sinusoid(cycles, n, phase=0.0):
    t = np.arange(n)
    return np.sin(2 * np.pi * cycles * t / n + phase)


def two_segment_chirp(period, cycles_each=8):
    """``cycles_each`` cycles at ``period`` then twice as many at ``period/2``, phase-continuous."""
    n = 2 * cycles_each * period
    t = np.arange(n)
    half = n // 2
    phase = np.where(
        t < half,
        2 * np.pi * t / period,
        2 * np.pi * half / period + 2 * np.pi * (t - half) / (period / 2),
    )
    return np.sin(phase)
