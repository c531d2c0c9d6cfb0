import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repcount.errors import SignalTooShort, WindowTooLarge
from repcount.synth import idealized_signal
from repcount.annotation import VideoAnnotation
from repcount.tfa import (
    ScaleGrid,
    Signal,
    cwt,
    detrend_and_smooth,
    fourier_factor,
    make_scale_grid,
    morlet_daughter,
    periodogram_count,
    scalogram_pgm_bytes,
    write_scalogram_csv,
)
from tests.helpers import sinusoid, two_segment_chirp


def ls_slope(x):
    t = np.arange(x.size, dtype=float)
    return np.polyfit(t, x, 1)[0]


class TestDetrend:
    @settings(max_examples=40, deadline=None)
    @given(st.floats(-100, 100), st.floats(-100, 100), st.integers(7, 300))
    def test_line_vanishes(self, a, b, n):
        x = a * np.arange(n) + b
        out = detrend_and_smooth(Signal(x, 1.0)).samples
        assert np.max(np.abs(out)) <= 1e-9 * max(1.0, abs(a) * n, abs(b))

    def test_constant_vanishes(self):
        assert np.max(np.abs(detrend_and_smooth(Signal(np.full(50, 4.2), 0.1)).samples)) <= 1e-9

    def test_moving_average_gain(self):
        P, N, w = 40, 400, 7
        t = np.arange(N)
        out = detrend_and_smooth(Signal(np.sin(2 * np.pi * t / P), 1.0), w).samples
        f = 1.0 / P
        gain = math.sin(w * math.pi * f) / (w * math.sin(math.pi * f))
        # least-squares amplitude on the interior, away from the shrinking-window ends
        sl = slice(20, 380)
        basis = np.column_stack([np.sin(2 * np.pi * t / P), np.cos(2 * np.pi * t / P), t, np.ones(N)])[sl]
        coef, *_ = np.linalg.lstsq(basis, out[sl], rcond=None)
        amplitude = math.hypot(coef[0], coef[1])
        assert abs(amplitude - gain) / gain <= 0.01

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=7, max_size=200))
    def test_zero_mean_and_slope(self, values):
        x = np.asarray(values)
        out = detrend_and_smooth(Signal(x, 1.0)).samples
        scale = max(1.0, np.max(np.abs(x)))
        assert abs(out.mean()) <= 1e-9 * scale
        assert abs(ls_slope(out)) <= 1e-9 * scale

    def test_window_checks(self):
        with pytest.raises(WindowTooLarge):
            detrend_and_smooth(Signal(np.zeros(5), 1.0), 7)
        with pytest.raises(ValueError):
            detrend_and_smooth(Signal(np.zeros(50), 1.0), 4)


class TestMorlet:
    def test_origin(self):
        assert morlet_daughter(0.0) == pytest.approx(math.pi**-0.25)

    def test_decay(self):
        assert np.all(np.abs(morlet_daughter(np.array([-8.0, 8.0]))) < 1e-13)

    def test_eta_one(self):
        # evaluated independently from Euler's formula
        amp = math.pi**-0.25 * math.exp(-0.5)
        expected = complex(amp * math.cos(6.0), amp * math.sin(6.0))
        got = morlet_daughter(1.0)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got.real == pytest.approx(0.4375, abs=2e-4)
        assert got.imag == pytest.approx(-0.1273, abs=2e-4)


class TestScaleGrid:
    def test_reference_signal(self):
        dt = 1 / 30
        grid = make_scale_grid(512, dt, min_reps=4)
        period_max = 512 * dt / 4
        assert period_max == pytest.approx(4.2667, abs=1e-4)
        s_max = period_max / fourier_factor(6.0)
        assert s_max == pytest.approx(4.1302, abs=1e-3)
        assert grid.s0 == pytest.approx(2 * dt)
        assert grid.J == math.floor(math.log2(s_max / (2 * dt)) / 0.125) == 47
        assert grid.scales[-1] <= s_max < grid.scales[-1] * 2**0.125

    def test_scales_are_geometric(self):
        grid = ScaleGrid(0.1, 0.25, 8)
        assert len(grid.scales) == 9
        assert np.allclose(grid.scales[1:] / grid.scales[:-1], 2**0.25)

    def test_too_short(self):
        with pytest.raises(SignalTooShort):
            make_scale_grid(8, 1.0, min_reps=4)

    def test_invalid_grid(self):
        with pytest.raises(ValueError):
            ScaleGrid(0.1, 0.125, 0)


def grid_for(n, dt=1.0):
    return make_scale_grid(n, dt)


class TestCwt:
    def test_zero_signal(self):
        sc = cwt(Signal(np.zeros(128), 1.0), grid_for(128))
        assert np.all(sc.power == 0)

    def test_shape_and_coi(self):
        sc = cwt(Signal(sinusoid(8, 128), 0.5), grid_for(128, 0.5))
        assert sc.power.shape == (128, len(sc.grid))
        assert sc.coi[0] == 0 and sc.coi[-1] == 0
        assert sc.coi[64] == pytest.approx(63 * 0.5 / math.sqrt(2))

    def test_matches_explicit_sum(self, rng):
        # oracle: the transform written out as a plain double loop
        N, dt = 40, 0.1
        h = rng.normal(size=N)
        grid = make_scale_grid(N, dt, min_reps=2)
        sc = cwt(Signal(h, dt), grid, method="direct")
        for j in (0, grid.J // 2, grid.J):
            s = grid.scales[j]
            for n in (0, 17, N - 1):
                w = sum(
                    h[k] * np.conj(morlet_daughter((k - n) * dt / s)) * math.sqrt(dt / s)
                    for k in range(N)
                )
                assert sc.power[n, j] == pytest.approx(abs(w) ** 2, rel=1e-10)

    @pytest.mark.parametrize("n", [16, 100, 257, 512])
    def test_routes_agree(self, n, rng):
        sig = Signal(rng.normal(size=n), 1 / 30)
        grid = make_scale_grid(n, 1 / 30)
        a = cwt(sig, grid, method="direct").power
        b = cwt(sig, grid, method="fft").power
        assert np.max(np.abs(a - b)) <= 1e-6 * np.max(a)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.01, 100))
    def test_power_scales_quadratically(self, a):
        x = sinusoid(8, 200, 0.3) + 0.2 * sinusoid(21, 200)
        grid = grid_for(200)
        p1 = cwt(Signal(x, 1.0), grid).power
        p2 = cwt(Signal(a * x, 1.0), grid).power
        assert np.allclose(p2, a * a * p1, rtol=1e-9, atol=1e-12 * a * a * p1.max())

    def test_tone_ridge(self):
        N, dt, P = 512, 1 / 30, 64 / 30
        t = np.arange(N) * dt
        sc = cwt(Signal(np.cos(2 * np.pi * t / P), dt), make_scale_grid(N, dt))
        periods = sc.periods()
        ridge = np.argmax(sc.power, axis=1)
        s_tone = P / fourier_factor(6.0)
        inside = np.flatnonzero(sc.coi >= s_tone)
        assert inside.size > N // 2
        errors = np.abs(periods[ridge[inside]] - P) / P
        assert np.max(errors) <= 2**0.125 - 1

    def test_time_shift_covariance(self, rng):
        N, m = 256, 23
        x = np.zeros(N)
        x[60:180] = rng.normal(size=120) * np.hanning(120)
        grid = make_scale_grid(N, 1.0, min_reps=8)
        p = cwt(Signal(x, 1.0), grid).power
        q = cwt(Signal(np.roll(x, m), 1.0), grid).power
        assert np.allclose(q[m:], p[: N - m], rtol=1e-6, atol=1e-9 * p.max())


class TestPeriodogram:
    def test_ten_cycles(self):
        assert abs(periodogram_count(Signal(sinusoid(10, 500), 1 / 30)) - 10) <= 0.5

    def test_idealized_uniform(self):
        ann = VideoAnnotation("u", 30.0, tuple(range(0, 301, 30)))
        assert abs(periodogram_count(idealized_signal(ann)) - 10) <= 0.5

    def test_chirp_fails(self):
        x = two_segment_chirp(32)
        assert abs(periodogram_count(Signal(x, 1 / 30)) - 24) / 24 > 0.10

    def test_respects_min_reps(self):
        # a strong 2-cycle trend-like wave is ignored in favour of the 6-cycle one
        x = 5 * sinusoid(2, 240) + sinusoid(6, 240)
        assert periodogram_count(Signal(x, 1.0), min_reps=4) == 6

    def test_too_short(self):
        with pytest.raises(SignalTooShort):
            periodogram_count(Signal(np.ones(7), 1.0))


class TestExport:
    def test_csv(self, tmp_path: Path):
        sc = cwt(Signal(sinusoid(8, 64), 0.5), grid_for(64, 0.5))
        path = tmp_path / "s.csv"
        write_scalogram_csv(sc, path)
        rows = path.read_text().splitlines()
        assert len(rows) == 65
        header = rows[0].split(",")
        assert header[0] == "time_s"
        assert np.allclose([float(v) for v in header[1:]], sc.scales)
        assert np.allclose([float(v) for v in rows[5].split(",")[1:]], sc.power[4])

    def test_pgm(self):
        sc = cwt(Signal(sinusoid(8, 64), 0.5), grid_for(64, 0.5))
        data = scalogram_pgm_bytes(sc)
        header = f"P5\n64 {len(sc.grid)}\n255\n".encode()
        assert data.startswith(header)
        pixels = np.frombuffer(data[len(header):], dtype=np.uint8)
        assert pixels.size == 64 * len(sc.grid)
        assert pixels.max() == 255
