import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from pulsecmp.signal_core import (
    BandpassSpec,
    ComplexSeries,
    TimeSeries,
    butterworth_bandpass,
    range_fft,
    resample_linear,
    unwrap_phase,
)

from oracles import brute_dft_onesided, tone_amplitude, wrap_phase, zero_phase_gain

FS = 200.0


def ts(values, fs=FS):
    return TimeSeries(np.asarray(values, dtype=float), fs)


class TestTimeSeries:
    def test_indexing_rule(self):
        x = TimeSeries([1.0, 2.0, 3.0], 200.0, start_time_s=0.5)
        assert_allclose(x.times(), [0.5, 0.505, 0.51])

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty input"):
            TimeSeries(np.array([]), 200.0)

    def test_bad_rate_rejected(self):
        with pytest.raises(ValueError):
            TimeSeries([1.0], 0.0)

    def test_complex_series_phase(self):
        cs = ComplexSeries(np.exp(1j * np.array([0.1, -0.2, 3.0])), 200.0)
        assert_allclose(cs.phase().samples, [0.1, -0.2, 3.0], atol=1e-12)


class TestUnwrapPhase:
    def test_constant_unchanged(self):
        out = unwrap_phase(ts([0.0, 0.0, 0.0]))
        assert_allclose(out.samples, [0.0, 0.0, 0.0])

    def test_single_jump(self):
        out = unwrap_phase(ts([3.0, -3.0]))
        assert_allclose(out.samples, [3.0, -3.0 + 2.0 * math.pi])

    def test_recovers_wrapped_ramp(self):
        ramp = np.linspace(0.0, 10.0, 100)
        out = unwrap_phase(ts(wrap_phase(ramp)))
        assert_allclose(out.samples, ramp, atol=1e-9)

    def test_first_sample_unchanged_and_multiple_of_2pi(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-np.pi, np.pi, 50)
        out = unwrap_phase(ts(x))
        assert out.samples[0] == x[0]
        k = (out.samples - x) / (2.0 * np.pi)
        assert_allclose(k, np.round(k), atol=1e-9)
        assert np.all(np.abs(np.diff(out.samples)) <= np.pi + 1e-12)

    @given(
        steps=arrays(
            np.float64,
            st.integers(2, 200),
            elements=st.floats(-3.0, 3.0, allow_nan=False),
        ),
        start=st.floats(-3.1, 3.1),
    )
    def test_wrap_unwrap_identity(self, steps, start):
        original = start + np.concatenate([[0.0], np.cumsum(steps[1:])])
        recovered = unwrap_phase(ts(wrap_phase(original))).samples
        assert_allclose(recovered, original, atol=1e-9)


class TestButterworthBandpass:
    def test_dc_rejected(self):
        x = ts(np.full(int(10 * FS), 5.0))
        y = butterworth_bandpass(x)
        assert np.abs(y.samples).max() < 1e-6

    def test_passband_tone_2hz(self):
        t = np.arange(int(60 * FS)) / FS
        y = butterworth_bandpass(ts(np.sin(2 * np.pi * 2.0 * t)))
        amp = tone_amplitude(y.samples, FS, 2.0)
        db = 20 * math.log10(amp)
        assert abs(db) <= 0.5
        assert_allclose(amp, zero_phase_gain(2.0, FS), rtol=1e-4)

    def test_stopband_tone_01hz(self):
        t = np.arange(int(60 * FS)) / FS
        y = butterworth_bandpass(ts(np.sin(2 * np.pi * 0.1 * t)))
        amp = tone_amplitude(y.samples, FS, 0.1)
        assert 20 * math.log10(amp) <= -40.0
        assert_allclose(amp, zero_phase_gain(0.1, FS), rtol=1e-2)

    def test_invalid_cutoff(self):
        x = ts(np.zeros(100))
        with pytest.raises(ValueError, match="invalid cutoff"):
            butterworth_bandpass(x, BandpassSpec(4, 0.5, 100.0))

    def test_input_too_short(self):
        with pytest.raises(ValueError, match="input too short"):
            butterworth_bandpass(ts(np.zeros(11)))

    def test_spec_validation(self):
        with pytest.raises(ValueError, match="invalid cutoff"):
            BandpassSpec(4, 8.0, 0.5)
        with pytest.raises(ValueError):
            BandpassSpec(0, 0.5, 8.0)

    def test_output_metadata_preserved(self):
        x = TimeSeries(np.random.default_rng(1).standard_normal(4000), FS, start_time_s=2.0)
        y = butterworth_bandpass(x)
        assert len(y) == len(x)
        assert y.sample_rate_hz == FS
        assert y.start_time_s == 2.0

    @given(seed=st.integers(0, 10_000))
    def test_linearity(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(2000)
        y = rng.standard_normal(2000)
        a, b = rng.uniform(-3, 3, 2)
        lhs = butterworth_bandpass(ts(a * x + b * y)).samples
        rhs = a * butterworth_bandpass(ts(x)).samples + b * butterworth_bandpass(ts(y)).samples
        scale = max(np.abs(rhs).max(), 1e-12)
        assert np.abs(lhs - rhs).max() <= 1e-9 * scale

    def test_zero_phase_preserves_crossings(self):
        f = 2.0
        t = np.arange(int(60 * FS)) / FS
        x = np.sin(2 * np.pi * f * t)
        y = butterworth_bandpass(ts(x)).samples
        mid = slice(int(10.13 * FS), int(49.87 * FS))
        xc = np.where(np.diff(np.signbit(x[mid])))[0]
        yc = np.where(np.diff(np.signbit(y[mid])))[0]
        assert xc.size == yc.size
        assert np.abs(xc - yc).max() <= 1


class TestRangeFft:
    def test_zero_chirp(self):
        assert_allclose(np.abs(range_fft(np.zeros(64))), 0.0)

    def test_cosine_bin(self):
        n = np.arange(64)
        spec = range_fft(np.cos(2 * np.pi * 7 * n / 64))
        mags = np.abs(spec)
        assert_allclose(mags[7], 32.0, atol=1e-9)
        others = np.delete(mags, 7)
        assert others.max() < 1e-9
        assert_allclose(spec, brute_dft_onesided(np.cos(2 * np.pi * 7 * n / 64)), atol=1e-9)

    def test_impulse_flat(self):
        x = np.zeros(64)
        x[0] = 1.0
        assert_allclose(np.abs(range_fft(x)), 1.0, atol=1e-12)

    def test_too_short(self):
        with pytest.raises(ValueError):
            range_fft(np.array([1.0]))

    @given(
        x=arrays(
            np.float64,
            st.integers(2, 128),
            elements=st.floats(-100, 100, allow_nan=False),
        )
    )
    def test_parseval(self, x):
        spec = range_fft(x)
        n = x.size
        power = np.abs(spec[0]) ** 2 + np.abs(spec[-1]) ** 2 * (1 if n % 2 == 0 else 2)
        if n % 2 == 0:
            power += 2 * np.sum(np.abs(spec[1:-1]) ** 2)
        else:
            power = np.abs(spec[0]) ** 2 + 2 * np.sum(np.abs(spec[1:]) ** 2)
        time_energy = np.sum(x * x)
        assert_allclose(power / n, time_energy, rtol=1e-9, atol=1e-9)


class TestResampleLinear:
    def test_midpoint(self):
        assert_allclose(resample_linear(ts([0.0, 1.0]), 3), [0.0, 0.5, 1.0])

    def test_identity_length(self):
        x = np.random.default_rng(2).standard_normal(37)
        assert_allclose(resample_linear(ts(x), 37), x, atol=1e-12)

    def test_ramp_arithmetic(self):
        out = resample_linear(ts(np.arange(10.0)), 19)
        assert_allclose(np.diff(out), 9.0 / 18.0, atol=1e-12)

    def test_too_short(self):
        with pytest.raises(ValueError):
            resample_linear(ts([1.0]), 5)
        with pytest.raises(ValueError):
            resample_linear(ts([1.0, 2.0]), 1)

    @given(
        x=arrays(
            np.float64,
            st.integers(2, 100),
            elements=st.floats(-1000, 1000, allow_nan=False),
        ),
        target=st.integers(2, 300),
    )
    def test_monotone_preserves_extremes(self, x, target):
        x = np.sort(x)
        out = resample_linear(ts(x), target)
        assert_allclose(out.min(), x.min(), atol=1e-9)
        assert_allclose(out.max(), x.max(), atol=1e-9)
        assert out[0] == x[0] and out[-1] == x[-1]
