"""Physics-based synthetic data generator with known ground truth.

One shared arterial waveform drives all three modalities: the radar
cube encodes it as phase modulation of an IF tone at the target range
bin, the PPG channel sees it through a slow causal decay kernel, and
the pressure reference is an amplitude-calibrated copy. The generator
is fully deterministic given a seed (PCG64), so recordings regenerate
bit-identically and acceptance tests can compare pipeline output
against exact truth.

The per-beat shape is a sum of three Gaussian bumps (systolic peak,
late-systolic augmentation wave, dicrotic wave). Widths are 1/e
half-widths in beat-fraction units: ``amp * exp(-((u - center) /
width)**2)``; with the default model this produces five interior
extrema per beat (three maxima, two minima).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pulsecmp.beats import IBI_MAX_MS, IBI_MIN_MS
from pulsecmp.ppg import PpgRecording
from pulsecmp.radar import RadarCube
from pulsecmp.signal_core import TimeSeries

DEFAULT_DISPLACEMENT_M = 100e-6

# Peak-to-peak extent of zero-mean Gaussian noise, as a multiple of its
# standard deviation (+/- 3 sigma covers 99.7 % of samples).
NOISE_P2P_SIGMA = 6.0


@dataclass(frozen=True)
class PulseModel:
    """Beat-shape and rhythm parameters for the generator."""

    hr_mean_bpm: float = 62.0
    ibi_sd_ms: float = 30.0
    systolic_amp: float = 1.0
    augmentation_amp: float = 0.25
    dicrotic_amp: float = 0.15
    systolic_center: float = 0.18
    augmentation_center: float = 0.34
    dicrotic_center: float = 0.55
    systolic_width: float = 0.06
    augmentation_width: float = 0.08
    dicrotic_width: float = 0.07

    def __post_init__(self):
        if not self.hr_mean_bpm > 0:
            raise ValueError("hr_mean_bpm must be positive")
        if self.ibi_sd_ms < 0:
            raise ValueError("ibi_sd_ms must be non-negative")
        amps = (self.systolic_amp, self.augmentation_amp, self.dicrotic_amp)
        if any(a < 0 for a in amps):
            raise ValueError("amplitudes must be non-negative")
        centers = (self.systolic_center, self.augmentation_center, self.dicrotic_center)
        if not (0.0 < centers[0] < centers[1] < centers[2] < 1.0):
            raise ValueError("centers must be strictly increasing in (0, 1)")
        widths = (self.systolic_width, self.augmentation_width, self.dicrotic_width)
        if any(w <= 0 for w in widths):
            raise ValueError("widths must be positive")

    @property
    def amps(self) -> tuple[float, float, float]:
        return (self.systolic_amp, self.augmentation_amp, self.dicrotic_amp)

    @property
    def centers(self) -> tuple[float, float, float]:
        return (self.systolic_center, self.augmentation_center, self.dicrotic_center)

    @property
    def widths(self) -> tuple[float, float, float]:
        return (self.systolic_width, self.augmentation_width, self.dicrotic_width)


@dataclass
class SynthGroundTruth:
    """Generator-side truth used by oracle tests."""

    beat_times_s: np.ndarray
    systolic_times_s: np.ndarray
    displacement: TimeSeries
    target_range_bin: int = 0
    target_antenna: int = 0
    seed: int = 0
    displacement_peak_m: float = 0.0

    def __post_init__(self):
        self.beat_times_s = np.asarray(self.beat_times_s, dtype=np.float64)
        self.systolic_times_s = np.asarray(self.systolic_times_s, dtype=np.float64)
        if self.beat_times_s.size > 1 and not np.all(np.diff(self.beat_times_s) > 0):
            raise ValueError("beat times must be strictly increasing")


@dataclass(frozen=True)
class CubeGeometry:
    """Dimensions and target placement for synthetic radar cubes."""

    antennas: int = 3
    chirps: int = 16
    samples: int = 64
    target_antenna: int = 1
    target_range_bin: int = 7
    range_offset_m: float = 0.003
    clutter_amp_low: float = 0.2
    clutter_amp_high: float = 1.0

    def __post_init__(self):
        if not (1 <= self.antennas <= 8):
            raise ValueError("antennas must be in 1..8")
        if self.chirps < 1 or self.samples < 2:
            raise ValueError("invalid geometry")
        if not 0 <= self.target_antenna < self.antennas:
            raise ValueError("target antenna out of range")
        n_bins = self.samples // 2 + 1
        if not 1 <= self.target_range_bin < n_bins - 1:
            raise ValueError("target bin must be an interior one-sided bin")


def generate_waveform(
    model: PulseModel, duration_s: float, fs_hz: float, seed: int
) -> tuple[TimeSeries, SynthGroundTruth]:
    """Build the shared arterial waveform and its ground truth.

    Inter-beat intervals are drawn from N(60000 / hr_mean_bpm,
    ibi_sd_ms) and clamped into the plausibility gate. Each beat's
    samples are the three-bump sum evaluated on that beat's own
    fractional time axis, so beat feet fall exactly at the drawn beat
    boundaries. The truth records every foot inside the record plus the
    systolic instants that land inside it.
    """
    if duration_s < 10.0:
        raise ValueError("duration must be at least 10 s")
    if fs_hz < 50.0:
        raise ValueError("sample rate must be at least 50 Hz")
    rng = np.random.default_rng(seed)
    mean_ms = 60000.0 / model.hr_mean_bpm
    feet = [0.0]
    while feet[-1] < duration_s:
        ibi = rng.normal(mean_ms, model.ibi_sd_ms)
        ibi = min(max(ibi, np.nextafter(IBI_MIN_MS, IBI_MAX_MS)), np.nextafter(IBI_MAX_MS, IBI_MIN_MS))
        feet.append(feet[-1] + ibi / 1000.0)
    n = int(round(duration_s * fs_hz))
    t = np.arange(n) / fs_hz
    y = np.zeros(n)
    systolic_times = []
    for t0, t1 in zip(feet[:-1], feet[1:]):
        mask = (t >= t0) & (t < t1)
        if not mask.any():
            continue
        u = (t[mask] - t0) / (t1 - t0)
        for a, c, w in zip(model.amps, model.centers, model.widths):
            y[mask] += a * np.exp(-(((u - c) / w) ** 2))
        t_sys = t0 + model.systolic_center * (t1 - t0)
        if t_sys < n / fs_hz:
            systolic_times.append(t_sys)
    beat_times = np.array([f for f in feet if f < duration_s])
    waveform = TimeSeries(y, fs_hz)
    truth = SynthGroundTruth(
        beat_times_s=beat_times,
        systolic_times_s=np.array(systolic_times),
        displacement=waveform,
        seed=seed,
        displacement_peak_m=float(np.abs(y).max()),
    )
    return waveform, truth


def synth_radar_cube(
    displacement: TimeSeries,
    geometry: CubeGeometry = CubeGeometry(),
    snr_db: float | None = None,
    seed: int = 0,
    carrier_hz: float = 60.0e9,
) -> RadarCube:
    """Synthesize a raw IF cube for a target moving by ``displacement``.

    The target (antenna, bin) carries a unit IF tone phase-modulated by
    ``4 * pi * (range_offset + d(t)) / wavelength``. Every other
    informative bin carries a static clutter tone with seeded random
    amplitude and phase (real IF data always rides on static
    reflections; without them a bin's phase is an unbounded random walk
    and peak-to-peak selection is meaningless). White noise on all
    samples is scaled so the ratio of the target's phase peak-to-peak
    to the induced phase-noise peak-to-peak matches ``snr_db``;
    ``None`` disables noise.

    Raises
    ------
    ValueError
        "phase ambiguity" when the displacement peak reaches a quarter
        wavelength.
    """
    wavelength = 299792458.0 / carrier_hz
    d = displacement.samples
    if np.abs(d).max() >= wavelength / 4.0:
        raise ValueError("phase ambiguity")
    rng = np.random.default_rng(seed)
    n_frames = len(d)
    n_ant, n_chirp, n_samp = geometry.antennas, geometry.chirps, geometry.samples
    n_bins = n_samp // 2 + 1
    phi = 4.0 * np.pi * (geometry.range_offset_m + d) / wavelength
    n = np.arange(n_samp)

    amps = rng.uniform(geometry.clutter_amp_low, geometry.clutter_amp_high, size=(n_ant, n_bins))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_ant, n_bins))
    amps[:, 0] = 0.0  # DC carries no range information
    phases[:, -1] = 0.0  # a Nyquist tone with random phase can vanish
    amps[geometry.target_antenna, geometry.target_range_bin] = 0.0
    k = np.arange(n_bins)
    angles = 2.0 * np.pi * k[None, :, None] * n[None, None, :] / n_samp + phases[:, :, None]
    clutter = np.einsum("ak,akn->an", amps, np.cos(angles))

    tone = np.cos(2.0 * np.pi * geometry.target_range_bin * n[None, :] / n_samp + phi[:, None])
    cube = np.empty((n_frames, n_ant, n_chirp, n_samp), dtype=np.float64)
    cube[:] = clutter[None, :, None, :]
    cube[:, geometry.target_antenna, :, :] += tone[:, None, :]

    if snr_db is not None and math.isfinite(snr_db):
        phase_p2p = float(phi.max() - phi.min())
        sigma_phase = phase_p2p / (NOISE_P2P_SIGMA * 10.0 ** (snr_db / 20.0))
        # A unit tone maps to bin magnitude N/2; averaging C chirps
        # leaves per-component bin noise sigma_if * sqrt(N / (2 C)).
        sigma_if = sigma_phase * (n_samp / 2.0) / math.sqrt(n_samp / (2.0 * n_chirp))
        cube += sigma_if * rng.standard_normal(cube.shape, dtype=np.float32).astype(np.float64)

    metadata = {
        "source": "synthetic",
        "target_antenna": str(geometry.target_antenna),
        "target_range_bin": str(geometry.target_range_bin),
    }
    return RadarCube(
        data=cube,
        frame_rate_hz=displacement.sample_rate_hz,
        carrier_hz=carrier_hz,
        metadata=metadata,
    )


def synth_ppg(
    waveform: TimeSeries,
    decay_tau_s: float = 0.25,
    noise_sd: float = 0.0,
    seed: int = 0,
    offset_counts: float = 10000.0,
    drift_hz: float = 0.05,
    drift_amp_counts: float = 100.0,
) -> PpgRecording:
    """Reflective-PPG model: slow decay, offset, drift, and noise.

    The waveform is convolved with a causal exponential kernel
    ``exp(-t / tau)`` normalized to unit area (PPG decays more slowly
    than tissue displacement because blood drains through the capillary
    bed), then a DC offset, a slow sinusoidal baseline drift, and white
    noise are added. Emitted as channel ``green_0``.
    """
    if decay_tau_s <= 0:
        raise ValueError("decay_tau_s must be positive")
    fs = waveform.sample_rate_hz
    n_kernel = max(1, int(round(8.0 * decay_tau_s * fs)))
    kernel = np.exp(-np.arange(n_kernel) / (decay_tau_s * fs))
    kernel /= kernel.sum()
    smeared = np.convolve(waveform.samples, kernel)[: len(waveform)]
    t = waveform.times()
    out = smeared + offset_counts + drift_amp_counts * np.sin(2.0 * np.pi * drift_hz * t)
    if noise_sd > 0:
        out = out + noise_sd * np.random.default_rng(seed).standard_normal(out.size)
    channel = TimeSeries(out, fs, waveform.start_time_s)
    return PpgRecording(channels={"green_0": channel}, metadata={"source": "synthetic"})


def synth_reference(
    waveform: TimeSeries,
    sbp: float = 120.0,
    dbp: float = 80.0,
    beat_times_s: np.ndarray | None = None,
) -> TimeSeries:
    """Pressure reference: affine map of the truth waveform to mmHg.

    With beat boundaries supplied, each beat is mapped so its minimum
    equals ``dbp`` and its maximum equals ``sbp`` exactly (the reference
    device calibrates per beat); without boundaries a single global map
    is used.
    """
    if not sbp > dbp:
        raise ValueError("invalid pressures")
    y = waveform.samples
    fs = waveform.sample_rate_hz
    out = np.empty_like(y)
    if beat_times_s is None or len(beat_times_s) < 2:
        lo, hi = float(y.min()), float(y.max())
        if hi - lo < 1e-12:
            raise ValueError("degenerate waveform")
        return waveform.with_samples(dbp + (sbp - dbp) * (y - lo) / (hi - lo))
    bounds = np.round(np.asarray(beat_times_s) * fs).astype(int)
    bounds = np.clip(bounds, 0, y.size)
    edges = [0] + bounds[1:-1].tolist() + [y.size]
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        seg = y[a:b]
        lo, hi = float(seg.min()), float(seg.max())
        if hi - lo < 1e-12:
            raise ValueError("degenerate waveform")
        out[a:b] = dbp + (sbp - dbp) * (seg - lo) / (hi - lo)
    return waveform.with_samples(out)
