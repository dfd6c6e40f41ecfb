import numpy as np
import pytest
from numpy.testing import assert_allclose

from pulsecmp.config import PipelineConfig
from pulsecmp.formats import canonical_json
from pulsecmp.ppg import PpgRecording
from pulsecmp.report import (
    RecordingBundle,
    process_reference,
    run_compare,
    simulate_bundle,
)
from pulsecmp.signal_core import TimeSeries
from pulsecmp.synth import PulseModel, generate_waveform, synth_reference

FS = 200.0


def quick_config(**overrides):
    defaults = dict(synth_duration_s=30.0, synth_seed=1, synth_snr_db=20.0)
    defaults.update(overrides)
    return PipelineConfig(**defaults)


class TestRecordingBundle:
    def test_requires_modality(self):
        with pytest.raises(ValueError):
            RecordingBundle()

    def test_present_modalities(self):
        waveform, truth = generate_waveform(PulseModel(), 12.0, FS, 0)
        ref = synth_reference(waveform, 120, 80, truth.beat_times_s)
        bundle = RecordingBundle(reference=ref)
        assert bundle.present_modalities() == ["reference"]


class TestRunCompare:
    def test_needs_two_modalities(self):
        waveform, truth = generate_waveform(PulseModel(), 12.0, FS, 0)
        ref = synth_reference(waveform, 120, 80, truth.beat_times_s)
        with pytest.raises(ValueError, match="need two modalities"):
            run_compare(RecordingBundle(reference=ref))

    def test_synthetic_bundle_ordering(self):
        config = quick_config()
        report = run_compare(simulate_bundle(config), config)
        cos_radar = report.pairs["radar_vs_reference"].comparison.cosine_mean
        cos_ppg = report.pairs["ppg_vs_reference"].comparison.cosine_mean
        assert cos_radar >= cos_ppg
        assert report.baseline == "reference"
        for summary in report.modalities.values():
            assert summary.status == "ok"

    def test_duplicated_reference_as_ppg(self):
        waveform, truth = generate_waveform(PulseModel(), 30.0, FS, 4)
        ref = synth_reference(waveform, 120, 80, truth.beat_times_s)
        bundle = RecordingBundle(
            reference=ref,
            ppg=PpgRecording(channels={"green_0": ref}),
            subject_id="dup",
        )
        report = run_compare(bundle)
        pair = report.pairs["ppg_vs_reference"]
        assert pair.status == "ok"
        assert pair.lag_s == 0.0
        assert pair.bland_altman.bias == 0.0
        assert pair.bland_altman.sd == 0.0
        assert pair.comparison.cosine_mean == 1.0
        assert pair.comparison.p_inflections == 1.0

    def test_insufficient_beats_flagged(self):
        waveform, truth = generate_waveform(PulseModel(), 30.0, FS, 5)
        ref = synth_reference(waveform, 120, 80, truth.beat_times_s)
        flat = TimeSeries(np.full(int(30 * FS), 5000.0), FS)
        bundle = RecordingBundle(
            reference=ref,
            ppg=PpgRecording(channels={"green_0": flat}),
        )
        report = run_compare(bundle)
        assert report.modalities["ppg"].status == "insufficient beats"
        assert report.pairs["ppg_vs_reference"].status == "insufficient beats"
        assert report.modalities["reference"].status == "ok"

    def test_radar_baseline_when_no_reference(self):
        config = quick_config()
        bundle = simulate_bundle(config)
        no_ref = RecordingBundle(radar=bundle.radar, ppg=bundle.ppg, subject_id="nr")
        report = run_compare(no_ref, config)
        assert report.baseline == "radar"
        assert "ppg_vs_radar" in report.pairs

    def test_reference_bp_summary(self):
        config = quick_config(synth_snr_db=-1.0)
        report = run_compare(simulate_bundle(config), config)
        bp = report.modalities["reference"].bp
        assert bp is not None
        assert 115.0 < bp.sbp <= 120.0
        assert 79.0 <= bp.dbp < 85.0
        assert bp.dbp < bp.map < bp.sbp

    def test_report_dict_is_canonical_json_stable(self):
        config = quick_config()
        report1 = run_compare(simulate_bundle(config), config)
        report2 = run_compare(simulate_bundle(config), config)
        assert canonical_json(report1.to_dict()) == canonical_json(report2.to_dict())

    def test_config_echo_present(self):
        config = quick_config()
        report = run_compare(simulate_bundle(config), config)
        assert report.config_echo["filter.order"] == 4
        assert report.config_echo["synth.seed"] == 1

    def test_beat_counts_consistent(self):
        config = quick_config(synth_snr_db=-1.0)
        report = run_compare(simulate_bundle(config), config)
        doc = report.to_dict()
        for name, summary in report.modalities.items():
            entry = doc["modalities"][name]
            assert entry["n_beats"] == len(summary.segments)
            assert entry["n_diastolic"] == summary.train.diastolic_indices.size


class TestProcessReference:
    def test_orients_and_filters(self):
        waveform, truth = generate_waveform(PulseModel(), 20.0, FS, 6)
        ref = synth_reference(waveform, 120, 80, truth.beat_times_s)
        out = process_reference(ref)
        # baseline (the 100 mmHg offset) removed, pulsation preserved
        assert np.abs(out.samples).max() < np.ptp(ref.samples)
        assert np.ptp(out.samples) > 0.5 * np.ptp(ref.samples)
        flipped = process_reference(ref.with_samples(-ref.samples))
        assert_allclose(out.samples, flipped.samples, atol=1e-9)
