"""Bundle processing and the cross-modality agreement report.

``simulate_bundle`` builds a synthetic recording set from one shared
ground-truth waveform; ``run_compare`` processes whichever modalities a
bundle carries, aligns beats pairwise against the reference (or against
radar when no reference is present), and assembles interval and
morphology agreement statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from pulsecmp.beats import (
    AverageBeat,
    BeatSegment,
    IbiSeries,
    PeakTrain,
    align_beat_events,
    average_beats,
    detect_peaks,
    extract_ibi,
    paired_consecutive,
    segment_beats_indexed,
    IBI_MAX_MS,
    IBI_MIN_MS,
)
from pulsecmp.config import PipelineConfig
from pulsecmp.metrics import (
    BlandAltman,
    BpSummary,
    MorphologyMetrics,
    PairwiseComparison,
    bland_altman,
    compare_modalities,
    map_from_bp,
    morphology_metrics,
)
from pulsecmp.ppg import PpgRecording, process_ppg
from pulsecmp.radar import BinSelection, RadarCube, correct_polarity, process_radar
from pulsecmp.signal_core import BandpassSpec, TimeSeries, butterworth_bandpass
from pulsecmp.synth import (
    CubeGeometry,
    PulseModel,
    SynthGroundTruth,
    generate_waveform,
    synth_ppg,
    synth_radar_cube,
    synth_reference,
)

MIN_BEATS = 2


@dataclass
class RecordingBundle:
    """All simultaneously recorded modalities for one subject."""

    radar: RadarCube | None = None
    ppg: PpgRecording | None = None
    reference: TimeSeries | None = None
    truth: SynthGroundTruth | None = None
    subject_id: str = "subject"

    def __post_init__(self):
        if self.radar is None and self.ppg is None and self.reference is None:
            raise ValueError("bundle must contain at least one modality")

    def present_modalities(self) -> list[str]:
        names = []
        if self.reference is not None:
            names.append("reference")
        if self.radar is not None:
            names.append("radar")
        if self.ppg is not None:
            names.append("ppg")
        return names


@dataclass
class ModalitySummary:
    """Processed waveform and per-modality statistics."""

    name: str
    status: str
    waveform: TimeSeries | None = None
    train: PeakTrain | None = None
    ibi: IbiSeries | None = None
    segments: list[tuple[int, BeatSegment]] = field(default_factory=list)
    morphology: MorphologyMetrics | None = None
    average_beat: AverageBeat | None = None
    selection: BinSelection | None = None
    bp: BpSummary | None = None

    @property
    def n_beats(self) -> int:
        return len(self.segments)


@dataclass
class PairSummary:
    """Agreement between one test modality and the comparison baseline."""

    name: str
    status: str
    lag_s: float = 0.0
    n_event_pairs: int = 0
    n_paired_ibis: int = 0
    n_paired_beats: int = 0
    bland_altman: BlandAltman | None = None
    comparison: PairwiseComparison | None = None


@dataclass
class AgreementReport:
    """Everything ``run_compare`` produces for one bundle."""

    subject_id: str
    baseline: str
    config_echo: dict
    modalities: dict[str, ModalitySummary]
    pairs: dict[str, PairSummary]

    def to_dict(self) -> dict:
        """JSON-ready view with a fixed key order."""
        doc: dict = {
            "subject_id": self.subject_id,
            "baseline": self.baseline,
            "modalities": {},
            "pairs": {},
            "config": self.config_echo,
        }
        for name in sorted(self.modalities):
            m = self.modalities[name]
            entry: dict = {
                "status": m.status,
                "n_systolic": int(m.train.systolic_indices.size) if m.train else 0,
                "n_diastolic": int(m.train.diastolic_indices.size) if m.train else 0,
                "n_beats": m.n_beats,
                "n_ibi": len(m.ibi) if m.ibi is not None else 0,
            }
            if m.morphology is not None:
                entry["morphology"] = {
                    "inflection_count_mean": m.morphology.inflection_count_mean,
                    "inflection_count_sd": m.morphology.inflection_count_sd,
                    "auc_mean": m.morphology.auc_mean,
                    "auc_sd": m.morphology.auc_sd,
                }
            if m.selection is not None:
                entry["selection"] = {
                    "antenna_index": m.selection.antenna_index,
                    "range_bin": m.selection.range_bin,
                    "peak_to_peak": m.selection.peak_to_peak,
                    "inverted": m.selection.inverted,
                }
            if m.bp is not None:
                entry["bp"] = {"sbp": m.bp.sbp, "dbp": m.bp.dbp, "map": m.bp.map}
            doc["modalities"][name] = entry
        for name in sorted(self.pairs):
            p = self.pairs[name]
            entry = {
                "status": p.status,
                "lag_s": p.lag_s,
                "n_event_pairs": p.n_event_pairs,
                "n_paired_ibis": p.n_paired_ibis,
                "n_paired_beats": p.n_paired_beats,
            }
            if p.bland_altman is not None:
                entry["bland_altman"] = {
                    "bias_ms": p.bland_altman.bias,
                    "sd_ms": p.bland_altman.sd,
                    "loa_low_ms": p.bland_altman.loa_low,
                    "loa_high_ms": p.bland_altman.loa_high,
                    "n": len(p.bland_altman.points),
                }
            if p.comparison is not None:
                c = p.comparison
                entry["morphology_comparison"] = {
                    "inflections_mean_diff_ref_minus_test": c.mean_diff_inflections,
                    "inflections_mean_diff_test_minus_ref": -c.mean_diff_inflections,
                    "p_inflections": c.p_inflections,
                    "auc_mean_diff_test_minus_ref": c.mean_diff_auc,
                    "auc_mean_diff_ref_minus_test": -c.mean_diff_auc,
                    "p_auc": c.p_auc,
                    "cosine_mean": c.cosine_mean,
                    "cosine_sd": c.cosine_sd,
                }
            doc["pairs"][name] = entry
        return doc


def model_from_config(config: PipelineConfig) -> PulseModel:
    return PulseModel(hr_mean_bpm=config.synth_hr_bpm, ibi_sd_ms=config.synth_ibi_sd_ms)


def geometry_from_config(config: PipelineConfig) -> CubeGeometry:
    return CubeGeometry(
        antennas=config.synth_antennas,
        chirps=config.synth_chirps,
        samples=config.synth_samples,
        target_antenna=config.synth_target_antenna,
        target_range_bin=config.synth_target_bin,
    )


def simulate_bundle(config: PipelineConfig, subject_id: str = "synthetic") -> RecordingBundle:
    """Generate radar, PPG, and reference recordings from one truth waveform."""
    model = model_from_config(config)
    waveform, truth = generate_waveform(
        model, config.synth_duration_s, config.synth_fs_hz, config.synth_seed
    )
    displacement = waveform.with_samples(waveform.samples * config.synth_displacement_m)
    geometry = geometry_from_config(config)
    truth.displacement = displacement
    truth.displacement_peak_m = float(np.abs(displacement.samples).max())
    truth.target_antenna = geometry.target_antenna
    truth.target_range_bin = geometry.target_range_bin
    radar = synth_radar_cube(
        displacement, geometry, snr_db=config.snr_db_or_none, seed=config.synth_seed
    )
    ppg = synth_ppg(
        waveform,
        decay_tau_s=config.synth_ppg_tau_s,
        noise_sd=config.synth_ppg_noise_sd,
        seed=config.synth_seed,
    )
    reference = synth_reference(
        waveform, config.synth_sbp_mmhg, config.synth_dbp_mmhg, truth.beat_times_s
    )
    return RecordingBundle(
        radar=radar, ppg=ppg, reference=reference, truth=truth, subject_id=subject_id
    )


def _bandpass_spec(config: PipelineConfig) -> BandpassSpec:
    return BandpassSpec(config.filter_order, config.filter_low_hz, config.filter_high_hz)


def process_reference(
    reference: TimeSeries, config: PipelineConfig | None = None
) -> TimeSeries:
    """Reference pressure chain: shared band-pass plus polarity rule."""
    cfg = config if config is not None else PipelineConfig()
    filtered = butterworth_bandpass(reference, _bandpass_spec(cfg))
    try:
        oriented, _ = correct_polarity(
            filtered, cfg.beats_min_separation_s, cfg.beats_prominence_rel
        )
    except ValueError:
        oriented = filtered
    return oriented


def _summarize_modality(
    name: str,
    waveform: TimeSeries,
    config: PipelineConfig,
    selection: BinSelection | None = None,
    raw_for_bp: TimeSeries | None = None,
) -> ModalitySummary:
    train = detect_peaks(
        waveform, config.beats_min_separation_s, config.beats_prominence_rel
    )
    if train.diastolic_indices.size < MIN_BEATS:
        return ModalitySummary(
            name, "insufficient beats", waveform=waveform, train=train, selection=selection
        )
    ibi = extract_ibi(train)
    segments = segment_beats_indexed(waveform, train, config.beats_norm_len)
    if len(segments) < MIN_BEATS:
        return ModalitySummary(
            name, "insufficient beats", waveform=waveform, train=train,
            ibi=ibi, selection=selection,
        )
    seg_list = [seg for _, seg in segments]
    summary = ModalitySummary(
        name,
        "ok",
        waveform=waveform,
        train=train,
        ibi=ibi,
        segments=segments,
        morphology=morphology_metrics(seg_list),
        average_beat=average_beats(seg_list),
        selection=selection,
    )
    if raw_for_bp is not None and train.systolic_indices.size:
        sbp = float(np.mean(raw_for_bp.samples[train.systolic_indices]))
        dbp = float(np.mean(raw_for_bp.samples[train.diastolic_indices]))
        if sbp > dbp > 0:
            summary.bp = BpSummary(sbp, dbp, map_from_bp(sbp, dbp))
    return summary


def _paired_ibis(
    base: ModalitySummary, test: ModalitySummary, pairs: list[tuple[int, int]]
) -> tuple[np.ndarray, np.ndarray]:
    db = base.train.diastolic_indices
    dt = test.train.diastolic_indices
    fb = base.train.sample_rate_hz
    ft = test.train.sample_rate_hz
    base_vals, test_vals = [], []
    for (i1, i2), (j1, j2) in paired_consecutive(pairs):
        ibi_b = (db[i2] - db[i1]) / fb * 1000.0
        ibi_t = (dt[j2] - dt[j1]) / ft * 1000.0
        if IBI_MIN_MS < ibi_b < IBI_MAX_MS and IBI_MIN_MS < ibi_t < IBI_MAX_MS:
            base_vals.append(ibi_b)
            test_vals.append(ibi_t)
    return np.asarray(base_vals), np.asarray(test_vals)


def _paired_segments(
    base: ModalitySummary, test: ModalitySummary, pairs: list[tuple[int, int]]
) -> tuple[list[BeatSegment], list[BeatSegment]]:
    base_by_interval = dict(base.segments)
    test_by_interval = dict(test.segments)
    ref_beats, test_beats = [], []
    for (i1, _), (j1, _) in paired_consecutive(pairs):
        if i1 in base_by_interval and j1 in test_by_interval:
            ref_beats.append(base_by_interval[i1])
            test_beats.append(test_by_interval[j1])
    return ref_beats, test_beats


def _compare_pair(
    base: ModalitySummary, test: ModalitySummary, config: PipelineConfig
) -> PairSummary:
    name = f"{test.name}_vs_{base.name}"
    if base.status != "ok" or test.status != "ok":
        return PairSummary(name, "insufficient beats")
    lag_s, pairs = align_beat_events(
        base.train, test.train, config.align_max_lag_s, config.align_pair_tol_s
    )
    base_ibis, test_ibis = _paired_ibis(base, test, pairs)
    ref_beats, test_beats = _paired_segments(base, test, pairs)
    summary = PairSummary(
        name,
        "ok",
        lag_s=lag_s,
        n_event_pairs=len(pairs),
        n_paired_ibis=len(base_ibis),
        n_paired_beats=len(ref_beats),
    )
    if len(base_ibis) >= 2:
        summary.bland_altman = bland_altman(test_ibis, base_ibis)
    if len(ref_beats) >= 2:
        summary.comparison = compare_modalities(ref_beats, test_beats)
    if summary.bland_altman is None and summary.comparison is None:
        summary.status = "insufficient pairs"
    return summary


def run_compare(bundle: RecordingBundle, config: PipelineConfig | None = None) -> AgreementReport:
    """Process every present modality and compare against the baseline.

    The baseline is the reference when present, else the radar. Each
    modality with fewer than two detected beats is flagged rather than
    failing the whole run.
    """
    config = config if config is not None else PipelineConfig()
    present = bundle.present_modalities()
    if len(present) < 2:
        raise ValueError("need two modalities")
    spec = _bandpass_spec(config)
    modalities: dict[str, ModalitySummary] = {}
    if bundle.reference is not None:
        oriented = process_reference(bundle.reference, config)
        modalities["reference"] = _summarize_modality(
            "reference", oriented, config, raw_for_bp=bundle.reference
        )
    if bundle.radar is not None:
        result = process_radar(
            bundle.radar,
            spec,
            max_bins=config.max_bins_or_none,
            min_separation_s=config.beats_min_separation_s,
            prominence_rel=config.beats_prominence_rel,
        )
        modalities["radar"] = _summarize_modality(
            "radar", result.waveform, config, selection=result.selection
        )
    if bundle.ppg is not None:
        waveform = process_ppg(
            bundle.ppg,
            config.ppg_channel_or_none,
            spec,
            config.beats_min_separation_s,
            config.beats_prominence_rel,
        )
        modalities["ppg"] = _summarize_modality("ppg", waveform, config)

    baseline = "reference" if "reference" in modalities else "radar"
    pairs: dict[str, PairSummary] = {}
    for name, summary in modalities.items():
        if name == baseline:
            continue
        pair = _compare_pair(modalities[baseline], summary, config)
        pairs[pair.name] = pair
    return AgreementReport(
        subject_id=bundle.subject_id,
        baseline=baseline,
        config_echo=config.to_flat_dict(),
        modalities=modalities,
        pairs=pairs,
    )
