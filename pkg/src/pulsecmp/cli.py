"""Command-line interface.

Verbs: ``simulate`` (synthetic recording bundle plus truth sidecar),
``process`` (one modality to waveform/peaks/IBI CSVs), ``compare``
(bundle to agreement report JSON plus plot-ready CSVs), ``selftest``
(built-in oracle suite). Exit codes: 0 success, 1 input error,
2 internal failure. All outputs are written atomically.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from pulsecmp.beats import detect_peaks, extract_ibi
from pulsecmp.config import PipelineConfig, load_config
from pulsecmp.formats import (
    FormatError,
    REFERENCE_COLUMN,
    canonical_json,
    format_float,
    read_ground_truth,
    read_ppg_csv,
    read_radar_cube,
    read_series_csv,
    write_ground_truth,
    write_ppg_csv,
    write_radar_cube,
    write_series_csv,
    write_text_atomic,
)
from pulsecmp.ppg import process_ppg
from pulsecmp.radar import process_radar
from pulsecmp.report import (
    AgreementReport,
    RecordingBundle,
    model_from_config,
    process_reference,
    run_compare,
    simulate_bundle,
)
from pulsecmp.selftest import run_selftest
from pulsecmp.signal_core import BandpassSpec

RADAR_FILE = "radar.radc"
PPG_FILE = "ppg.csv"
REFERENCE_FILE = "reference.csv"
TRUTH_FILE = "truth.json"


def _apply_overrides(config: PipelineConfig, pairs: list[str] | None) -> PipelineConfig:
    for item in pairs or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        config.set_key(key.strip(), value)
    return config


def _load_cli_config(args) -> PipelineConfig:
    config = load_config(getattr(args, "config", None))
    return _apply_overrides(config, getattr(args, "set", None))


def write_bundle_dir(bundle: RecordingBundle, config: PipelineConfig, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    if bundle.radar is not None:
        write_radar_cube(bundle.radar, os.path.join(directory, RADAR_FILE))
    if bundle.ppg is not None:
        write_ppg_csv(bundle.ppg, os.path.join(directory, PPG_FILE))
    if bundle.reference is not None:
        write_series_csv(
            os.path.join(directory, REFERENCE_FILE),
            {REFERENCE_COLUMN: bundle.reference.samples},
            bundle.reference.sample_rate_hz,
            bundle.reference.start_time_s,
        )
    if bundle.truth is not None:
        write_ground_truth(
            bundle.truth,
            model_from_config(config),
            config.synth_duration_s,
            config.synth_fs_hz,
            config.synth_displacement_m,
            os.path.join(directory, TRUTH_FILE),
        )


def read_bundle_dir(directory: str, subject_id: str | None = None) -> RecordingBundle:
    radar = ppg = reference = truth = None
    radar_path = os.path.join(directory, RADAR_FILE)
    if os.path.exists(radar_path):
        radar = read_radar_cube(radar_path)
    ppg_path = os.path.join(directory, PPG_FILE)
    if os.path.exists(ppg_path):
        ppg = read_ppg_csv(ppg_path)
    ref_path = os.path.join(directory, REFERENCE_FILE)
    if os.path.exists(ref_path):
        reference = read_series_csv(ref_path, REFERENCE_COLUMN)
    truth_path = os.path.join(directory, TRUTH_FILE)
    if os.path.exists(truth_path):
        truth, _ = read_ground_truth(truth_path)
    return RecordingBundle(
        radar=radar,
        ppg=ppg,
        reference=reference,
        truth=truth,
        subject_id=subject_id or os.path.basename(os.path.normpath(directory)),
    )


def _write_table(path: str, header: list[str], rows: list[list[float]]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) for v in row))
    write_text_atomic(path, "\n".join(lines) + "\n")


def _write_report_files(report: AgreementReport, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    write_text_atomic(
        os.path.join(directory, "report.json"), canonical_json(report.to_dict()) + "\n"
    )
    for name, modality in sorted(report.modalities.items()):
        if modality.ibi is not None and len(modality.ibi):
            _write_table(
                os.path.join(directory, f"ibi_{name}.csv"),
                ["anchor_time_s", "interval_ms"],
                [
                    [t, v]
                    for t, v in zip(modality.ibi.anchor_times_s, modality.ibi.intervals_ms)
                ],
            )
        if modality.average_beat is not None:
            beat = modality.average_beat
            positions = np.linspace(0.0, 1.0, beat.mean.size)
            _write_table(
                os.path.join(directory, f"avg_beat_{name}.csv"),
                ["position", "mean", "sd"],
                [[p, m, s] for p, m, s in zip(positions, beat.mean, beat.sd)],
            )
    for name, pair in sorted(report.pairs.items()):
        if pair.bland_altman is not None:
            _write_table(
                os.path.join(directory, f"ba_points_{name}.csv"),
                ["mean_ms", "diff_ms"],
                [[m, d] for m, d in pair.bland_altman.points],
            )


def cmd_simulate(args) -> int:
    config = _load_cli_config(args)
    if args.seed is not None:
        config.synth_seed = args.seed
    if args.duration is not None:
        config.synth_duration_s = args.duration
    if args.snr_db is not None:
        config.synth_snr_db = args.snr_db
    bundle = simulate_bundle(config, subject_id=args.subject)
    write_bundle_dir(bundle, config, args.out)
    print(f"wrote bundle for {bundle.subject_id!r} to {args.out}")
    return 0


def cmd_process(args) -> int:
    config = _load_cli_config(args)
    os.makedirs(args.out, exist_ok=True)
    spec = BandpassSpec(config.filter_order, config.filter_low_hz, config.filter_high_hz)
    meta: dict = {"modality": args.modality, "input": os.path.basename(args.input)}
    if args.modality == "radar":
        cube = read_radar_cube(args.input)
        result = process_radar(
            cube,
            spec,
            max_bins=config.max_bins_or_none,
            min_separation_s=config.beats_min_separation_s,
            prominence_rel=config.beats_prominence_rel,
        )
        waveform = result.waveform
        meta["selection"] = {
            "antenna_index": result.selection.antenna_index,
            "range_bin": result.selection.range_bin,
            "peak_to_peak": result.selection.peak_to_peak,
            "inverted": result.selection.inverted,
        }
    elif args.modality == "ppg":
        rec = read_ppg_csv(args.input)
        channel = args.channel or config.ppg_channel_or_none
        waveform = process_ppg(
            rec, channel, spec, config.beats_min_separation_s, config.beats_prominence_rel
        )
    elif args.modality == "reference":
        series = read_series_csv(args.input, args.column or REFERENCE_COLUMN)
        waveform = process_reference(series, config)
    else:
        raise ValueError(f"unknown modality {args.modality!r}")

    train = detect_peaks(waveform, config.beats_min_separation_s, config.beats_prominence_rel)
    ibi = extract_ibi(train)
    write_series_csv(
        os.path.join(args.out, "waveform.csv"),
        {"value": waveform.samples},
        waveform.sample_rate_hz,
        waveform.start_time_s,
    )
    rows = [
        [0.0, float(i), waveform.start_time_s + i / waveform.sample_rate_hz, waveform.samples[i]]
        for i in train.systolic_indices
    ] + [
        [1.0, float(i), waveform.start_time_s + i / waveform.sample_rate_hz, waveform.samples[i]]
        for i in train.diastolic_indices
    ]
    rows.sort(key=lambda r: r[1])
    _write_table(
        os.path.join(args.out, "peaks.csv"),
        ["is_diastolic", "index", "time_s", "value"],
        rows,
    )
    _write_table(
        os.path.join(args.out, "ibi.csv"),
        ["anchor_time_s", "interval_ms"],
        [[t, v] for t, v in zip(ibi.anchor_times_s, ibi.intervals_ms)],
    )
    meta["n_systolic"] = int(train.systolic_indices.size)
    meta["n_diastolic"] = int(train.diastolic_indices.size)
    meta["n_ibi"] = len(ibi)
    write_text_atomic(os.path.join(args.out, "meta.json"), canonical_json(meta) + "\n")
    print(f"processed {args.modality}: {meta['n_systolic']} systolic peaks, {len(ibi)} intervals")
    return 0


def _compare_single(bundle_dir: str, out_dir: str, config: PipelineConfig) -> str:
    bundle = read_bundle_dir(bundle_dir)
    report = run_compare(bundle, config)
    _write_report_files(report, out_dir)
    return bundle.subject_id


def cmd_compare(args) -> int:
    config = _load_cli_config(args)
    if args.bundle_root:
        subjects = sorted(
            entry
            for entry in os.listdir(args.bundle_root)
            if os.path.isdir(os.path.join(args.bundle_root, entry))
        )
        if not subjects:
            raise ValueError(f"no subject directories under {args.bundle_root}")
        jobs = max(1, args.jobs)
        tasks = [
            (os.path.join(args.bundle_root, s), os.path.join(args.out, s), config)
            for s in subjects
        ]
        if jobs == 1:
            for t in tasks:
                _compare_single(*t)
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                list(pool.map(_compare_single, *zip(*tasks)))
        print(f"compared {len(subjects)} subjects into {args.out}")
        return 0

    if args.bundle:
        bundle = read_bundle_dir(args.bundle, subject_id=args.subject)
    else:
        radar = read_radar_cube(args.radar) if args.radar else None
        ppg = read_ppg_csv(args.ppg) if args.ppg else None
        reference = (
            read_series_csv(args.reference, REFERENCE_COLUMN) if args.reference else None
        )
        truth = read_ground_truth(args.truth)[0] if args.truth else None
        bundle = RecordingBundle(
            radar=radar,
            ppg=ppg,
            reference=reference,
            truth=truth,
            subject_id=args.subject or "subject",
        )
    report = run_compare(bundle, config)
    _write_report_files(report, args.out)
    statuses = ", ".join(
        f"{name}={summary.status}" for name, summary in sorted(report.modalities.items())
    )
    print(f"report written to {os.path.join(args.out, 'report.json')} ({statuses})")
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest(quick=not args.full)
    failed = 0
    for r in results:
        label = "PASS" if r.passed else "FAIL"
        print(f"[{label}] {r.name}: {r.detail} ({r.elapsed_s:.1f}s)")
        failed += not r.passed
    if failed:
        print(f"{failed} of {len(results)} checks failed")
        return 2
    print(f"all {len(results)} checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pulsecmp",
        description="Multimodal arterial pulse waveform comparison toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="config file (defaults to $PULSECMP_CONFIG)")
        p.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override one config key (repeatable)",
        )

    p_sim = sub.add_parser("simulate", help="generate a synthetic recording bundle")
    p_sim.add_argument("-o", "--out", required=True, help="output bundle directory")
    p_sim.add_argument("--seed", type=int, help="generator seed")
    p_sim.add_argument("--duration", type=float, help="record length in seconds")
    p_sim.add_argument("--snr-db", type=float, help="radar SNR in dB (negative disables noise)")
    p_sim.add_argument("--subject", default="synthetic", help="subject identifier")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_proc = sub.add_parser("process", help="process one modality to CSV outputs")
    p_proc.add_argument("modality", choices=["radar", "ppg", "reference"])
    p_proc.add_argument("input", help="input file (.radc or .csv)")
    p_proc.add_argument("-o", "--out", required=True, help="output directory")
    p_proc.add_argument("--channel", help="PPG channel name")
    p_proc.add_argument("--column", help="reference CSV column name")
    common(p_proc)
    p_proc.set_defaults(func=cmd_process)

    p_cmp = sub.add_parser("compare", help="compare modalities and write a report")
    p_cmp.add_argument("-o", "--out", required=True, help="output directory")
    p_cmp.add_argument("--bundle", help="bundle directory from simulate")
    p_cmp.add_argument("--bundle-root", help="directory of per-subject bundle directories")
    p_cmp.add_argument("--jobs", type=int, default=1, help="parallel subjects for --bundle-root")
    p_cmp.add_argument("--radar", help="radar cube file")
    p_cmp.add_argument("--ppg", help="PPG CSV file")
    p_cmp.add_argument("--reference", help="reference CSV file")
    p_cmp.add_argument("--truth", help="ground-truth sidecar JSON")
    p_cmp.add_argument("--subject", help="subject identifier")
    common(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_self = sub.add_parser("selftest", help="run the built-in oracle suite")
    p_self.add_argument("--full", action="store_true", help="acceptance-scale checks")
    p_self.set_defaults(func=cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, ValueError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
