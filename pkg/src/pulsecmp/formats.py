"""File formats: radar cube binary, time-series CSV, truth sidecar JSON.

Radar cube container (all fields little-endian):

    magic            4 bytes, b"RADC"
    version          u32 (currently 1)
    frames           u32
    antennas         u32
    chirps           u32
    samples          u32
    frame_rate_hz    f64
    fast_time_rate   f64
    carrier_hz       f64
    metadata_len     u32
    metadata         UTF-8 JSON object of string pairs
    payload          f32 array, C order [frame][antenna][chirp][sample]

Payload values are stored as 32-bit floats and promoted to 64-bit on
load. CSV series carry a ``time_s`` column plus one column per channel;
sampling must be uniform to within 1 % jitter of the median step.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile

import numpy as np

from pulsecmp.ppg import PpgRecording
from pulsecmp.radar import RadarCube
from pulsecmp.signal_core import TimeSeries
from pulsecmp.synth import PulseModel, SynthGroundTruth, generate_waveform

MAGIC = b"RADC"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIIdddI")
MAX_CUBE_ELEMENTS = 2**34  # 16 Gi float32 values (64 GiB); beyond is corrupt

REFERENCE_COLUMN = "pressure_mmHg"


class FormatError(ValueError):
    """File-format violation with a short machine-readable code."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        super().__init__(f"{code}: {detail}" if detail else code)


def write_bytes_atomic(path: str, payload: bytes) -> None:
    """Write via a temp file and rename, so readers never see partial files."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text_atomic(path: str, text: str) -> None:
    write_bytes_atomic(path, text.encode("utf-8"))


def write_radar_cube(cube: RadarCube, path: str) -> None:
    metadata = json.dumps(cube.metadata, sort_keys=True).encode("utf-8")
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        cube.n_frames,
        cube.n_antennas,
        cube.n_chirps,
        cube.n_samples,
        cube.frame_rate_hz,
        cube.fast_time_rate_hz,
        cube.carrier_hz,
        len(metadata),
    )
    payload = np.ascontiguousarray(cube.data, dtype="<f4").tobytes()
    write_bytes_atomic(path, header + metadata + payload)


def read_radar_cube(path: str) -> RadarCube:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError("truncated payload", "file shorter than header")
    magic, version, frames, antennas, chirps, samples, frame_rate, fast_rate, carrier, meta_len = (
        _HEADER.unpack_from(blob)
    )
    if magic != MAGIC:
        raise FormatError("bad magic", f"got {magic!r}")
    if version != VERSION:
        raise FormatError("unsupported version", str(version))
    dims = (frames, antennas, chirps, samples)
    if min(dims) < 1 or math.prod(dims) > MAX_CUBE_ELEMENTS:
        raise FormatError("dimension overflow", f"dims {dims}")
    offset = _HEADER.size
    if len(blob) < offset + meta_len:
        raise FormatError("truncated payload", "metadata cut short")
    try:
        metadata = json.loads(blob[offset : offset + meta_len].decode("utf-8")) if meta_len else {}
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError("bad metadata", str(exc)) from exc
    offset += meta_len
    expected = math.prod(dims) * 4
    if len(blob) - offset != expected:
        raise FormatError(
            "truncated payload",
            f"expected {expected} payload bytes, found {len(blob) - offset}",
        )
    data = np.frombuffer(blob, dtype="<f4", count=math.prod(dims), offset=offset)
    return RadarCube(
        data=data.reshape(dims).astype(np.float64),
        frame_rate_hz=frame_rate,
        fast_time_rate_hz=fast_rate,
        carrier_hz=carrier,
        metadata=metadata,
    )


def format_float(x: float) -> str:
    """Serialize a float with 17 significant digits (round-trip exact)."""
    if isinstance(x, float) and not math.isfinite(x):
        raise ValueError("non-finite value in output")
    return format(float(x), ".17g")


def canonical_json(obj) -> str:
    """Deterministic JSON: fixed key order, 17-significant-digit floats."""
    pieces: list[str] = []
    _emit_json(obj, pieces)
    return "".join(pieces)


def _emit_json(obj, out: list[str]) -> None:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append(json.dumps(bool(obj) if obj is not None else None))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(key), ensure_ascii=False))
            out.append(":")
            _emit_json(value, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        for i, value in enumerate(seq):
            if i:
                out.append(",")
            _emit_json(value, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def _parse_time_table(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise FormatError("bad header", "empty file")
        names = [c.strip() for c in header.split(",")]
        if names[0] != "time_s":
            raise FormatError("bad header", "first column must be time_s")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(names):
                raise FormatError("bad row", f"line {lineno}: wrong column count")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise FormatError("bad row", f"line {lineno}: {exc}") from exc
    if len(rows) < 2:
        raise FormatError("too short", "need at least two rows")
    return names, np.asarray(rows, dtype=np.float64)


def _uniform_rate(times: np.ndarray) -> float:
    dt = np.diff(times)
    if np.any(dt <= 0):
        raise FormatError("non-monotonic", "time column must strictly increase")
    median = float(np.median(dt))
    if np.max(np.abs(dt - median)) > 0.01 * median:
        raise FormatError("non-uniform sampling", "time step jitter exceeds 1%")
    return 1.0 / median


def read_series_csv(path: str, column: str) -> TimeSeries:
    """Read one named column of a time-series CSV as a TimeSeries."""
    names, table = _parse_time_table(path)
    if column not in names[1:]:
        raise FormatError(
            "missing column", f"{column!r} not in columns: {', '.join(names[1:])}"
        )
    rate = _uniform_rate(table[:, 0])
    values = table[:, names.index(column)]
    return TimeSeries(values, rate, start_time_s=float(table[0, 0]))


def write_series_csv(path: str, columns: dict[str, np.ndarray], sample_rate_hz: float,
                     start_time_s: float = 0.0) -> None:
    """Write named channels sharing one uniform time base."""
    arrays = {name: np.asarray(vals, dtype=np.float64) for name, vals in columns.items()}
    lengths = {arr.size for arr in arrays.values()}
    if len(lengths) != 1:
        raise ValueError("all columns must have equal length")
    n = lengths.pop()
    times = start_time_s + np.arange(n) / sample_rate_hz
    names = list(arrays)
    lines = ["time_s," + ",".join(names)]
    for i in range(n):
        row = [format_float(times[i])] + [format_float(arrays[name][i]) for name in names]
        lines.append(",".join(row))
    write_text_atomic(path, "\n".join(lines) + "\n")


def read_ppg_csv(path: str) -> PpgRecording:
    """Read every non-time column of a CSV as one PPG channel."""
    names, table = _parse_time_table(path)
    rate = _uniform_rate(table[:, 0])
    start = float(table[0, 0])
    channels = {
        name: TimeSeries(table[:, idx], rate, start)
        for idx, name in enumerate(names)
        if idx > 0
    }
    return PpgRecording(channels=channels)


def write_ppg_csv(rec: PpgRecording, path: str) -> None:
    first = next(iter(rec.channels.values()))
    write_series_csv(
        path,
        {name: ts.samples for name, ts in sorted(rec.channels.items())},
        first.sample_rate_hz,
        first.start_time_s,
    )


def write_ground_truth(
    truth: SynthGroundTruth,
    model: PulseModel,
    duration_s: float,
    fs_hz: float,
    displacement_amp_m: float,
    path: str,
) -> None:
    """JSON sidecar carrying everything needed to reconstruct the truth."""
    doc = {
        "seed": int(truth.seed),
        "duration_s": duration_s,
        "fs_hz": fs_hz,
        "displacement_amp_m": displacement_amp_m,
        "target_antenna": int(truth.target_antenna),
        "target_range_bin": int(truth.target_range_bin),
        "model": {
            "hr_mean_bpm": model.hr_mean_bpm,
            "ibi_sd_ms": model.ibi_sd_ms,
            "systolic_amp": model.systolic_amp,
            "augmentation_amp": model.augmentation_amp,
            "dicrotic_amp": model.dicrotic_amp,
            "systolic_center": model.systolic_center,
            "augmentation_center": model.augmentation_center,
            "dicrotic_center": model.dicrotic_center,
            "systolic_width": model.systolic_width,
            "augmentation_width": model.augmentation_width,
            "dicrotic_width": model.dicrotic_width,
        },
        "beat_times_s": truth.beat_times_s,
        "systolic_times_s": truth.systolic_times_s,
        "displacement_peak_m": truth.displacement_peak_m,
    }
    write_text_atomic(path, canonical_json(doc) + "\n")


def read_ground_truth(path: str) -> tuple[SynthGroundTruth, PulseModel]:
    """Rebuild the ground truth from a sidecar (deterministic regeneration)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    model = PulseModel(**doc["model"])
    waveform, truth = generate_waveform(model, doc["duration_s"], doc["fs_hz"], doc["seed"])
    amp = float(doc["displacement_amp_m"])
    displacement = waveform.with_samples(waveform.samples * amp)
    truth.displacement = displacement
    truth.displacement_peak_m = float(np.abs(displacement.samples).max())
    truth.target_antenna = int(doc["target_antenna"])
    truth.target_range_bin = int(doc["target_range_bin"])
    stored = np.asarray(doc["beat_times_s"], dtype=np.float64)
    if stored.size != truth.beat_times_s.size or not np.allclose(
        stored, truth.beat_times_s, atol=1e-9
    ):
        raise FormatError("truth mismatch", "sidecar beat times do not regenerate")
    return truth, model
