"""Pipeline configuration: defaults, flat key=value files, overrides.

Config files are plain text, one ``key = value`` per line with ``#``
comments. Keys use dotted sections (``filter.low_hz``). The environment
variable ``PULSECMP_CONFIG`` names a default config file picked up when
no explicit path is given.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

ENV_CONFIG = "PULSECMP_CONFIG"


@dataclass
class PipelineConfig:
    """All tunable pipeline parameters with their defaults."""

    filter_order: int = 4
    filter_low_hz: float = 0.5
    filter_high_hz: float = 8.0
    beats_min_separation_s: float = 0.33
    beats_prominence_rel: float = 0.3
    beats_norm_len: int = 200
    align_max_lag_s: float = 5.0
    align_pair_tol_s: float = 0.25
    radar_max_bins: int = 0  # 0 searches every informative bin
    ppg_channel: str = ""  # empty selects the default channel
    synth_duration_s: float = 60.0
    synth_fs_hz: float = 200.0
    synth_seed: int = 1
    synth_snr_db: float = 20.0  # negative disables noise
    synth_hr_bpm: float = 62.0
    synth_ibi_sd_ms: float = 30.0
    synth_displacement_m: float = 100e-6
    synth_antennas: int = 3
    synth_chirps: int = 16
    synth_samples: int = 64
    synth_target_antenna: int = 1
    synth_target_bin: int = 7
    synth_ppg_tau_s: float = 0.25
    synth_ppg_noise_sd: float = 0.01
    synth_sbp_mmhg: float = 120.0
    synth_dbp_mmhg: float = 80.0

    _KEYMAP = {
        "filter.order": "filter_order",
        "filter.low_hz": "filter_low_hz",
        "filter.high_hz": "filter_high_hz",
        "beats.min_separation_s": "beats_min_separation_s",
        "beats.prominence_rel": "beats_prominence_rel",
        "beats.norm_len": "beats_norm_len",
        "align.max_lag_s": "align_max_lag_s",
        "align.pair_tol_s": "align_pair_tol_s",
        "radar.max_bins": "radar_max_bins",
        "ppg.channel": "ppg_channel",
        "synth.duration_s": "synth_duration_s",
        "synth.fs_hz": "synth_fs_hz",
        "synth.seed": "synth_seed",
        "synth.snr_db": "synth_snr_db",
        "synth.hr_bpm": "synth_hr_bpm",
        "synth.ibi_sd_ms": "synth_ibi_sd_ms",
        "synth.displacement_m": "synth_displacement_m",
        "synth.antennas": "synth_antennas",
        "synth.chirps": "synth_chirps",
        "synth.samples": "synth_samples",
        "synth.target_antenna": "synth_target_antenna",
        "synth.target_bin": "synth_target_bin",
        "synth.ppg_tau_s": "synth_ppg_tau_s",
        "synth.ppg_noise_sd": "synth_ppg_noise_sd",
        "synth.sbp_mmhg": "synth_sbp_mmhg",
        "synth.dbp_mmhg": "synth_dbp_mmhg",
    }

    def set_key(self, key: str, raw: str) -> None:
        """Assign one dotted key from its string representation."""
        attr = self._KEYMAP.get(key)
        if attr is None:
            raise ValueError(f"unknown config key {key!r}")
        current = getattr(self, attr)
        if isinstance(current, bool):
            value = raw.strip().lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            value = int(raw)
        elif isinstance(current, float):
            value = float(raw)
        else:
            value = raw.strip()
        setattr(self, attr, value)

    def to_flat_dict(self) -> dict:
        """Dotted-key view of every parameter (for the report echo)."""
        inverse = {attr: key for key, attr in self._KEYMAP.items()}
        out = {}
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            out[inverse[f.name]] = getattr(self, f.name)
        return dict(sorted(out.items()))

    @property
    def snr_db_or_none(self) -> float | None:
        return None if self.synth_snr_db < 0 else self.synth_snr_db

    @property
    def max_bins_or_none(self) -> int | None:
        return None if self.radar_max_bins <= 0 else self.radar_max_bins

    @property
    def ppg_channel_or_none(self) -> str | None:
        return self.ppg_channel or None


def parse_config_text(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse ``key = value`` lines into a config, starting from ``base``."""
    cfg = base if base is not None else PipelineConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, raw = stripped.split("=", 1)
        cfg.set_key(key.strip(), raw)
    return cfg


def load_config(path: str | None = None) -> PipelineConfig:
    """Load a config file, falling back to $PULSECMP_CONFIG, then defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    if path is None:
        return PipelineConfig()
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())
