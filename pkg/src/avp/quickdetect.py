"""Heuristic quick-analysis detectors emitting schema-conformant artifacts.

These are the fast first-pass triage hooks: an impulse detector (RMS jump
over a short local median, gunshot/explosion stand-in) and a sustained-tone
detector (band-limited energy concentration, alarm/siren stand-in).  Labels
are deliberately distinct from the canonical model vocabulary so heuristic
output is never mistaken for model output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import median_filter

from . import dsp
from .catalog import PcmAudio
from .events import SCHEMA_VERSION, event_content_id

IMPULSE_LABEL = "impulse"
SUSTAINED_LABEL = "sustained_tone"

IMPULSE_GENERATOR = {"name": "quickdetect.impulse", "version": "1", "kind": "audio"}
SUSTAINED_GENERATOR = {"name": "quickdetect.sustained", "version": "1", "kind": "audio"}


@dataclass(frozen=True)
class DetectorConfig:
    impulse_db_threshold: float = 15.0   # dB rise over the local median
    median_window_s: float = 0.2
    rms_frame_s: float = 0.02
    sustain_band_hz: tuple[float, float] = (500.0, 2000.0)
    sustain_min_s: float = 2.0
    sustain_fraction: float = 0.6
    min_event_gap_s: float = 0.5

    def __post_init__(self):
        if self.impulse_db_threshold <= 0 or self.sustain_min_s <= 0:
            raise ValueError("thresholds must be positive")
        if not 0 < self.sustain_band_hz[0] < self.sustain_band_hz[1] <= dsp.SAMPLE_RATE / 2:
            raise ValueError("sustain band must lie within Nyquist")


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Contiguous True runs as (start, end_exclusive) frame indices."""
    idx = np.flatnonzero(np.diff(np.r_[0, mask.astype(np.int8), 0]))
    return list(zip(idx[0::2], idx[1::2]))


def _merge_events(events: list[dict], gap_s: float) -> list[dict]:
    merged: list[dict] = []
    for ev in sorted(events, key=lambda e: e["start_s"]):
        if merged and ev["start_s"] - merged[-1]["end_s"] < gap_s:
            merged[-1]["end_s"] = max(merged[-1]["end_s"], ev["end_s"])
            merged[-1]["confidence"] = max(merged[-1]["confidence"], ev["confidence"])
        else:
            merged.append(dict(ev))
    return merged


def _finalize(asset_id: str, generator: dict, label: str, events: list[dict]) -> dict:
    for ev in events:
        for k in ("start_s", "end_s", "confidence"):
            ev[k] = float(ev[k])
        ev["id"] = event_content_id(asset_id, generator, label, ev["start_s"], ev["end_s"])
        ev["label"] = label
    return {
        "schema_version": SCHEMA_VERSION,
        "asset_id": asset_id,
        "generator": dict(generator),
        "events": [
            {k: ev[k] for k in ("id", "label", "start_s", "end_s", "confidence")}
            for ev in events
        ],
    }


def detect_impulses(pcm: PcmAudio, cfg: DetectorConfig = DetectorConfig()) -> dict:
    """Transient detector: short-time RMS rising sharply over its local median."""
    frame_len = int(round(cfg.rms_frame_s * pcm.sample_rate_hz))
    n_frames = len(pcm.samples) // frame_len
    events: list[dict] = []
    if n_frames > 0:
        frames = np.asarray(pcm.samples[: n_frames * frame_len], dtype=np.float64)
        rms = np.sqrt((frames.reshape(n_frames, frame_len) ** 2).mean(axis=1))
        rms_db = 20.0 * np.log10(rms + 1e-10)
        med_frames = max(1, int(round(cfg.median_window_s / cfg.rms_frame_s)) | 1)
        local_med = median_filter(rms_db, size=med_frames, mode="nearest")
        rise = rms_db - local_med
        for start, end in _runs(rise >= cfg.impulse_db_threshold):
            events.append(
                {
                    "start_s": start * cfg.rms_frame_s,
                    "end_s": end * cfg.rms_frame_s,
                    "confidence": min(1.0, float(rise[start:end].max()) / 30.0),
                }
            )
        events = _merge_events(events, cfg.min_event_gap_s)
    return _finalize(pcm.asset_id, IMPULSE_GENERATOR, IMPULSE_LABEL, events)


def detect_sustained(pcm: PcmAudio, cfg: DetectorConfig = DetectorConfig()) -> dict:
    """Tonal detector: spectral energy concentrated in the sustain band."""
    events: list[dict] = []
    if len(pcm.samples) >= dsp.WINDOW_SIZE:
        spec = dsp.stft(np.asarray(pcm.samples, dtype=np.float64))
        power = spec.frames**2
        freqs = np.arange(dsp.N_BINS) * dsp.BIN_HZ
        band = (freqs >= cfg.sustain_band_hz[0]) & (freqs <= cfg.sustain_band_hz[1])
        total = power.sum(axis=1)
        fraction = np.where(total > 0, power[:, band].sum(axis=1) / np.where(total > 0, total, 1.0), 0.0)
        min_frames = int(np.ceil(cfg.sustain_min_s / spec.hop_s))
        for start, end in _runs(fraction >= cfg.sustain_fraction):
            if end - start < min_frames:
                continue
            events.append(
                {
                    "start_s": start * spec.hop_s,
                    "end_s": end * spec.hop_s,
                    "confidence": float(fraction[start:end].mean()),
                }
            )
        events = _merge_events(events, cfg.min_event_gap_s)
    return _finalize(pcm.asset_id, SUSTAINED_GENERATOR, SUSTAINED_LABEL, events)


def write_artifact(doc: dict, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = f"{doc['generator']['name']}_{doc['asset_id']}.json"
    path = out_dir / name
    path.write_text(json.dumps(doc, indent=2, sort_keys=True))
    return path
