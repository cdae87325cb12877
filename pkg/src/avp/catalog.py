"""Corpus catalog: ingest media files, decode to canonical PCM, persist.

Layout under the corpus root:

    catalog/<asset_id>.json   one record per asset
    pcm/<asset_id>.f32        raw little-endian float32 mono 44.1 kHz, no header
    media/<asset_id>.<ext>    original bytes

WAV is decoded in-process; any other container needs a configured external
transcoder command template (e.g. ``ffmpeg -y -i {input} {output}``) that
produces a WAV.  Ingest is idempotent on file content: re-ingesting identical
bytes returns the existing asset and merges metadata last-writer-wins.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import shlex
import shutil
import subprocess
import tempfile
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .dsp import SAMPLE_RATE
from .errors import CorruptMedia, UnknownAsset, UnsupportedFormat

# Kaiser beta 7.0 gives ~72 dB stopband for the polyphase anti-alias filter.
RESAMPLE_WINDOW = ("kaiser", 7.0)


@dataclass
class MediaAsset:
    asset_id: str
    source_path: str
    duration_s: float
    sample_rate_hz: int   # rate of the source media, not the canonical PCM
    channels: int
    content_hash: str
    metadata: dict = field(default_factory=dict)
    ingest_time: str = ""

    def to_dict(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "source_path": self.source_path,
            "duration_s": self.duration_s,
            "sample_rate_hz": self.sample_rate_hz,
            "channels": self.channels,
            "content_hash": self.content_hash,
            "metadata": dict(self.metadata),
            "ingest_time": self.ingest_time,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MediaAsset":
        return cls(**d)


@dataclass
class PcmAudio:
    """Canonical analysis audio: mono float32 in [-1, 1] at 44.1 kHz."""

    asset_id: str
    samples: np.ndarray
    sample_rate_hz: int = SAMPLE_RATE

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def _as_float(data: np.ndarray) -> np.ndarray:
    """Scale integer WAV payloads to float in [-1, 1]."""
    if data.dtype == np.uint8:
        return (data.astype(np.float64) - 128.0) / 128.0
    if np.issubdtype(data.dtype, np.integer):
        scale = float(np.iinfo(data.dtype).max) + 1.0
        return data.astype(np.float64) / scale
    return data.astype(np.float64)


def decode_wav_bytes(raw: bytes) -> tuple[np.ndarray, int, int]:
    """Decode WAV bytes -> (mono float64 samples at source rate, rate, channels)."""
    try:
        rate, data = wavfile.read(io.BytesIO(raw))
    except Exception as exc:
        raise CorruptMedia(f"WAV decode failed: {exc}") from exc
    if data.size == 0:
        raise CorruptMedia("empty audio payload")
    x = _as_float(data)
    channels = 1 if x.ndim == 1 else x.shape[1]
    if x.ndim > 1:
        x = x.mean(axis=1)
    return x, int(rate), channels


def resample_to_canonical(x: np.ndarray, rate: int) -> np.ndarray:
    """Windowed-sinc polyphase resample to 44.1 kHz, clipped to [-1, 1]."""
    if rate != SAMPLE_RATE:
        from math import gcd

        g = gcd(SAMPLE_RATE, rate)
        x = resample_poly(x, SAMPLE_RATE // g, rate // g, window=RESAMPLE_WINDOW)
    return np.clip(x, -1.0, 1.0).astype(np.float32)


def _is_wav(raw: bytes) -> bool:
    return len(raw) >= 12 and raw[:4] == b"RIFF" and raw[8:12] == b"WAVE"


class Catalog:
    """Persistent asset catalog rooted at a directory."""

    def __init__(self, root, transcoder_template: str | None = None):
        self.root = Path(root)
        self.transcoder_template = transcoder_template
        self._lock = threading.RLock()
        for sub in ("catalog", "pcm", "media"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._assets: dict[str, MediaAsset] = {}
        self._by_hash: dict[str, str] = {}
        self._pcm_cache: dict[str, PcmAudio] = {}
        for rec in sorted((self.root / "catalog").glob("*.json")):
            asset = MediaAsset.from_dict(json.loads(rec.read_text()))
            self._assets[asset.asset_id] = asset
            self._by_hash[asset.content_hash] = asset.asset_id

    # -- ingest ---------------------------------------------------------

    def ingest(self, path, metadata: dict | None = None) -> MediaAsset:
        path = Path(path)
        raw = path.read_bytes()
        content_hash = hashlib.sha256(raw).hexdigest()
        with self._lock:
            existing_id = self._by_hash.get(content_hash)
            if existing_id is not None:
                asset = self._assets[existing_id]
                if metadata:
                    asset.metadata.update(metadata)  # last writer wins per key
                    self._persist(asset)
                return asset

        wav_bytes = raw if _is_wav(raw) else self._transcode(path, raw)
        samples, src_rate, channels = decode_wav_bytes(wav_bytes)
        pcm = resample_to_canonical(samples, src_rate)
        if len(pcm) == 0:
            raise CorruptMedia("decoded to zero samples")

        asset_id = content_hash[:16]
        asset = MediaAsset(
            asset_id=asset_id,
            source_path=str(path),
            duration_s=len(pcm) / SAMPLE_RATE,
            sample_rate_hz=src_rate,
            channels=channels,
            content_hash=content_hash,
            metadata=dict(metadata or {}),
            ingest_time=datetime.now(timezone.utc).isoformat(),
        )
        with self._lock:
            # lost the race to a parallel ingest of the same bytes: dedup
            if content_hash in self._by_hash:
                winner = self._assets[self._by_hash[content_hash]]
                if metadata:
                    winner.metadata.update(metadata)
                    self._persist(winner)
                return winner
            (self.root / "media" / (asset_id + path.suffix)).write_bytes(raw)
            pcm.tofile(self.root / "pcm" / f"{asset_id}.f32")
            self._assets[asset_id] = asset
            self._by_hash[content_hash] = asset_id
            self._persist(asset)
        return asset

    def _transcode(self, path: Path, raw: bytes) -> bytes:
        if not self.transcoder_template:
            raise UnsupportedFormat(f"no decoder for {path.name} and no transcoder configured")
        with tempfile.TemporaryDirectory() as tmp:
            src = Path(tmp) / ("input" + path.suffix)
            dst = Path(tmp) / "output.wav"
            src.write_bytes(raw)
            cmd = [
                tok.format(input=str(src), output=str(dst))
                for tok in shlex.split(self.transcoder_template)
            ]
            proc = subprocess.run(cmd, capture_output=True)
            if proc.returncode != 0 or not dst.exists():
                raise CorruptMedia(
                    f"transcoder failed ({proc.returncode}): {proc.stderr.decode(errors='replace')[:200]}"
                )
            return dst.read_bytes()

    def _persist(self, asset: MediaAsset) -> None:
        rec = self.root / "catalog" / f"{asset.asset_id}.json"
        rec.write_text(json.dumps(asset.to_dict(), indent=2, sort_keys=True))

    # -- lookups --------------------------------------------------------

    def get(self, asset_id: str) -> MediaAsset:
        try:
            return self._assets[asset_id]
        except KeyError:
            raise UnknownAsset(asset_id) from None

    def __contains__(self, asset_id: str) -> bool:
        return asset_id in self._assets

    def duration_of(self, asset_id: str) -> float:
        return self.get(asset_id).duration_s

    def media_path(self, asset_id: str) -> Path:
        self.get(asset_id)
        hits = list((self.root / "media").glob(asset_id + ".*")) or [
            self.root / "media" / asset_id
        ]
        return hits[0]

    def get_audio(self, asset_id: str) -> PcmAudio:
        self.get(asset_id)
        cached = self._pcm_cache.get(asset_id)
        if cached is None:
            samples = np.fromfile(self.root / "pcm" / f"{asset_id}.f32", dtype="<f4")
            samples.flags.writeable = False
            cached = PcmAudio(asset_id=asset_id, samples=samples)
            self._pcm_cache[asset_id] = cached
        return cached

    def list_assets(self, metadata_filter: dict | None = None) -> list[MediaAsset]:
        out = []
        for asset in self._assets.values():
            if metadata_filter and any(
                asset.metadata.get(k) != v for k, v in metadata_filter.items()
            ):
                continue
            out.append(asset)
        out.sort(key=lambda a: (a.ingest_time, a.asset_id))
        return out

    def asset_ids(self) -> list[str]:
        return sorted(self._assets)
