"""Sub-segment acoustic similarity over fixed 6 s segments.

Each fully-covered 6 s slice of an asset yields one 50-dim feature vector:
20 MFCC means, 20 MFCC standard deviations, then mean/std of spectral
centroid, rolloff(0.85), spectral flux, zero-crossing rate and RMS, all
computed over the segment's STFT frames.  Vectors are stored raw; queries
z-normalize per feature with corpus-wide standard deviations frozen at
build time and rank by weighted Euclidean distance.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dsp
from .catalog import PcmAudio
from .errors import TooShort, UnknownAsset, UnknownSegment

SEGMENT_S = 6.0
N_MFCC = 20
FEATURE_DIM = 50
ROLLOFF_FRACTION = 0.85

FEATURE_MAGIC = b"AVFE"

FEATURE_NAMES = (
    [f"mfcc{i:02d}_mean" for i in range(N_MFCC)]
    + [f"mfcc{i:02d}_std" for i in range(N_MFCC)]
    + [
        "centroid_mean", "centroid_std",
        "rolloff_mean", "rolloff_std",
        "flux_mean", "flux_std",
        "zcr_mean", "zcr_std",
        "rms_mean", "rms_std",
    ]
)


@dataclass
class SegmentFeature:
    asset_id: str
    segment_idx: int        # covers [6*idx, 6*idx + 6) seconds
    vector: np.ndarray      # raw, pre-normalization


@dataclass
class SimilarityHit:
    asset_id: str
    segment_idx: int
    distance: float

    def to_dict(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "segment_idx": self.segment_idx,
            "distance": self.distance,
        }


_BIN_FREQS = np.arange(dsp.N_BINS) * dsp.BIN_HZ


def _frame_view(x: np.ndarray) -> np.ndarray:
    n = dsp.n_stft_frames(len(x))
    return np.lib.stride_tricks.sliding_window_view(x, dsp.WINDOW_SIZE)[:: dsp.HOP_SIZE][:n]


def segment_vector(segment: np.ndarray) -> np.ndarray:
    """50-dim descriptor of one 6 s slice of canonical PCM."""
    spec = dsp.stft(segment)
    mags = spec.frames
    power = mags**2

    coeffs = dsp.mfcc(dsp.mel(spec), N_MFCC)

    total_mag = mags.sum(axis=1)
    total_pow = power.sum(axis=1)
    quiet = total_mag <= 0
    centroid = np.where(quiet, 0.0, (mags * _BIN_FREQS).sum(axis=1) / np.where(quiet, 1.0, total_mag))

    cum = np.cumsum(power, axis=1)
    thresh = ROLLOFF_FRACTION * total_pow[:, None]
    roll_bin = np.argmax(cum >= thresh, axis=1)
    rolloff = np.where(total_pow <= 0, 0.0, roll_bin * dsp.BIN_HZ)

    flux = np.zeros(len(mags))
    if len(mags) > 1:
        flux[1:] = np.sqrt(((mags[1:] - mags[:-1]) ** 2).sum(axis=1))

    frames = _frame_view(segment)
    signs = np.sign(frames)
    zcr = (signs[:, 1:] * signs[:, :-1] < 0).sum(axis=1) / (dsp.WINDOW_SIZE - 1)
    rms = np.sqrt((frames**2).mean(axis=1))

    parts = [coeffs.mean(axis=0), coeffs.std(axis=0)]
    for series in (centroid, rolloff, flux, zcr, rms):
        parts.append([series.mean(), series.std()])
    return np.concatenate([np.atleast_1d(np.asarray(p, dtype=np.float64)) for p in parts])


def extract_segment_features(pcm: PcmAudio) -> list[SegmentFeature]:
    """One vector per fully-covered 6 s segment; trailing partial dropped."""
    if len(pcm.samples) < dsp.WINDOW_SIZE:
        raise TooShort(f"asset {pcm.asset_id} shorter than one STFT window")
    seg_len = int(SEGMENT_S * dsp.SAMPLE_RATE)
    n_segments = len(pcm.samples) // seg_len
    out = []
    for idx in range(n_segments):
        chunk = np.asarray(pcm.samples[idx * seg_len : (idx + 1) * seg_len], dtype=np.float64)
        out.append(SegmentFeature(pcm.asset_id, idx, segment_vector(chunk)))
    return out


class FeatureStore:
    """Corpus-wide segment features with frozen z-normalization statistics."""

    def __init__(self):
        self._vectors: dict[tuple[str, int], np.ndarray] = {}
        self._segments_by_asset: dict[str, list[int]] = {}
        self.means: np.ndarray | None = None
        self.stds: np.ndarray | None = None
        self.stale = True

    def __contains__(self, asset_id: str) -> bool:
        return asset_id in self._segments_by_asset

    def asset_ids(self) -> list[str]:
        return sorted(self._segments_by_asset)

    def n_segments(self, asset_id: str | None = None) -> int:
        if asset_id is None:
            return len(self._vectors)
        return len(self._segments_by_asset.get(asset_id, []))

    def add_asset(self, features: list[SegmentFeature], asset_id: str | None = None) -> None:
        """Register an asset's segment vectors; marks statistics stale."""
        if asset_id is None:
            if not features:
                raise ValueError("asset_id required when adding an empty feature list")
            asset_id = features[0].asset_id
        self._segments_by_asset[asset_id] = sorted(f.segment_idx for f in features)
        for f in features:
            self._vectors[(asset_id, f.segment_idx)] = np.asarray(f.vector, dtype=np.float64)
        self.stale = True

    def remove_asset(self, asset_id: str) -> None:
        for idx in self._segments_by_asset.pop(asset_id, []):
            self._vectors.pop((asset_id, idx), None)
        self.stale = True

    def freeze_stats(self) -> None:
        """Compute and freeze corpus-wide per-feature mean/std."""
        if self._vectors:
            mat = np.stack([self._vectors[k] for k in sorted(self._vectors)])
            self.means = mat.mean(axis=0)
            self.stds = mat.std(axis=0)
        else:
            self.means = np.zeros(FEATURE_DIM)
            self.stds = np.ones(FEATURE_DIM)
        self.stale = False

    def _scale(self) -> np.ndarray:
        if self.stale or self.stds is None:
            self.freeze_stats()
        # constant features carry no information; avoid dividing by ~0
        return np.where(self.stds > 1e-12, self.stds, 1.0)

    def distance(self, key_a: tuple[str, int], key_b: tuple[str, int], weights=None) -> float:
        scale = self._scale()
        w = np.ones(FEATURE_DIM) if weights is None else np.asarray(weights, dtype=np.float64)
        za = self._vectors[key_a] / scale
        zb = self._vectors[key_b] / scale
        return float(np.sqrt((((za - zb) ** 2) * w).sum()))

    def knn(
        self,
        asset_id: str,
        segment_idx: int,
        k: int,
        scope: str = "all",
        weights=None,
    ) -> list[SimilarityHit]:
        """k nearest segments by weighted z-normalized Euclidean distance."""
        if k < 1:
            raise ValueError("k must be >= 1")
        query_key = (asset_id, segment_idx)
        if query_key not in self._vectors:
            raise UnknownSegment(f"{asset_id}#{segment_idx}")
        scale = self._scale()
        w = np.ones(FEATURE_DIM) if weights is None else np.asarray(weights, dtype=np.float64)
        zq = self._vectors[query_key] / scale
        hits = []
        for key in sorted(self._vectors):
            if key == query_key:
                continue
            if scope == "exclude_same_asset" and key[0] == asset_id:
                continue
            zc = self._vectors[key] / scale
            d = float(np.sqrt((((zq - zc) ** 2) * w).sum()))
            hits.append(SimilarityHit(key[0], key[1], d))
        hits.sort(key=lambda h: (h.distance, h.asset_id, h.segment_idx))
        return hits[:k]

    def similar_assets(self, asset_id: str, k: int, weights=None) -> list[tuple[str, float]]:
        """Foreign assets ranked by their best segment-pair distance."""
        if asset_id not in self._segments_by_asset:
            raise UnknownAsset(asset_id)
        best: dict[str, float] = {}
        for q_idx in self._segments_by_asset[asset_id]:
            for hit in self.knn(asset_id, q_idx, k=len(self._vectors), scope="exclude_same_asset", weights=weights):
                if hit.distance < best.get(hit.asset_id, np.inf):
                    best[hit.asset_id] = hit.distance
        ranked = sorted(best.items(), key=lambda kv: (kv[1], kv[0]))
        return ranked[:k]

    # -- persistence ----------------------------------------------------

    def save(self, path) -> None:
        """'AVFE' magic, u32 dim, then (asset ordinal u32, segment u32, dim x f32)."""
        path = Path(path)
        assets = self.asset_ids()
        ordinal = {a: i for i, a in enumerate(assets)}
        with open(path, "wb") as fh:
            fh.write(FEATURE_MAGIC + struct.pack("<I", FEATURE_DIM))
            for key in sorted(self._vectors, key=lambda k: (ordinal[k[0]], k[1])):
                fh.write(struct.pack("<II", ordinal[key[0]], key[1]))
                fh.write(self._vectors[key].astype("<f4").tobytes())
        if self.stale or self.stds is None:
            self.freeze_stats()
        side = {
            "assets": {str(i): a for a, i in ordinal.items()},
            "segments": {a: self._segments_by_asset[a] for a in assets},
            "means": list(self.means),
            "stds": list(self.stds),
        }
        Path(str(path) + ".stats.json").write_text(json.dumps(side, indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "FeatureStore":
        path = Path(path)
        side = json.loads(Path(str(path) + ".stats.json").read_text())
        assets = {int(i): a for i, a in side["assets"].items()}
        store = cls()
        with open(path, "rb") as fh:
            header = fh.read(8)
            if header[:4] != FEATURE_MAGIC:
                raise ValueError("not a feature store file")
            (dim,) = struct.unpack("<I", header[4:8])
            rec_size = 8 + 4 * dim
            blob = fh.read()
        for off in range(0, len(blob), rec_size):
            ordv, seg = struct.unpack_from("<II", blob, off)
            vec = np.frombuffer(blob, dtype="<f4", count=dim, offset=off + 8).astype(np.float64)
            store._vectors[(assets[ordv], seg)] = vec
        for asset_id, segs in side["segments"].items():
            store._segments_by_asset[asset_id] = list(segs)
        store.means = np.asarray(side["means"], dtype=np.float64)
        store.stds = np.asarray(side["stds"], dtype=np.float64)
        store.stale = False
        return store
