"""Landmark audio fingerprinting and two-phase pair matching.

Fingerprinting phase: strict local spectrogram peaks (31 frame x 31 bin
neighborhood, adaptive dB floor) are paired anchor->target within a bounded
zone and packed into 32-bit hashes together with the anchor time offset.

Matching phase: time-offset deltas of hashes shared by two assets are
histogrammed into 50 ms bins; the winning bin's normalized count is tested
against mean + tau * std over occupied bins.  The reported offset is the
median delta inside the winning bin, so good evidence beats the 50 ms
quantization.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from math import ceil, floor
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.ndimage import maximum_filter1d

from .dsp import HOP_S, Spectrogram
from .errors import AlreadyIndexed, NotIndexed

INDEX_MAGIC = b"AVPF"
INDEX_VERSION = 1

# z reported when one bin holds a majority of all matched offsets: the
# mean/std test over occupied bins caps at sqrt(n_support - 1), so near-total
# concentration (clean duplicates, self-match) must be treated as saturation.
Z_SATURATED = 1e6

F1_BITS = 10
DF_BITS = 9
DT_BITS = 13
DF_OFFSET = (1 << (DF_BITS - 1)) - 1  # 255; stored df+255 in [0, 510]
MAX_F1 = (1 << F1_BITS) - 1
MAX_DF = DF_OFFSET
MAX_DT = (1 << DT_BITS) - 1


@dataclass(frozen=True)
class PeakConfig:
    neighborhood: int = 31          # odd, frames x bins
    median_excess_db: float = 10.0  # floor over per-frame median
    max_peaks_per_s: float = 30.0


@dataclass(frozen=True)
class LandmarkConfig:
    fan_out: int = 8
    dt_min_s: float = 0.1
    dt_max_s: float = 2.0
    max_df_bins: int = MAX_DF


@dataclass(frozen=True)
class MatchConfig:
    bin_width_s: float = 0.05
    tau: float = 4.0
    min_matches: int = 10
    decision: str = "max_bin"  # or "bins_above"


class Peak(NamedTuple):
    frame_idx: int
    bin_idx: int
    magnitude_db: float


class LandmarkHash(NamedTuple):
    hash: int
    anchor_offset_s: float


@dataclass
class MatchResult:
    asset_a: str
    asset_b: str
    offset_s: float      # start of B relative to A; positive: B started later
    bin_count: int       # raw matched hashes in the winning bin
    z_score: float
    is_match: bool
    total_matched: int = 0

    def to_dict(self) -> dict:
        return {
            "asset_a": self.asset_a,
            "asset_b": self.asset_b,
            "offset_s": self.offset_s,
            "bin_count": self.bin_count,
            "z_score": self.z_score,
            "is_match": self.is_match,
            "total_matched": self.total_matched,
        }


def pack_hash(f1: int, df: int, dt_frames: int) -> int:
    """Pack (anchor bin, bin delta, frame delta) into 32 bits, bijectively."""
    if not 0 <= f1 <= MAX_F1:
        raise ValueError(f"f1 out of range: {f1}")
    if not -MAX_DF <= df <= MAX_DF:
        raise ValueError(f"df out of range: {df}")
    if not 0 <= dt_frames <= MAX_DT:
        raise ValueError(f"dt out of range: {dt_frames}")
    return (f1 << (DF_BITS + DT_BITS)) | ((df + DF_OFFSET) << DT_BITS) | dt_frames


def unpack_hash(h: int) -> tuple[int, int, int]:
    dt = h & MAX_DT
    df = ((h >> DT_BITS) & ((1 << DF_BITS) - 1)) - DF_OFFSET
    f1 = h >> (DF_BITS + DT_BITS)
    return f1, df, dt


def _excl_center_max(a: np.ndarray, half: int, axis: int) -> np.ndarray:
    """Max over a (2*half+1) window along axis, excluding the center element."""
    x = np.moveaxis(a, axis, 0)
    n = x.shape[0]
    pad = np.full((half,) + x.shape[1:], -np.inf)
    # window t of the front-padded array covers x[t-half .. t-1]
    left = np.lib.stride_tricks.sliding_window_view(
        np.concatenate([pad, x]), half, axis=0
    ).max(axis=-1)[:n]
    # window t+1 of the end-padded array covers x[t+1 .. t+half]
    right = np.lib.stride_tricks.sliding_window_view(
        np.concatenate([x, pad]), half, axis=0
    ).max(axis=-1)[1:]
    return np.moveaxis(np.maximum(left, right), 0, axis)


def extract_peaks(spec: Spectrogram, cfg: PeakConfig = PeakConfig()) -> list[Peak]:
    """Strict local maxima of the dB surface above the per-frame median floor.

    Density is capped at cfg.max_peaks_per_s by keeping the strongest peaks;
    output is sorted by (frame, bin).
    """
    s_db = 20.0 * np.log10(spec.frames + 1e-10)
    half = cfg.neighborhood // 2

    # Max over the full window minus the center cell, assembled from
    # separable passes: (all frames x non-center bins) + (non-center frames
    # at the center bin).
    frames_full = maximum_filter1d(s_db, cfg.neighborhood, axis=0, mode="constant", cval=-np.inf)
    other_bins = _excl_center_max(frames_full, half, axis=1)
    same_bin = _excl_center_max(s_db, half, axis=0)
    neighborhood_max = np.maximum(other_bins, same_bin)

    floor_db = np.median(s_db, axis=1, keepdims=True) + cfg.median_excess_db
    mask = (s_db > neighborhood_max) & (s_db >= floor_db)
    frames_idx, bins_idx = np.nonzero(mask)
    mags = s_db[frames_idx, bins_idx]

    cap = int(round(spec.duration_s * cfg.max_peaks_per_s))
    if len(frames_idx) > cap:
        order = np.lexsort((bins_idx, frames_idx, -mags))[:cap]
        frames_idx, bins_idx, mags = frames_idx[order], bins_idx[order], mags[order]

    peaks = [Peak(int(f), int(b), float(m)) for f, b, m in zip(frames_idx, bins_idx, mags)]
    peaks.sort(key=lambda p: (p.frame_idx, p.bin_idx))
    return peaks


def hash_landmarks(
    peaks: list[Peak], cfg: LandmarkConfig = LandmarkConfig(), hop_s: float = HOP_S
) -> list[LandmarkHash]:
    """Pair each anchor with up to fan_out subsequent peaks in the target zone."""
    dt_min = max(1, ceil(cfg.dt_min_s / hop_s))
    dt_max = min(MAX_DT, floor(cfg.dt_max_s / hop_s))
    out: list[LandmarkHash] = []
    for i, anchor in enumerate(peaks):
        if anchor.bin_idx > MAX_F1:
            continue
        paired = 0
        for target in peaks[i + 1 :]:
            dt = target.frame_idx - anchor.frame_idx
            if dt > dt_max:
                break
            df = target.bin_idx - anchor.bin_idx
            if dt < dt_min or abs(df) > cfg.max_df_bins or target.bin_idx > MAX_F1:
                continue
            out.append(
                LandmarkHash(pack_hash(anchor.bin_idx, df, dt), anchor.frame_idx * hop_s)
            )
            paired += 1
            if paired >= cfg.fan_out:
                break
    return out


def fingerprint_spectrogram(
    spec: Spectrogram,
    peak_cfg: PeakConfig = PeakConfig(),
    landmark_cfg: LandmarkConfig = LandmarkConfig(),
) -> list[LandmarkHash]:
    return hash_landmarks(extract_peaks(spec, peak_cfg), landmark_cfg, spec.hop_s)


class FingerprintIndex:
    """Inverted index hash -> [(asset_id, anchor_offset_s)], plus per-asset maps."""

    def __init__(self):
        self.postings: dict[int, list[tuple[str, float]]] = {}
        self._asset_hashes: dict[str, dict[int, list[float]]] = {}
        self.durations: dict[str, float] = {}

    def __contains__(self, asset_id: str) -> bool:
        return asset_id in self._asset_hashes

    def asset_ids(self) -> list[str]:
        return sorted(self._asset_hashes)

    def index_asset(
        self, asset_id: str, hashes: list[LandmarkHash], duration_s: float, reindex: bool = False
    ) -> None:
        if asset_id in self._asset_hashes:
            if not reindex:
                raise AlreadyIndexed(asset_id)
            self.remove_asset(asset_id)
        per_asset: dict[int, list[float]] = {}
        for h, t in hashes:
            per_asset.setdefault(h, []).append(t)
            self.postings.setdefault(h, []).append((asset_id, t))
        for h in per_asset:
            per_asset[h].sort()
            self.postings[h].sort()
        self._asset_hashes[asset_id] = per_asset
        self.durations[asset_id] = float(duration_s)

    def remove_asset(self, asset_id: str) -> None:
        per_asset = self._asset_hashes.pop(asset_id, None)
        if per_asset is None:
            return
        self.durations.pop(asset_id, None)
        for h in per_asset:
            kept = [p for p in self.postings[h] if p[0] != asset_id]
            if kept:
                self.postings[h] = kept
            else:
                del self.postings[h]

    def hash_count(self, asset_id: str) -> int:
        return sum(len(v) for v in self._asset_hashes.get(asset_id, {}).values())

    # -- persistence ----------------------------------------------------

    def save(self, path) -> None:
        """Binary triples (hash, asset ordinal, offset_ms) sorted, LE, plus a
        JSON side table mapping ordinal -> asset_id (with durations)."""
        path = Path(path)
        ordered_assets = sorted(self._asset_hashes)
        ordinal = {a: i for i, a in enumerate(ordered_assets)}
        triples = []
        for h, posts in self.postings.items():
            for asset_id, t in posts:
                triples.append((h, ordinal[asset_id], int(round(t * 1000))))
        triples.sort()
        with open(path, "wb") as fh:
            fh.write(INDEX_MAGIC + struct.pack("<H", INDEX_VERSION))
            for rec in triples:
                fh.write(struct.pack("<III", *rec))
        side = {
            "assets": {str(i): a for i, a in enumerate(ordered_assets)},
            "durations": {a: self.durations[a] for a in ordered_assets},
        }
        Path(str(path) + ".assets.json").write_text(json.dumps(side, indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "FingerprintIndex":
        path = Path(path)
        side = json.loads(Path(str(path) + ".assets.json").read_text())
        assets = {int(k): v for k, v in side["assets"].items()}
        per_asset: dict[str, list[LandmarkHash]] = {a: [] for a in assets.values()}
        with open(path, "rb") as fh:
            header = fh.read(6)
            if header[:4] != INDEX_MAGIC:
                raise ValueError("not a fingerprint index file")
            blob = fh.read()
        for off in range(0, len(blob), 12):
            h, ordv, ms = struct.unpack_from("<III", blob, off)
            per_asset[assets[ordv]].append(LandmarkHash(h, ms / 1000.0))
        index = cls()
        for asset_id, hashes in per_asset.items():
            index.index_asset(asset_id, hashes, side["durations"][asset_id])
        return index


def _offset_histogram(deltas: np.ndarray, dur_a: float, dur_b: float, bin_w: float):
    n_bins = max(1, ceil((dur_a + dur_b) / bin_w))
    idx = np.clip(np.floor((deltas + dur_b) / bin_w).astype(int), 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return counts, idx


def match_pair(
    index: FingerprintIndex, asset_a: str, asset_b: str, cfg: MatchConfig = MatchConfig()
) -> MatchResult:
    """Decide whether two fingerprinted assets overlap and estimate the shift."""
    for asset in (asset_a, asset_b):
        if asset not in index:
            raise NotIndexed(asset)
    hashes_a = index._asset_hashes[asset_a]
    hashes_b = index._asset_hashes[asset_b]
    if len(hashes_b) < len(hashes_a):
        smaller, larger = hashes_b, hashes_a
        flip = True
    else:
        smaller, larger = hashes_a, hashes_b
        flip = False
    deltas = []
    for h, times_small in smaller.items():
        times_large = larger.get(h)
        if times_large is None:
            continue
        for ts in times_small:
            for tl in times_large:
                deltas.append(ts - tl if not flip else tl - ts)
    deltas = np.asarray(deltas, dtype=np.float64)

    no_match = MatchResult(asset_a, asset_b, 0.0, 0, 0.0, False, 0)
    if len(deltas) == 0:
        return no_match

    dur_a = index.durations[asset_a]
    dur_b = index.durations[asset_b]
    counts, idx = _offset_histogram(deltas, dur_a, dur_b, cfg.bin_width_s)
    total = len(deltas)
    norm = counts / total
    support = norm[counts > 0]
    mu = float(support.mean())
    sigma = float(support.std())
    best = int(np.argmax(counts))
    raw = int(counts[best])
    # mu and sigma include the winning bin, so the statistic caps at
    # sqrt(n_support - 1): with nearly all offsets in one bin it can never
    # reach tau. A bin holding an outright majority is the saturated limit
    # of the same test (single-bin histograms fall out as norm == 1.0).
    if norm[best] > 0.5:
        z = Z_SATURATED
    elif sigma > 0:
        z = float((norm[best] - mu) / sigma)
    else:
        z = 0.0

    if z >= Z_SATURATED:
        decided = True
    elif cfg.decision == "bins_above":
        decided = sigma > 0 and bool(np.sum(norm >= mu + cfg.tau * sigma) >= 1)
    else:
        decided = z >= cfg.tau
    is_match = bool(decided and raw >= cfg.min_matches)
    offset = float(np.median(deltas[idx == best]))
    return MatchResult(asset_a, asset_b, offset, raw, z, is_match, total)


def match_all(
    index: FingerprintIndex, asset_id: str, cfg: MatchConfig = MatchConfig()
) -> list[MatchResult]:
    """Match one asset against every other indexed asset, best first."""
    if asset_id not in index:
        raise NotIndexed(asset_id)
    results = [
        match_pair(index, asset_id, other, cfg)
        for other in index.asset_ids()
        if other != asset_id
    ]
    results.sort(key=lambda r: (-r.z_score, r.asset_b))
    return results
