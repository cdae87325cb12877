import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avp import dsp, synth
from avp.dsp import HOP_S, Spectrogram
from avp.errors import AlreadyIndexed, NotIndexed
from avp.fingerprint import (
    MAX_DF,
    MAX_DT,
    MAX_F1,
    FingerprintIndex,
    LandmarkConfig,
    LandmarkHash,
    MatchConfig,
    Peak,
    PeakConfig,
    extract_peaks,
    fingerprint_spectrogram,
    hash_landmarks,
    match_all,
    match_pair,
    pack_hash,
    unpack_hash,
)

# -- hash packing -------------------------------------------------------


@settings(max_examples=300, deadline=None)
@given(
    st.integers(0, MAX_F1),
    st.integers(-MAX_DF, MAX_DF),
    st.integers(0, MAX_DT),
)
def test_pack_unpack_round_trip(f1, df, dt):
    h = pack_hash(f1, df, dt)
    assert 0 <= h < 2**32
    assert unpack_hash(h) == (f1, df, dt)


def test_pack_hash_range_checks():
    for bad in [(-1, 0, 0), (MAX_F1 + 1, 0, 0), (0, MAX_DF + 1, 0), (0, -MAX_DF - 1, 0), (0, 0, MAX_DT + 1)]:
        with pytest.raises(ValueError):
            pack_hash(*bad)


def test_pack_hash_distinct():
    seen = {pack_hash(f1, df, dt) for f1 in (0, 5, MAX_F1) for df in (-MAX_DF, -1, 0, 3, MAX_DF) for dt in (0, 7, MAX_DT)}
    assert len(seen) == 3 * 5 * 3


# -- peak extraction ----------------------------------------------------


def brute_force_peaks(spec: Spectrogram, cfg: PeakConfig) -> list[Peak]:
    """Literal O(n * k^2) reference for strict-local-max peak extraction."""
    s_db = 20.0 * np.log10(spec.frames + 1e-10)
    n_frames, n_bins = s_db.shape
    half = cfg.neighborhood // 2
    floor_db = np.median(s_db, axis=1) + cfg.median_excess_db
    found = []
    for f in range(n_frames):
        for b in range(n_bins):
            v = s_db[f, b]
            if v < floor_db[f]:
                continue
            strict = True
            for df in range(-half, half + 1):
                for db_ in range(-half, half + 1):
                    if df == 0 and db_ == 0:
                        continue
                    ff, bb = f + df, b + db_
                    if 0 <= ff < n_frames and 0 <= bb < n_bins and s_db[ff, bb] >= v:
                        strict = False
                        break
                if not strict:
                    break
            if strict:
                found.append(Peak(f, b, float(v)))
    cap = int(round(spec.duration_s * cfg.max_peaks_per_s))
    if len(found) > cap:
        found.sort(key=lambda p: (-p.magnitude_db, p.frame_idx, p.bin_idx))
        found = found[:cap]
    found.sort(key=lambda p: (p.frame_idx, p.bin_idx))
    return found


@pytest.mark.parametrize("seed,neighborhood,excess_db", [(0, 31, 10.0), (1, 31, 3.0), (2, 5, 6.0), (3, 7, 0.0)])
def test_peaks_match_brute_force(seed, neighborhood, excess_db):
    rng = np.random.default_rng(seed)
    mags = np.abs(rng.normal(0.0, 1.0, (70, 48))) + 1e-6
    spec = Spectrogram(frames=mags)
    cfg = PeakConfig(neighborhood=neighborhood, median_excess_db=excess_db, max_peaks_per_s=1e9)
    assert extract_peaks(spec, cfg) == brute_force_peaks(spec, cfg)


def test_peaks_match_brute_force_on_real_audio():
    scene = synth.make_scene(3.0, np.random.default_rng(7))
    spec = dsp.stft(scene)
    small = Spectrogram(frames=spec.frames[:, :200])  # keep the oracle affordable
    cfg = PeakConfig()
    assert extract_peaks(small, cfg) == brute_force_peaks(small, cfg)


def test_peak_density_cap():
    # isolated strong impulses on a grid wider than the neighborhood
    n_frames, n_bins = 400, 300
    mags = np.full((n_frames, n_bins), 1e-4)
    rng = np.random.default_rng(4)
    # spacing 16 puts each impulse just outside its neighbors' 31x31 windows
    for f in range(2, n_frames - 2, 16):
        for b in range(2, n_bins - 2, 16):
            mags[f, b] = 1.0 + rng.uniform(0, 1)
    spec = Spectrogram(frames=mags)
    cfg = PeakConfig()
    cap = int(round(spec.duration_s * cfg.max_peaks_per_s))
    uncapped = extract_peaks(spec, PeakConfig(max_peaks_per_s=1e9))
    assert len(uncapped) > cap
    capped = extract_peaks(spec, cfg)
    assert len(capped) == cap
    # exactly the strongest survive
    strongest = sorted(uncapped, key=lambda p: -p.magnitude_db)[:cap]
    assert {(p.frame_idx, p.bin_idx) for p in capped} == {(p.frame_idx, p.bin_idx) for p in strongest}


def test_peaks_sorted_and_plateau_rejected():
    mags = np.full((60, 60), 1e-4)
    mags[20, 20] = mags[20, 21] = 1.0  # tie: neither is a strict max
    mags[40, 40] = 1.0
    peaks = extract_peaks(Spectrogram(frames=mags), PeakConfig(median_excess_db=0.0))
    assert [(p.frame_idx, p.bin_idx) for p in peaks] == [(40, 40)]


# -- landmark pairing ---------------------------------------------------


def frame_peaks(coords):
    return [Peak(f, b, 0.0) for f, b in sorted(coords)]


def test_landmark_target_zone():
    cfg = LandmarkConfig()
    dt_min = int(np.ceil(cfg.dt_min_s / HOP_S))
    dt_max = int(np.floor(cfg.dt_max_s / HOP_S))
    anchor = (100, 500)
    targets = [
        (100 + dt_min - 1, 500),   # too close in time
        (100 + dt_min, 510),       # first valid
        (100 + dt_max, 490),       # last valid
        (100 + dt_max + 1, 500),   # too far
        (100 + dt_min + 2, 500 + MAX_DF + 1),  # df out of range
    ]
    hashes = hash_landmarks(frame_peaks([anchor] + targets))
    got = {unpack_hash(h.hash) for h in hashes if h.anchor_offset_s == pytest.approx(100 * HOP_S)}
    assert (500, 10, dt_min) in got
    assert (500, -10, dt_max) in got
    assert all(dt_min <= dt <= dt_max for (_, _, dt) in got)
    assert all(abs(df) <= MAX_DF for (_, df, _) in got)


def test_landmark_fan_out_limit():
    anchor = (0, 100)
    targets = [(10 + i, 100 + i) for i in range(20)]
    hashes = hash_landmarks(frame_peaks([anchor] + targets))
    cfg = LandmarkConfig()
    anchored = [h for h in hashes if h.anchor_offset_s == 0.0]
    assert len(anchored) == cfg.fan_out


def test_landmark_skips_bins_beyond_hash_range():
    peaks = frame_peaks([(0, MAX_F1 + 1), (10, 200), (20, MAX_F1 + 1), (30, 210)])
    hashes = hash_landmarks(peaks)
    decoded = [unpack_hash(h.hash) for h in hashes]
    assert all(f1 <= MAX_F1 for (f1, _, _) in decoded)
    assert all(abs(df) <= MAX_DF for (_, df, _) in decoded)
    # the high-bin peaks appear neither as anchors nor as targets
    assert {(f1, df) for (f1, df, _) in decoded} == {(200, 10)}


def test_landmark_anchor_offsets_in_seconds():
    hashes = hash_landmarks(frame_peaks([(43, 100), (50, 120)]))
    assert len(hashes) == 1
    assert hashes[0].anchor_offset_s == pytest.approx(43 * HOP_S)


# -- index persistence --------------------------------------------------


def small_hashes(rng, n=200):
    return [
        LandmarkHash(
            pack_hash(int(rng.integers(0, MAX_F1 + 1)), int(rng.integers(-50, 51)), int(rng.integers(4, 90))),
            float(rng.uniform(0, 30)),
        )
        for _ in range(n)
    ]


def test_index_asset_and_already_indexed():
    idx = FingerprintIndex()
    rng = np.random.default_rng(0)
    idx.index_asset("a", small_hashes(rng), 30.0)
    with pytest.raises(AlreadyIndexed):
        idx.index_asset("a", small_hashes(rng), 30.0)
    idx.index_asset("a", small_hashes(rng), 30.0, reindex=True)
    assert "a" in idx
    assert idx.asset_ids() == ["a"]


def test_postings_sorted_and_shared():
    idx = FingerprintIndex()
    h = pack_hash(10, 5, 20)
    idx.index_asset("b", [LandmarkHash(h, 3.0), LandmarkHash(h, 1.0)], 10.0)
    idx.index_asset("a", [LandmarkHash(h, 2.0)], 10.0)
    assert idx.postings[h] == [("a", 2.0), ("b", 1.0), ("b", 3.0)]


def test_save_load_round_trip(tmp_path):
    idx = FingerprintIndex()
    rng = np.random.default_rng(1)
    idx.index_asset("first", small_hashes(rng), 12.5)
    idx.index_asset("second", small_hashes(rng), 31.0)
    path = tmp_path / "fp.avpf"
    idx.save(path)
    assert path.read_bytes()[:4] == b"AVPF"
    loaded = FingerprintIndex.load(path)
    assert loaded.asset_ids() == idx.asset_ids()
    assert loaded.durations == idx.durations
    assert set(loaded.postings) == set(idx.postings)
    for h in idx.postings:
        assert loaded.postings[h] == [(a, pytest.approx(t, abs=5e-4)) for a, t in idx.postings[h]]


def test_rebuild_determinism_byte_identical(tmp_path, base_scene):
    hashes = fingerprint_spectrogram(dsp.stft(base_scene[: 44100 * 5]))
    one = FingerprintIndex()
    one.index_asset("x", hashes, 5.0)
    one.save(tmp_path / "one.avpf")
    two = FingerprintIndex()
    two.index_asset("x", list(hashes), 5.0)
    two.index_asset("x", hashes, 5.0, reindex=True)
    two.save(tmp_path / "two.avpf")
    assert (tmp_path / "one.avpf").read_bytes() == (tmp_path / "two.avpf").read_bytes()
    assert (tmp_path / "one.avpf.assets.json").read_text() == (tmp_path / "two.avpf.assets.json").read_text()


def test_fingerprint_deterministic(base_scene):
    spec = dsp.stft(base_scene[: 44100 * 5])
    assert fingerprint_spectrogram(spec) == fingerprint_spectrogram(spec)


# -- matching -----------------------------------------------------------


def build_index(clips: dict) -> FingerprintIndex:
    idx = FingerprintIndex()
    for name, samples in clips.items():
        idx.index_asset(name, fingerprint_spectrogram(dsp.stft(samples)), len(samples) / dsp.SAMPLE_RATE)
    return idx


def test_self_match(base_scene):
    idx = build_index({"a": base_scene})
    r = match_pair(idx, "a", "a")
    assert r.is_match
    assert abs(r.offset_s) <= 0.001


def test_match_unindexed_raises(base_scene):
    idx = build_index({"a": base_scene})
    with pytest.raises(NotIndexed):
        match_pair(idx, "a", "ghost")
    with pytest.raises(NotIndexed):
        match_all(idx, "ghost")


def test_shift_equivariance_grid(base_scene):
    rng = np.random.default_rng(9)
    delays = rng.uniform(0.3, 8.0, 5)
    clips = {"a": base_scene}
    for i, d in enumerate(delays):
        clips[f"d{i}"] = synth.delay(base_scene, float(d))
    idx = build_index(clips)
    for i, d in enumerate(delays):
        r = match_pair(idx, "a", f"d{i}")
        assert r.is_match
        assert r.offset_s == pytest.approx(-d, abs=0.05)


def test_antisymmetry(base_scene):
    b = synth.add_noise_snr(synth.trim_start(base_scene, 3.0), 20.0, np.random.default_rng(3))
    idx = build_index({"a": base_scene, "b": b})
    fwd = match_pair(idx, "a", "b")
    rev = match_pair(idx, "b", "a")
    assert fwd.is_match and rev.is_match
    assert fwd.offset_s == pytest.approx(-rev.offset_s, abs=0.05)


def test_unrelated_noise_clips_do_not_match():
    negatives = 0
    trials = 100
    for i in range(trials):
        rng = np.random.default_rng(10_000 + i)
        a = rng.normal(0, 0.2, 44100 * 5)
        b = rng.normal(0, 0.2, 44100 * 5)
        idx = build_index({"a": a, "b": b})
        if not match_pair(idx, "a", "b").is_match:
            negatives += 1
    assert negatives >= 99


def test_match_all_ranking(base_scene):
    shifted = synth.add_noise_snr(synth.trim_start(base_scene, 2.0), 20.0, np.random.default_rng(5))
    noise = np.random.default_rng(6).normal(0, 0.2, 44100 * 10)
    idx = build_index({"a": base_scene, "shifted": shifted, "noise": noise})
    results = match_all(idx, "a")
    assert [r.asset_b for r in results][0] == "shifted"
    assert results[0].is_match
    by_b = {r.asset_b: r for r in results}
    assert not by_b["noise"].is_match
    assert [r.z_score for r in results] == sorted((r.z_score for r in results), reverse=True)


def test_match_all_singleton(base_scene):
    idx = build_index({"a": base_scene})
    assert match_all(idx, "a") == []


def test_match_result_invariant(base_scene):
    cfg = MatchConfig()
    shifted = synth.trim_start(base_scene, 1.0)
    idx = build_index({"a": base_scene, "b": shifted})
    for pair in [("a", "b"), ("b", "a"), ("a", "a")]:
        r = match_pair(idx, *pair, cfg)
        if r.is_match:
            assert r.z_score >= cfg.tau
            assert r.bin_count >= cfg.min_matches
