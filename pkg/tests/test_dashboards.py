import numpy as np
import pytest

from avp import dsp, synth
from avp.dashboards import DashboardStore
from avp.errors import (
    DuplicateMember,
    NoAcousticMatch,
    SyncPointOutOfRange,
    UnknownAsset,
    UnknownDashboard,
)
from avp.fingerprint import FingerprintIndex, fingerprint_spectrogram


def build_store(tmp_path, clips: dict, features=None):
    idx = FingerprintIndex()
    durations = {}
    for name, samples in clips.items():
        idx.index_asset(name, fingerprint_spectrogram(dsp.stft(samples)), len(samples) / dsp.SAMPLE_RATE)
        durations[name] = len(samples) / dsp.SAMPLE_RATE

    def duration_of(asset_id):
        if asset_id not in durations:
            raise UnknownAsset(asset_id)
        return durations[asset_id]

    return DashboardStore(tmp_path / "artifacts", idx, duration_of, features=features)


@pytest.fixture(scope="module")
def triple():
    """Scene A plus copies starting 2 s and 5 s later, lightly noised."""
    scene = synth.make_scene(40.0, np.random.default_rng(77))
    rng = np.random.default_rng(78)
    return {
        "a": scene,
        "b": synth.add_noise_snr(synth.trim_start(scene, 2.0), 25.0, rng),
        "c": synth.add_noise_snr(synth.trim_start(scene, 5.0), 25.0, rng),
    }


def test_create_and_persist_round_trip(tmp_path, triple):
    store = build_store(tmp_path, triple)
    dash = store.create("a", sync_point_s=12.0, title="plaza cams")
    assert dash.members == []
    assert dash.sync_point_s == 12.0
    store.add_member(dash.dashboard_id, "b")
    reloaded = DashboardStore(tmp_path / "artifacts", store.index, store.duration_of)
    again = reloaded.get(dash.dashboard_id)
    assert again.to_dict() == store.get(dash.dashboard_id).to_dict()
    assert reloaded.list_dashboards()[0].dashboard_id == dash.dashboard_id


def test_create_errors(tmp_path, triple):
    store = build_store(tmp_path, triple)
    with pytest.raises(UnknownAsset):
        store.create("ghost", 0.0, "nope")
    with pytest.raises(SyncPointOutOfRange):
        store.create("a", -1.0, "nope")
    with pytest.raises(SyncPointOutOfRange):
        store.create("a", 10_000.0, "nope")
    with pytest.raises(UnknownDashboard):
        store.get("nope")


def test_member_offsets_and_timeline(tmp_path, triple):
    store = build_store(tmp_path, triple)
    dash = store.create("a", 10.0, "triple")
    store.add_member(dash.dashboard_id, "b")
    store.add_member(dash.dashboard_id, "c")
    by_id = {m.asset_id: m for m in store.get(dash.dashboard_id).members}
    assert by_id["b"].offset_s == pytest.approx(2.0, abs=0.05)
    assert by_id["c"].offset_s == pytest.approx(5.0, abs=0.05)

    spans = store.timeline(dash.dashboard_id)
    assert spans[0]["is_master"] and spans[0]["asset_id"] == "a"
    assert spans[0]["start_on_master_s"] == 0.0
    assert spans[0]["end_on_master_s"] == pytest.approx(40.0, abs=0.01)
    span_b = next(s for s in spans if s["asset_id"] == "b")
    assert span_b["start_on_master_s"] == pytest.approx(2.0, abs=0.05)
    assert span_b["end_on_master_s"] == pytest.approx(40.0, abs=0.06)


def test_transitivity_audit_clean(tmp_path, triple):
    store = build_store(tmp_path, triple)
    dash = store.create("a", 0.0, "triple")
    store.add_member(dash.dashboard_id, "b")
    store.add_member(dash.dashboard_id, "c")
    audits = store.transitivity_audit(dash.dashboard_id)
    assert len(audits) == 1
    assert audits[0]["residual_s"] <= 0.1
    assert audits[0]["clean"]


def test_duplicate_and_no_match_members(tmp_path, triple):
    clips = dict(triple)
    clips["noise"] = np.random.default_rng(5).normal(0, 0.2, 44100 * 12)
    store = build_store(tmp_path, clips)
    dash = store.create("a", 0.0, "x")
    store.add_member(dash.dashboard_id, "b")
    with pytest.raises(DuplicateMember):
        store.add_member(dash.dashboard_id, "b")
    with pytest.raises(DuplicateMember):
        store.add_member(dash.dashboard_id, "a")
    with pytest.raises(NoAcousticMatch):
        store.add_member(dash.dashboard_id, "noise")
    # state unchanged after the failures
    assert store.get(dash.dashboard_id).member_ids() == ["b"]


def test_recommendations_exclude_members_and_rank_matches_first(tmp_path, triple):
    clips = dict(triple)
    clips["noise"] = np.random.default_rng(6).normal(0, 0.2, 44100 * 12)
    store = build_store(tmp_path, clips)
    dash = store.create("a", 0.0, "x")
    store.add_member(dash.dashboard_id, "b")
    recs = store.recommend_members(dash.dashboard_id)
    ids = [r["asset_id"] for r in recs]
    assert "a" not in ids and "b" not in ids
    assert set(ids) == {"c", "noise"}
    assert ids[0] == "c"
    assert recs[0]["score"] > recs[1]["score"]
