"""Sync dashboards: a master recording, a sync point, and members aligned
to the master timeline by fingerprint-estimated offsets.

Member offsets are anchored pairwise to the master.  A transitivity audit
reports the residual of every member pair's direct offset against the
master-anchored chain instead of silently averaging inconsistencies.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import (
    DuplicateMember,
    NoAcousticMatch,
    SyncPointOutOfRange,
    UnknownAsset,
    UnknownDashboard,
)
from .fingerprint import FingerprintIndex, MatchConfig, match_pair
from .similarity import SEGMENT_S, FeatureStore

TRANSITIVITY_CLEAN_S = 0.1  # two 50 ms histogram bins


@dataclass
class Member:
    asset_id: str
    offset_s: float   # member start relative to master start
    z_score: float

    def to_dict(self) -> dict:
        return {"asset_id": self.asset_id, "offset_s": self.offset_s, "z_score": self.z_score}


@dataclass
class Dashboard:
    dashboard_id: str
    title: str
    master_asset_id: str
    sync_point_s: float
    members: list[Member] = field(default_factory=list)
    created_by: str = "investigator"
    created_at: str = ""

    def member_ids(self) -> list[str]:
        return [m.asset_id for m in self.members]

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "dashboard_id": self.dashboard_id,
            "title": self.title,
            "master_asset_id": self.master_asset_id,
            "sync_point_s": self.sync_point_s,
            "members": [m.to_dict() for m in self.members],
            "created_by": self.created_by,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Dashboard":
        return cls(
            dashboard_id=d["dashboard_id"],
            title=d["title"],
            master_asset_id=d["master_asset_id"],
            sync_point_s=d["sync_point_s"],
            members=[Member(**m) for m in d.get("members", [])],
            created_by=d.get("created_by", "investigator"),
            created_at=d.get("created_at", ""),
        )


class DashboardStore:
    """Dashboards persisted as JSON artifacts next to annotations."""

    def __init__(
        self,
        artifact_dir,
        index: FingerprintIndex,
        duration_of,
        features: FeatureStore | None = None,
        match_cfg: MatchConfig = MatchConfig(),
    ):
        self.artifact_dir = Path(artifact_dir)
        self.index = index
        self.duration_of = duration_of
        self.features = features
        self.match_cfg = match_cfg
        self._lock = threading.RLock()
        self.dashboards: dict[str, Dashboard] = {}
        if self.artifact_dir.exists():
            for path in sorted(self.artifact_dir.glob("dashboard_*.json")):
                dash = Dashboard.from_dict(json.loads(path.read_text()))
                self.dashboards[dash.dashboard_id] = dash

    def _persist(self, dash: Dashboard) -> None:
        self.artifact_dir.mkdir(parents=True, exist_ok=True)
        path = self.artifact_dir / f"dashboard_{dash.dashboard_id}.json"
        path.write_text(json.dumps(dash.to_dict(), indent=2, sort_keys=True))

    def _get(self, dashboard_id: str) -> Dashboard:
        try:
            return self.dashboards[dashboard_id]
        except KeyError:
            raise UnknownDashboard(dashboard_id) from None

    get = _get

    def list_dashboards(self) -> list[Dashboard]:
        return [self.dashboards[k] for k in sorted(self.dashboards)]

    def create(
        self,
        master_asset_id: str,
        sync_point_s: float,
        title: str,
        created_by: str = "investigator",
    ) -> Dashboard:
        duration = self.duration_of(master_asset_id)  # raises UnknownAsset
        if master_asset_id not in self.index:
            raise UnknownAsset(f"{master_asset_id} has no fingerprint")
        if not 0 <= sync_point_s <= duration:
            raise SyncPointOutOfRange(f"{sync_point_s} not in [0, {duration:.3f}]")
        dash = Dashboard(
            dashboard_id=uuid.uuid4().hex[:12],
            title=title,
            master_asset_id=master_asset_id,
            sync_point_s=float(sync_point_s),
            created_by=created_by,
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        with self._lock:
            self.dashboards[dash.dashboard_id] = dash
            self._persist(dash)
        return dash

    def add_member(self, dashboard_id: str, asset_id: str) -> Dashboard:
        with self._lock:
            dash = self._get(dashboard_id)
            if asset_id == dash.master_asset_id or asset_id in dash.member_ids():
                raise DuplicateMember(asset_id)
            result = match_pair(self.index, dash.master_asset_id, asset_id, self.match_cfg)
            if not result.is_match:
                raise NoAcousticMatch(
                    f"{asset_id} does not acoustically match the master (z={result.z_score:.2f})"
                )
            dash.members.append(Member(asset_id, result.offset_s, result.z_score))
            self._persist(dash)
            return dash

    def recommend_members(self, dashboard_id: str, k: int = 10) -> list[dict]:
        """Rank non-members by mean match z-score against master plus members.

        Ties break on similarity distance between the master segment holding
        the sync point and the candidate's closest segment.
        """
        dash = self._get(dashboard_id)
        exclude = {dash.master_asset_id, *dash.member_ids()}
        references = [dash.master_asset_id] + dash.member_ids()
        sync_segment = int(dash.sync_point_s // SEGMENT_S)
        out = []
        for candidate in self.index.asset_ids():
            if candidate in exclude:
                continue
            z_scores = []
            for ref in references:
                try:
                    z_scores.append(match_pair(self.index, ref, candidate, self.match_cfg).z_score)
                except Exception:
                    z_scores.append(0.0)
            score = sum(z_scores) / len(z_scores) if z_scores else 0.0
            out.append(
                {
                    "asset_id": candidate,
                    "score": score,
                    "tie_distance": self._sync_segment_distance(dash, sync_segment, candidate),
                }
            )
        out.sort(key=lambda r: (-r["score"], r["tie_distance"], r["asset_id"]))
        return out[:k]

    def _sync_segment_distance(self, dash: Dashboard, sync_segment: int, candidate: str) -> float:
        if self.features is None:
            return float("inf")
        try:
            hits = self.features.knn(dash.master_asset_id, sync_segment, k=self.features.n_segments())
        except Exception:
            return float("inf")
        for hit in hits:
            if hit.asset_id == candidate:
                return hit.distance
        return float("inf")

    def timeline(self, dashboard_id: str) -> list[dict]:
        """Spans of every dashboard asset on the master timeline."""
        dash = self._get(dashboard_id)
        spans = [
            {
                "asset_id": dash.master_asset_id,
                "start_on_master_s": 0.0,
                "end_on_master_s": self.duration_of(dash.master_asset_id),
                "offset_s": 0.0,
                "is_master": True,
            }
        ]
        for m in dash.members:
            duration = self.duration_of(m.asset_id)
            spans.append(
                {
                    "asset_id": m.asset_id,
                    "start_on_master_s": m.offset_s,
                    "end_on_master_s": m.offset_s + duration,
                    "offset_s": m.offset_s,
                    "is_master": False,
                }
            )
        return spans

    def transitivity_audit(self, dashboard_id: str) -> list[dict]:
        """Residual of each member pair's direct offset vs the master chain."""
        dash = self._get(dashboard_id)
        offsets = {m.asset_id: m.offset_s for m in dash.members}
        members = dash.member_ids()
        audits = []
        for i, b in enumerate(members):
            for c in members[i + 1 :]:
                direct = match_pair(self.index, b, c, self.match_cfg)
                if not direct.is_match:
                    continue
                # chain prediction: offset(B->C) = offset(A->C) - offset(A->B)
                residual = abs((offsets[c] - offsets[b]) - direct.offset_s)
                audits.append(
                    {
                        "asset_a": b,
                        "asset_b": c,
                        "residual_s": residual,
                        "clean": residual <= TRANSITIVITY_CLEAN_S,
                    }
                )
        return audits
