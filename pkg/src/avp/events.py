"""Multi-modal detection event index and the JSON artifact schema.

Detection artifacts are the integration contract between external detectors
(or the built-in quick detectors, or user annotations) and the search index:

    {"schema_version": 1,
     "asset_id": "...",
     "generator": {"name": "...", "version": "...", "kind": "audio|video|user"},
     "events": [{"id": "...", "label": "...", "start_s": 0.0, "end_s": 1.0,
                 "confidence": 0.9,
                 "track": [{"t_s", "x", "y", "w", "h", "track_id"}, ...]?}]}

Files are validated as a whole: any violation rejects every event in the
file.  Loading is idempotent per event id.  User annotations round-trip
through the same schema (kind "user", confidence 1.0, optional "author" and
"created_at" fields on the event).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import EmptyQuery, InvalidSpan, UnknownAsset, UnknownEvent

SCHEMA_VERSION = 1
CANONICAL_LABELS = ("gunshot", "explosion", "speech", "emergency_vehicle", "alarm")
GENERATOR_KINDS = ("audio", "video", "user")
MERGE_GAP_S = 0.5
DURATION_TOLERANCE_S = 0.5

ANNOTATION_GENERATOR = {"name": "annotation", "version": "1", "kind": "user"}


@dataclass
class TrackBox:
    t_s: float
    x: float
    y: float
    w: float
    h: float
    track_id: int

    def to_dict(self) -> dict:
        return {
            "t_s": self.t_s, "x": self.x, "y": self.y,
            "w": self.w, "h": self.h, "track_id": self.track_id,
        }


@dataclass
class DetectionEvent:
    event_id: str
    asset_id: str
    label: str
    start_s: float
    end_s: float
    confidence: float
    generator: dict
    track: list[TrackBox] | None = None
    author: str | None = None
    created_at: str | None = None

    def event_dict(self) -> dict:
        d = {
            "id": self.event_id,
            "label": self.label,
            "start_s": self.start_s,
            "end_s": self.end_s,
            "confidence": self.confidence,
        }
        if self.track is not None:
            d["track"] = [b.to_dict() for b in self.track]
        if self.author is not None:
            d["author"] = self.author
        if self.created_at is not None:
            d["created_at"] = self.created_at
        return d


@dataclass
class EventQuery:
    clauses: list[tuple[str, float]]
    combine: str = "AND"
    metadata: dict = field(default_factory=dict)
    sort: str = "confidence"  # or "time" (asset ingest order)


@dataclass
class QueryResult:
    asset_id: str
    events: list[DetectionEvent]
    rank_score: float


def event_content_id(asset_id: str, generator: dict, label: str, start_s: float, end_s: float) -> str:
    """Deterministic event id so re-loading the same artifact never duplicates."""
    payload = json.dumps(
        [asset_id, generator.get("name"), generator.get("version"), generator.get("kind"),
         label, start_s, end_s],
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def canonical_json(artifact: dict) -> str:
    """Canonical serialization: sorted keys, compact, events ordered by id."""
    doc = dict(artifact)
    doc["events"] = sorted(artifact.get("events", []), key=lambda e: e.get("id", ""))
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def artifact_dict(asset_id: str, generator: dict, events: list[DetectionEvent]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "asset_id": asset_id,
        "generator": dict(generator),
        "events": [e.event_dict() for e in events],
    }


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def validate_artifact(doc: dict, duration_s: float | None = None) -> list[str]:
    """Return all schema violations for one artifact document (empty = valid)."""
    errs: list[str] = []
    if not isinstance(doc, dict):
        return ["artifact is not a JSON object"]
    if doc.get("schema_version") != SCHEMA_VERSION:
        errs.append(f"schema_version must be {SCHEMA_VERSION}")
    if not isinstance(doc.get("asset_id"), str) or not doc.get("asset_id"):
        errs.append("asset_id missing or not a string")
    gen = doc.get("generator")
    if not isinstance(gen, dict):
        errs.append("generator missing")
        gen = {}
    else:
        for key in ("name", "version"):
            if not isinstance(gen.get(key), str) or not gen.get(key):
                errs.append(f"generator.{key} missing or not a string")
        if gen.get("kind") not in GENERATOR_KINDS:
            errs.append(f"generator.kind must be one of {GENERATOR_KINDS}")
    events = doc.get("events")
    if not isinstance(events, list):
        return errs + ["events missing or not a list"]
    for i, ev in enumerate(events):
        where = f"events[{i}]"
        if not isinstance(ev, dict):
            errs.append(f"{where}: not an object")
            continue
        if not isinstance(ev.get("label"), str) or not ev.get("label"):
            errs.append(f"{where}: label missing")
        start, end = ev.get("start_s"), ev.get("end_s")
        if not (_is_number(start) and _is_number(end)):
            errs.append(f"{where}: start_s/end_s must be numbers")
        else:
            if not 0 <= start < end:
                errs.append(f"{where}: requires 0 <= start_s < end_s")
            if duration_s is not None and end > duration_s + DURATION_TOLERANCE_S:
                errs.append(f"{where}: end_s {end} beyond asset duration {duration_s:.3f}")
        conf = ev.get("confidence")
        if not _is_number(conf) or not 0.0 <= conf <= 1.0:
            errs.append(f"{where}: confidence must be in [0, 1]")
        track = ev.get("track")
        if track is not None:
            if gen.get("kind") == "audio":
                errs.append(f"{where}: track not allowed for audio generators")
            if not isinstance(track, list):
                errs.append(f"{where}: track must be a list")
                continue
            last_t: dict[int, float] = {}
            for j, box in enumerate(track):
                at = f"{where}.track[{j}]"
                if not isinstance(box, dict):
                    errs.append(f"{at}: not an object")
                    continue
                if not all(_is_number(box.get(k)) for k in ("t_s", "x", "y", "w", "h")):
                    errs.append(f"{at}: t_s/x/y/w/h must be numbers")
                    continue
                if not isinstance(box.get("track_id"), int) or isinstance(box.get("track_id"), bool):
                    errs.append(f"{at}: track_id must be an integer")
                    continue
                if not all(0.0 <= box[k] <= 1.0 for k in ("x", "y", "w", "h")):
                    errs.append(f"{at}: box coordinates must be fractions in [0, 1]")
                if box["x"] + box["w"] > 1.0 + 1e-9 or box["y"] + box["h"] > 1.0 + 1e-9:
                    errs.append(f"{at}: box extends beyond the frame")
                tid = box["track_id"]
                if tid in last_t and box["t_s"] <= last_t[tid]:
                    errs.append(f"{at}: t_s not strictly increasing within track {tid}")
                last_t[tid] = box["t_s"]
    return errs


def _event_from_dict(doc_asset: str, generator: dict, ev: dict) -> DetectionEvent:
    track = ev.get("track")
    boxes = None
    if track is not None:
        boxes = [
            TrackBox(b["t_s"], b["x"], b["y"], b["w"], b["h"], b["track_id"]) for b in track
        ]
    event_id = ev.get("id") or event_content_id(
        doc_asset, generator, ev["label"], ev["start_s"], ev["end_s"]
    )
    return DetectionEvent(
        event_id=event_id,
        asset_id=doc_asset,
        label=ev["label"],
        start_s=float(ev["start_s"]),
        end_s=float(ev["end_s"]),
        confidence=float(ev["confidence"]),
        generator=dict(generator),
        track=boxes,
        author=ev.get("author"),
        created_at=ev.get("created_at"),
    )


class EventIndex:
    """In-memory index over all loaded detection events and annotations."""

    def __init__(self, artifact_dir=None, duration_of=None, asset_order=None):
        # duration_of: asset_id -> duration seconds, raising UnknownAsset on
        # unknown ids (wire the catalog in here); None skips duration checks.
        self.artifact_dir = Path(artifact_dir) if artifact_dir else None
        self.duration_of = duration_of
        self.asset_order = asset_order  # asset_id -> sortable ingest key
        self.events: dict[str, DetectionEvent] = {}
        self.by_asset: dict[str, dict[str, DetectionEvent]] = {}
        self.last_report: dict = {}

    # -- loading --------------------------------------------------------

    def _duration_or_violation(self, asset_id: str):
        if self.duration_of is None:
            return None, None
        try:
            return self.duration_of(asset_id), None
        except UnknownAsset:
            return None, f"asset_id {asset_id!r} not in catalog"

    def add_artifact(self, doc: dict, source: str = "<dict>") -> list[str]:
        """Validate and index one artifact document; returns violations."""
        errs = validate_artifact(doc)
        if not errs:
            duration, missing = self._duration_or_violation(doc["asset_id"])
            if missing:
                errs = [missing]
            else:
                errs = validate_artifact(doc, duration_s=duration)
        if errs:
            return errs
        for ev in doc["events"]:
            event = _event_from_dict(doc["asset_id"], doc["generator"], ev)
            self.events[event.event_id] = event
            self.by_asset.setdefault(event.asset_id, {})[event.event_id] = event
        return []

    def load_artifacts(self, directory) -> dict:
        """Load every ``*.json`` detection artifact below a directory.

        Dashboard files (recognized by a top-level ``dashboard_id``) share the
        persistence path and are skipped here.  Invalid files are reported but
        never abort the load.
        """
        directory = Path(directory)
        report = {"files_loaded": 0, "files_skipped": 0, "events_indexed": 0, "violations": {}}
        for path in sorted(directory.glob("*.json")):
            try:
                doc = json.loads(path.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                report["violations"][path.name] = [f"unreadable: {exc}"]
                continue
            if isinstance(doc, dict) and "dashboard_id" in doc:
                report["files_skipped"] += 1
                continue
            before = len(self.events)
            errs = self.add_artifact(doc, source=path.name)
            if errs:
                report["violations"][path.name] = errs
            else:
                report["files_loaded"] += 1
                report["events_indexed"] += len(self.events) - before
        self.last_report = report
        return report

    # -- queries --------------------------------------------------------

    def query(self, q: EventQuery, asset_metadata=None) -> list[QueryResult]:
        """Rank assets by matched-event confidence under AND/OR label clauses."""
        if not q.clauses:
            raise EmptyQuery("query needs at least one clause")
        for label, min_conf in q.clauses:
            if not 0.0 <= min_conf <= 1.0:
                raise ValueError(f"min_confidence out of range for {label!r}")
        results = []
        for asset_id, events in self.by_asset.items():
            if q.metadata and asset_metadata is not None:
                meta = asset_metadata(asset_id) or {}
                if any(meta.get(k) != v for k, v in q.metadata.items()):
                    continue
            per_clause = []
            for label, min_conf in q.clauses:
                hits = [
                    e for e in events.values()
                    if e.label == label and e.confidence >= min_conf
                ]
                per_clause.append(hits)
            if q.combine.upper() == "AND":
                if not all(per_clause):
                    continue
            elif not any(per_clause):
                continue
            matched = {e.event_id: e for hits in per_clause for e in hits}
            ordered = sorted(matched.values(), key=lambda e: (e.start_s, e.event_id))
            score = max(e.confidence for e in ordered)
            results.append(QueryResult(asset_id, ordered, score))
        if q.sort == "time" and self.asset_order is not None:
            results.sort(key=lambda r: (self.asset_order(r.asset_id), r.asset_id))
        else:
            results.sort(key=lambda r: (-r.rank_score, r.asset_id))
        return results

    def aggregate_spans(self, asset_id: str, label: str) -> list[tuple[float, float, float]]:
        """Merge same-label events overlapping or gapped <= 0.5 s for display."""
        if asset_id not in self.by_asset:
            raise UnknownAsset(asset_id)
        spans = sorted(
            (e.start_s, e.end_s, e.confidence)
            for e in self.by_asset[asset_id].values()
            if e.label == label
        )
        merged: list[list[float]] = []
        for start, end, conf in spans:
            if merged and start <= merged[-1][1] + MERGE_GAP_S:
                merged[-1][1] = max(merged[-1][1], end)
                merged[-1][2] = max(merged[-1][2], conf)
            else:
                merged.append([start, end, conf])
        return [tuple(m) for m in merged]

    def labels(self, asset_id: str | None = None) -> list[str]:
        if asset_id is None:
            pool = self.events.values()
        else:
            pool = self.by_asset.get(asset_id, {}).values()
        return sorted({e.label for e in pool})

    # -- annotations ----------------------------------------------------

    def add_annotation(
        self,
        asset_id: str,
        label: str,
        start_s: float,
        end_s: float,
        author: str = "investigator",
        track: list[TrackBox] | None = None,
    ) -> str:
        """Persist a user annotation as a first-class artifact and index it."""
        duration, missing = self._duration_or_violation(asset_id)
        if missing:
            raise UnknownAsset(asset_id)
        if not 0 <= start_s < end_s:
            raise InvalidSpan(f"[{start_s}, {end_s}]")
        if duration is not None and end_s > duration + DURATION_TOLERANCE_S:
            raise InvalidSpan(f"end {end_s} beyond duration {duration:.3f}")
        generator = dict(ANNOTATION_GENERATOR)
        event_id = event_content_id(asset_id, generator, label, start_s, end_s)
        event = DetectionEvent(
            event_id=event_id,
            asset_id=asset_id,
            label=label,
            start_s=float(start_s),
            end_s=float(end_s),
            confidence=1.0,
            generator=generator,
            track=track,
            author=author,
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        doc = artifact_dict(asset_id, generator, [event])
        errs = validate_artifact(doc, duration_s=duration)
        if errs:
            raise InvalidSpan("; ".join(errs))
        self.events[event_id] = event
        self.by_asset.setdefault(asset_id, {})[event_id] = event
        if self.artifact_dir is not None:
            self.artifact_dir.mkdir(parents=True, exist_ok=True)
            (self.artifact_dir / f"annotation_{event_id}.json").write_text(canonical_json(doc))
        return event_id

    def delete_annotation(self, event_id: str) -> None:
        event = self.events.get(event_id)
        if event is None:
            raise UnknownEvent(event_id)
        del self.events[event_id]
        self.by_asset[event.asset_id].pop(event_id, None)
        if not self.by_asset[event.asset_id]:
            del self.by_asset[event.asset_id]
        if self.artifact_dir is not None:
            path = self.artifact_dir / f"annotation_{event_id}.json"
            if path.exists():
                path.unlink()
