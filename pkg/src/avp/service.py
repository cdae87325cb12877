"""HTTP API tying catalog, events, fingerprints, similarity and dashboards
together, including byte-range media streaming and server-side waveforms.

The service is single-process and unauthenticated (standalone investigation
LAN deployment); ``create_app`` is the auth hook point if a deployment ever
needs to wrap the router with middleware.
"""

from __future__ import annotations

import json
import mimetypes
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from . import dsp, quickdetect
from .catalog import Catalog
from .dashboards import DashboardStore
from .errors import (
    AvpError,
    ConfigError,
    DuplicateMember,
    EmptyQuery,
    InvalidSpan,
    NoAcousticMatch,
    NotIndexed,
    SchemaViolation,
    SyncPointOutOfRange,
    TooShort,
    UnknownAsset,
    UnknownDashboard,
    UnknownEvent,
    UnknownSegment,
    UnsupportedFormat,
)
from .events import EventIndex, EventQuery, TrackBox
from .fingerprint import FingerprintIndex, MatchConfig, fingerprint_spectrogram, match_all, match_pair
from .similarity import FEATURE_DIM, FeatureStore, extract_segment_features

WAVEFORM_MIN_PX = 100
WAVEFORM_MAX_PX = 20000

_STATUS_BY_ERROR = {
    UnknownAsset: 404,
    UnknownDashboard: 404,
    UnknownEvent: 404,
    UnknownSegment: 404,
    NotIndexed: 404,
    DuplicateMember: 409,
    SchemaViolation: 422,
    InvalidSpan: 422,
    NoAcousticMatch: 422,
    EmptyQuery: 400,
    SyncPointOutOfRange: 400,
    TooShort: 400,
    UnsupportedFormat: 400,
}


@dataclass
class ApiConfig:
    corpus_root: str = "."
    artifact_dir: str | None = None          # default: <corpus_root>/artifacts
    host: str = "127.0.0.1"
    port: int = 8477
    transcoder_template: str | None = None
    fingerprint_tau: float = 4.0
    match_decision: str = "max_bin"
    similarity_weights_path: str | None = None
    ui_dir: str | None = None

    def resolved_artifact_dir(self) -> Path:
        return Path(self.artifact_dir) if self.artifact_dir else Path(self.corpus_root) / "artifacts"


def load_config(path) -> ApiConfig:
    """Load and validate the single-file JSON service configuration."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    known = set(ApiConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = ApiConfig(**raw)
    if not Path(cfg.corpus_root).is_dir():
        raise ConfigError(f"corpus_root does not exist: {cfg.corpus_root}")
    if not 0 < cfg.port < 65536:
        raise ConfigError(f"invalid port {cfg.port}")
    if cfg.similarity_weights_path and not Path(cfg.similarity_weights_path).exists():
        raise ConfigError(f"similarity weights file missing: {cfg.similarity_weights_path}")
    return cfg


def waveform_peaks(samples: np.ndarray, px: int) -> list[list[float]]:
    """Per-pixel-column (min, max) pairs over the mono PCM; exactly px pairs."""
    edges = np.floor(np.linspace(0, len(samples), px + 1)).astype(int)
    peaks = []
    for i in range(px):
        col = samples[edges[i] : edges[i + 1]]
        if len(col) == 0:
            peaks.append([0.0, 0.0])
        else:
            peaks.append([float(col.min()), float(col.max())])
    return peaks


def parse_range_header(header: str, size: int):
    """Return (start, end_inclusive), None for malformed, or 'unsatisfiable'."""
    m = re.fullmatch(r"bytes=(\d*)-(\d*)", header.strip())
    if not m or (not m.group(1) and not m.group(2)):
        return None
    if not m.group(1):
        suffix = int(m.group(2))
        if suffix == 0:
            return "unsatisfiable"
        return max(0, size - suffix), size - 1
    start = int(m.group(1))
    end = int(m.group(2)) if m.group(2) else size - 1
    if start >= size or start > end:
        return "unsatisfiable"
    return start, min(end, size - 1)


class Platform:
    """All module stores behind one object; the service owns exactly one."""

    def __init__(self, config: ApiConfig):
        self.config = config
        root = Path(config.corpus_root)
        self.index_dir = root / "index"
        self.index_dir.mkdir(parents=True, exist_ok=True)
        self.artifact_dir = config.resolved_artifact_dir()
        self.artifact_dir.mkdir(parents=True, exist_ok=True)

        self.catalog = Catalog(root, transcoder_template=config.transcoder_template)
        self.match_cfg = MatchConfig(tau=config.fingerprint_tau, decision=config.match_decision)

        fp_path = self.index_dir / "fingerprints.avpf"
        self.fp_index = FingerprintIndex.load(fp_path) if fp_path.exists() else FingerprintIndex()
        feat_path = self.index_dir / "features.avfe"
        self.features = FeatureStore.load(feat_path) if feat_path.exists() else FeatureStore()

        self.weights = None
        if config.similarity_weights_path:
            w = np.asarray(json.loads(Path(config.similarity_weights_path).read_text()), dtype=float)
            if w.shape != (FEATURE_DIM,):
                raise ConfigError(f"similarity weights must have {FEATURE_DIM} entries")
            self.weights = w

        self.events = EventIndex(
            artifact_dir=self.artifact_dir,
            duration_of=self.catalog.duration_of,
            asset_order=lambda aid: self.catalog.get(aid).ingest_time,
        )
        self.dashboards = DashboardStore(
            self.artifact_dir,
            self.fp_index,
            self.catalog.duration_of,
            features=self.features,
            match_cfg=self.match_cfg,
        )
        self.indexing = {"state": "idle", "done": 0, "total": 0}
        self._write_lock = threading.Lock()

    # -- index building -------------------------------------------------

    def missing_assets(self) -> list[str]:
        return [a for a in self.catalog.asset_ids() if a not in self.fp_index or a not in self.features]

    def index_asset(self, asset_id: str) -> None:
        """Fingerprint + segment features for one asset (idempotent)."""
        pcm = self.catalog.get_audio(asset_id)
        with self._write_lock:
            if asset_id not in self.fp_index:
                try:
                    hashes = fingerprint_spectrogram(dsp.stft(pcm.samples))
                except TooShort:
                    hashes = []
                self.fp_index.index_asset(asset_id, hashes, pcm.duration_s)
            if asset_id not in self.features:
                try:
                    feats = extract_segment_features(pcm)
                except TooShort:
                    feats = []
                self.features.add_asset(feats, asset_id=asset_id)

    def build_missing(self) -> None:
        missing = self.missing_assets()
        self.indexing = {"state": "running", "done": 0, "total": len(missing)}
        for i, asset_id in enumerate(missing):
            self.index_asset(asset_id)
            self.indexing = {"state": "running", "done": i + 1, "total": len(missing)}
        with self._write_lock:
            self.features.freeze_stats()
            self.save_indexes()
        self.indexing = {"state": "idle", "done": len(missing), "total": len(missing)}

    def save_indexes(self) -> None:
        self.fp_index.save(self.index_dir / "fingerprints.avpf")
        self.features.save(self.index_dir / "features.avfe")

    def bootstrap(self, background: bool = False):
        """Load artifacts and build any missing per-asset indexes."""
        self.events.load_artifacts(self.artifact_dir)
        if background:
            worker = threading.Thread(target=self.build_missing, daemon=True)
            worker.start()
            return worker
        self.build_missing()
        return None

    def ingest_and_index(self, path, metadata=None):
        asset = self.catalog.ingest(path, metadata)
        self.index_asset(asset.asset_id)
        with self._write_lock:
            self.features.freeze_stats()
            self.save_indexes()
        return asset


class SearchClause(BaseModel):
    label: str
    min_confidence: float = 0.0


class SearchBody(BaseModel):
    clauses: list[SearchClause]
    combine: str = "AND"
    metadata: dict[str, str] = {}
    sort: str = "confidence"


class DashboardBody(BaseModel):
    master_asset_id: str
    sync_point_s: float
    title: str = ""
    created_by: str = "investigator"


class MemberBody(BaseModel):
    asset_id: str


class AnnotationBody(BaseModel):
    asset_id: str
    label: str
    start_s: float
    end_s: float
    author: str = "investigator"
    track: list[dict] | None = None


def _search_results(platform: Platform, body: SearchBody) -> list[dict]:
    query = EventQuery(
        clauses=[(c.label, c.min_confidence) for c in body.clauses],
        combine=body.combine,
        metadata=dict(body.metadata),
        sort=body.sort,
    )
    results = platform.events.query(query, asset_metadata=lambda aid: platform.catalog.get(aid).metadata)
    out = []
    for r in results:
        labels = sorted({e.label for e in r.events})
        out.append(
            {
                "asset_id": r.asset_id,
                "rank_score": r.rank_score,
                "events": [e.event_dict() for e in r.events],
                "spans": {lbl: [list(s) for s in platform.events.aggregate_spans(r.asset_id, lbl)] for lbl in labels},
            }
        )
    return out


def create_app(platform: Platform) -> FastAPI:
    app = FastAPI(title="avp", docs_url=None, redoc_url=None)

    @app.exception_handler(AvpError)
    async def handle_avp_error(request: Request, exc: AvpError):
        status = _STATUS_BY_ERROR.get(type(exc), 400)
        return JSONResponse({"error": exc.code, "detail": exc.detail}, status_code=status)

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        return JSONResponse({"error": "malformed", "detail": str(exc.errors())}, status_code=400)

    @app.exception_handler(ValueError)
    async def handle_value_error(request: Request, exc: ValueError):
        return JSONResponse({"error": "malformed", "detail": str(exc)}, status_code=400)

    # -- catalog --------------------------------------------------------

    @app.get("/assets")
    def list_assets(request: Request):
        meta_filter = {k: v for k, v in request.query_params.items()}
        return [a.to_dict() for a in platform.catalog.list_assets(meta_filter or None)]

    @app.get("/assets/{asset_id}")
    def get_asset(asset_id: str):
        asset = platform.catalog.get(asset_id)
        doc = asset.to_dict()
        doc["labels"] = platform.events.labels(asset_id)
        doc["n_segments"] = platform.features.n_segments(asset_id)
        doc["fingerprinted"] = asset_id in platform.fp_index
        return doc

    @app.get("/assets/{asset_id}/media")
    def get_media(asset_id: str, request: Request):
        path = platform.catalog.media_path(asset_id)
        data = path.read_bytes()
        media_type = mimetypes.guess_type(path.name)[0] or "application/octet-stream"
        base_headers = {"Accept-Ranges": "bytes"}
        range_header = request.headers.get("range")
        if range_header:
            parsed = parse_range_header(range_header, len(data))
            if parsed == "unsatisfiable":
                return Response(
                    status_code=416,
                    headers={**base_headers, "Content-Range": f"bytes */{len(data)}"},
                )
            if parsed is not None:
                start, end = parsed
                return Response(
                    content=data[start : end + 1],
                    status_code=206,
                    media_type=media_type,
                    headers={
                        **base_headers,
                        "Content-Range": f"bytes {start}-{end}/{len(data)}",
                    },
                )
        return Response(content=data, media_type=media_type, headers=base_headers)

    @app.get("/assets/{asset_id}/waveform")
    def get_waveform(asset_id: str, px: int = 1000):
        px = max(WAVEFORM_MIN_PX, min(WAVEFORM_MAX_PX, px))
        pcm = platform.catalog.get_audio(asset_id)
        return {
            "asset_id": asset_id,
            "px": px,
            "duration_s": pcm.duration_s,
            "peaks": waveform_peaks(pcm.samples, px),
        }

    # -- events / search ------------------------------------------------

    @app.post("/search")
    def search(body: SearchBody):
        return _search_results(platform, body)

    @app.get("/labels")
    def labels():
        return platform.events.labels()

    @app.post("/annotations")
    def add_annotation(body: AnnotationBody):
        track = None
        if body.track is not None:
            track = [TrackBox(**b) for b in body.track]
        event_id = platform.events.add_annotation(
            body.asset_id, body.label, body.start_s, body.end_s, author=body.author, track=track
        )
        return {"event_id": event_id}

    @app.delete("/annotations/{event_id}")
    def delete_annotation(event_id: str):
        platform.events.delete_annotation(event_id)
        return {"deleted": event_id}

    # -- similarity -----------------------------------------------------

    @app.get("/similar")
    def similar(asset: str, segment: int | None = None, k: int = 10, scope: str = "all"):
        if segment is None:
            ranked = platform.features.similar_assets(asset, k, weights=platform.weights)
            return [{"asset_id": a, "best_distance": d} for a, d in ranked]
        hits = platform.features.knn(asset, segment, k, scope=scope, weights=platform.weights)
        return [h.to_dict() for h in hits]

    # -- fingerprint matching -------------------------------------------

    @app.get("/match")
    def match(a: str, b: str):
        return match_pair(platform.fp_index, a, b, platform.match_cfg).to_dict()

    @app.get("/match-all")
    def match_all_route(asset: str):
        return [r.to_dict() for r in match_all(platform.fp_index, asset, platform.match_cfg)]

    # -- dashboards -----------------------------------------------------

    @app.get("/dashboards")
    def list_dashboards():
        return [d.to_dict() for d in platform.dashboards.list_dashboards()]

    @app.post("/dashboards")
    def create_dashboard(body: DashboardBody):
        dash = platform.dashboards.create(
            body.master_asset_id, body.sync_point_s, body.title, created_by=body.created_by
        )
        return dash.to_dict()

    @app.get("/dashboards/{dashboard_id}")
    def get_dashboard(dashboard_id: str):
        return platform.dashboards.get(dashboard_id).to_dict()

    @app.post("/dashboards/{dashboard_id}/members")
    def add_member(dashboard_id: str, body: MemberBody):
        return platform.dashboards.add_member(dashboard_id, body.asset_id).to_dict()

    @app.get("/dashboards/{dashboard_id}/recommendations")
    def recommendations(dashboard_id: str, k: int = 10):
        return platform.dashboards.recommend_members(dashboard_id, k)

    @app.get("/dashboards/{dashboard_id}/timeline")
    def timeline(dashboard_id: str):
        return {
            "spans": platform.dashboards.timeline(dashboard_id),
            "audit": platform.dashboards.transitivity_audit(dashboard_id),
        }

    # -- quick detectors ------------------------------------------------

    @app.post("/quickdetect/{asset_id}")
    def run_quickdetect(asset_id: str):
        pcm = platform.catalog.get_audio(asset_id)
        docs = [quickdetect.detect_impulses(pcm), quickdetect.detect_sustained(pcm)]
        written = []
        for doc in docs:
            path = quickdetect.write_artifact(doc, platform.artifact_dir)
            platform.events.add_artifact(doc, source=path.name)
            written.append(path.name)
        return {"artifacts": written}

    # -- health ---------------------------------------------------------

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "assets": len(platform.catalog.asset_ids()),
            "events": len(platform.events.events),
            "fingerprinted": len(platform.fp_index.asset_ids()),
            "feature_segments": platform.features.n_segments(),
            "features_stale": platform.features.stale,
            "artifact_report": platform.events.last_report,
            "indexing": platform.indexing,
        }

    ui_dir = platform.config.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(config: ApiConfig) -> None:
    """Bootstrap the platform and run the HTTP server (blocking)."""
    import uvicorn

    platform = Platform(config)
    platform.bootstrap(background=True)
    app = create_app(platform)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
