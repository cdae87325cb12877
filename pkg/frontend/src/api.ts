/** Typed client for the evidence-platform HTTP API.
 *
 * Every list the UI shows comes straight from these calls; nothing re-sorts
 * or re-scores on the client side.
 */

export interface AssetSummary {
  asset_id: string;
  source_path: string;
  duration_s: number;
  sample_rate_hz: number;
  channels: number;
  content_hash: string;
  metadata: Record<string, string>;
  ingest_time: string;
}

export interface AssetDetail extends AssetSummary {
  labels: string[];
  n_segments: number;
  fingerprinted: boolean;
}

export interface TrackBox {
  t_s: number;
  x: number;
  y: number;
  w: number;
  h: number;
  track_id: number;
}

export interface EventRecord {
  id: string;
  label: string;
  start_s: number;
  end_s: number;
  confidence: number;
  track?: TrackBox[];
  author?: string;
  created_at?: string;
}

/** [start_s, end_s, max_confidence] */
export type Span = [number, number, number];

export interface SearchResult {
  asset_id: string;
  rank_score: number;
  events: EventRecord[];
  spans: Record<string, Span[]>;
}

export interface SearchClause {
  label: string;
  min_confidence: number;
}

export interface SearchBody {
  clauses: SearchClause[];
  combine?: "AND" | "OR";
  metadata?: Record<string, string>;
  sort?: "confidence" | "time";
}

export interface Waveform {
  asset_id: string;
  px: number;
  duration_s: number;
  peaks: [number, number][];
}

export interface SegmentHit {
  asset_id: string;
  segment_idx: number;
  distance: number;
}

export interface AssetHit {
  asset_id: string;
  best_distance: number;
}

export interface MatchResult {
  asset_a: string;
  asset_b: string;
  offset_s: number;
  bin_count: number;
  z_score: number;
  is_match: boolean;
  total_matched: number;
}

export interface Member {
  asset_id: string;
  offset_s: number;
  z_score: number;
}

export interface Dashboard {
  schema_version: number;
  dashboard_id: string;
  title: string;
  master_asset_id: string;
  sync_point_s: number;
  members: Member[];
  created_by: string;
  created_at: string;
}

export interface TimelineSpan {
  asset_id: string;
  start_on_master_s: number;
  end_on_master_s: number;
  offset_s: number;
  is_master: boolean;
}

export interface AuditEntry {
  asset_a: string;
  asset_b: string;
  residual_s: number;
  clean: boolean;
}

export interface Timeline {
  spans: TimelineSpan[];
  audit: AuditEntry[];
}

export interface Recommendation {
  asset_id: string;
  score: number;
  tie_distance: number;
}

export interface AnnotationBody {
  asset_id: string;
  label: string;
  start_s: number;
  end_s: number;
  author?: string;
  track?: TrackBox[];
}

export interface Health {
  status: string;
  assets: number;
  events: number;
  fingerprinted: number;
  feature_segments: number;
  features_stale: boolean;
  indexing: { state: string; done: number; total: number };
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
    this.name = "ApiError";
  }
}

async function toError(res: Response): Promise<ApiError> {
  let code = `http_${res.status}`;
  let detail = res.statusText;
  try {
    const body = (await res.json()) as { error?: string; detail?: unknown };
    if (body.error) code = body.error;
    if (body.detail !== undefined) detail = String(body.detail);
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(res.status, code, detail);
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async get<T>(path: string, params?: Record<string, string | number>): Promise<T> {
    let url = this.baseUrl + path;
    if (params) {
      const q = new URLSearchParams();
      for (const [k, v] of Object.entries(params)) q.set(k, String(v));
      url += `?${q.toString()}`;
    }
    const res = await fetch(url);
    if (!res.ok) throw await toError(res);
    return (await res.json()) as T;
  }

  private async send<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) throw await toError(res);
    return (await res.json()) as T;
  }

  listAssets(metadata?: Record<string, string>): Promise<AssetSummary[]> {
    return this.get("/assets", metadata);
  }

  getAsset(assetId: string): Promise<AssetDetail> {
    return this.get(`/assets/${assetId}`);
  }

  mediaUrl(assetId: string): string {
    return `${this.baseUrl}/assets/${assetId}/media`;
  }

  waveform(assetId: string, px: number): Promise<Waveform> {
    return this.get(`/assets/${assetId}/waveform`, { px });
  }

  search(body: SearchBody): Promise<SearchResult[]> {
    return this.send("POST", "/search", body);
  }

  labels(): Promise<string[]> {
    return this.get("/labels");
  }

  addAnnotation(body: AnnotationBody): Promise<{ event_id: string }> {
    return this.send("POST", "/annotations", body);
  }

  deleteAnnotation(eventId: string): Promise<{ deleted: string }> {
    return this.send("DELETE", `/annotations/${eventId}`);
  }

  similarSegments(assetId: string, segment: number, k = 10): Promise<SegmentHit[]> {
    return this.get("/similar", { asset: assetId, segment, k });
  }

  similarAssets(assetId: string, k = 10): Promise<AssetHit[]> {
    return this.get("/similar", { asset: assetId, k });
  }

  match(a: string, b: string): Promise<MatchResult> {
    return this.get("/match", { a, b });
  }

  matchAll(assetId: string): Promise<MatchResult[]> {
    return this.get("/match-all", { asset: assetId });
  }

  listDashboards(): Promise<Dashboard[]> {
    return this.get("/dashboards");
  }

  createDashboard(masterAssetId: string, syncPointS: number, title: string): Promise<Dashboard> {
    return this.send("POST", "/dashboards", {
      master_asset_id: masterAssetId,
      sync_point_s: syncPointS,
      title,
    });
  }

  getDashboard(dashboardId: string): Promise<Dashboard> {
    return this.get(`/dashboards/${dashboardId}`);
  }

  addMember(dashboardId: string, assetId: string): Promise<Dashboard> {
    return this.send("POST", `/dashboards/${dashboardId}/members`, { asset_id: assetId });
  }

  recommendations(dashboardId: string, k = 10): Promise<Recommendation[]> {
    return this.get(`/dashboards/${dashboardId}/recommendations`, { k });
  }

  timeline(dashboardId: string): Promise<Timeline> {
    return this.get(`/dashboards/${dashboardId}/timeline`);
  }

  quickdetect(assetId: string): Promise<{ artifacts: string[] }> {
    return this.send("POST", `/quickdetect/${assetId}`);
  }

  health(): Promise<Health> {
    return this.get("/health");
  }
}
