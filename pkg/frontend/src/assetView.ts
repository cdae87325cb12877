/** Single-asset view: waveform with colored event bands, detection
 * navigation, bounding-box overlay and annotation entry. */

import { ApiClient, ApiError, EventRecord, Span, TrackBox, Waveform } from "./api.js";
import { labelColor } from "./colors.js";
import { Player } from "./player.js";

/** A lone box with no partner to interpolate toward stays visible this long. */
export const BOX_HOLD_S = 0.25;

export interface PositionedBox {
  x: number;
  y: number;
  w: number;
  h: number;
  label: string;
  trackId: number;
}

/** Linear interpolation between the track boxes straddling t, grouped by
 * track id. Outside a track's time range it contributes nothing. */
export function interpolateBoxes(event: EventRecord, t: number): PositionedBox[] {
  if (!event.track || event.track.length === 0) return [];
  const byTrack = new Map<number, TrackBox[]>();
  for (const box of event.track) {
    const list = byTrack.get(box.track_id);
    if (list) list.push(box);
    else byTrack.set(box.track_id, [box]);
  }
  const out: PositionedBox[] = [];
  for (const [trackId, boxes] of byTrack) {
    boxes.sort((a, b) => a.t_s - b.t_s);
    const first = boxes[0]!;
    const last = boxes[boxes.length - 1]!;
    if (boxes.length === 1) {
      if (Math.abs(t - first.t_s) <= BOX_HOLD_S) {
        out.push({ x: first.x, y: first.y, w: first.w, h: first.h, label: event.label, trackId });
      }
      continue;
    }
    if (t < first.t_s || t > last.t_s) continue;
    let i = 0;
    while (i < boxes.length - 2 && boxes[i + 1]!.t_s < t) i++;
    const a = boxes[i]!;
    const b = boxes[i + 1]!;
    const range = b.t_s - a.t_s;
    const frac = range > 0 ? (t - a.t_s) / range : 0;
    out.push({
      x: a.x + (b.x - a.x) * frac,
      y: a.y + (b.y - a.y) * frac,
      w: a.w + (b.w - a.w) * frac,
      h: a.h + (b.h - a.h) * frac,
      label: event.label,
      trackId,
    });
  }
  return out;
}

export interface AssetViewHooks {
  onNotice?: (message: string) => void;
}

export class AssetView {
  readonly root: HTMLElement;
  private waveform: Waveform | null = null;
  private spans: Record<string, Span[]> = {};
  private events: EventRecord[] = [];

  private canvas: HTMLCanvasElement;
  private bands: HTMLElement;
  private overlay: HTMLElement;

  constructor(
    private readonly client: ApiClient,
    readonly assetId: string,
    readonly player: Player,
    private readonly hooks: AssetViewHooks = {},
  ) {
    this.root = document.createElement("div");
    this.root.className = "asset-view";
    this.canvas = document.createElement("canvas");
    this.canvas.className = "waveform";
    this.canvas.width = 1000;
    this.canvas.height = 120;
    this.canvas.addEventListener("click", (e) => {
      if (!this.waveform) return;
      const rect = this.canvas.getBoundingClientRect();
      const frac = rect.width > 0 ? (e.clientX - rect.left) / rect.width : 0;
      this.player.seek(frac * this.waveform.duration_s);
    });
    this.bands = document.createElement("div");
    this.bands.className = "event-bands";
    this.overlay = document.createElement("div");
    this.overlay.className = "box-overlay";

    const nav = document.createElement("div");
    nav.className = "detection-nav";
    nav.append(
      navButton("prev detection", () => this.prevDetection()),
      navButton("next detection", () => this.nextDetection()),
    );
    this.root.append(this.canvas, this.bands, nav, this.overlay);
  }

  async load(): Promise<void> {
    const detail = await this.client.getAsset(this.assetId);
    this.waveform = await this.client.waveform(this.assetId, 1000);
    if (detail.labels.length > 0) {
      const results = await this.client.search({
        clauses: detail.labels.map((label) => ({ label, min_confidence: 0 })),
        combine: "OR",
      });
      const mine = results.find((r) => r.asset_id === this.assetId);
      this.spans = mine?.spans ?? {};
      this.events = mine?.events ?? [];
    } else {
      this.spans = {};
      this.events = [];
    }
    this.drawWaveform();
    this.rebuildBands();
  }

  /** For tests: inject state without a live API. */
  setState(waveform: Waveform, spans: Record<string, Span[]>, events: EventRecord[]): void {
    this.waveform = waveform;
    this.spans = spans;
    this.events = events;
    this.drawWaveform();
    this.rebuildBands();
  }

  private drawWaveform(): void {
    if (!this.waveform) return;
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return; // jsdom has no 2d context; bands still render
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#4a6fa5";
    const peaks = this.waveform.peaks;
    const colWidth = width / peaks.length;
    const mid = height / 2;
    peaks.forEach(([lo, hi], i) => {
      const y0 = mid - hi * mid;
      const y1 = mid - lo * mid;
      ctx.fillRect(i * colWidth, y0, Math.max(1, colWidth), Math.max(1, y1 - y0));
    });
  }

  private rebuildBands(): void {
    this.bands.replaceChildren();
    if (!this.waveform) return;
    const duration = this.waveform.duration_s;
    for (const [label, spans] of Object.entries(this.spans)) {
      for (const [start, end, confidence] of spans) {
        const band = document.createElement("div");
        band.className = "event-band";
        band.dataset.label = label;
        band.dataset.start = String(start);
        band.style.backgroundColor = labelColor(label);
        band.style.left = `${(start / duration) * 100}%`;
        band.style.width = `${(Math.max(end - start, 0.05) / duration) * 100}%`;
        band.title = `${label} ${start.toFixed(2)}-${end.toFixed(2)}s (${confidence.toFixed(2)})`;
        band.addEventListener("click", () => this.player.seek(start));
        this.bands.appendChild(band);
      }
    }
  }

  detectionStarts(): number[] {
    const starts: number[] = [];
    for (const spans of Object.values(this.spans)) {
      for (const [start] of spans) starts.push(start);
    }
    return starts.sort((a, b) => a - b);
  }

  nextDetection(): void {
    const t = this.player.currentTime;
    const next = this.detectionStarts().find((s) => s > t + 1e-6);
    if (next !== undefined) this.player.seek(next);
  }

  prevDetection(): void {
    const t = this.player.currentTime;
    const starts = this.detectionStarts().filter((s) => s < t - 1e-6);
    const prev = starts[starts.length - 1];
    if (prev !== undefined) this.player.seek(prev);
  }

  /** Create an annotation. Bad spans are rejected here, before any request;
   * the band appears optimistically and is rolled back if the API refuses. */
  async annotate(label: string, startS: number, endS: number, track?: TrackBox[]): Promise<string> {
    if (!label.trim()) throw new Error("annotation needs a label");
    if (!(startS >= 0) || !(endS > startS)) {
      throw new Error("annotation span must satisfy 0 <= start < end");
    }
    const optimistic: Span = [startS, endS, 1.0];
    const existing = this.spans[label] ?? [];
    this.spans[label] = [...existing, optimistic];
    this.rebuildBands();
    try {
      const res = await this.client.addAnnotation({
        asset_id: this.assetId,
        label,
        start_s: startS,
        end_s: endS,
        track,
      });
      return res.event_id;
    } catch (exc) {
      this.spans[label] = existing;
      if (existing.length === 0) delete this.spans[label];
      this.rebuildBands();
      const message = exc instanceof ApiError ? `${exc.code}: ${exc.detail}` : String(exc);
      this.hooks.onNotice?.(`annotation rejected: ${message}`);
      throw exc;
    }
  }

  /** All interpolated boxes visible at time t, fractional coordinates. */
  boxesAt(t: number): PositionedBox[] {
    return this.events.flatMap((event) => interpolateBoxes(event, t));
  }

  renderOverlay(t: number): void {
    this.overlay.replaceChildren();
    for (const box of this.boxesAt(t)) {
      const div = document.createElement("div");
      div.className = "track-box";
      div.dataset.trackId = String(box.trackId);
      div.style.borderColor = labelColor(box.label);
      div.style.left = `${box.x * 100}%`;
      div.style.top = `${box.y * 100}%`;
      div.style.width = `${box.w * 100}%`;
      div.style.height = `${box.h * 100}%`;
      this.overlay.appendChild(div);
    }
  }
}

function navButton(text: string, onClick: () => void): HTMLButtonElement {
  const b = document.createElement("button");
  b.type = "button";
  b.textContent = text;
  b.addEventListener("click", onClick);
  return b;
}
