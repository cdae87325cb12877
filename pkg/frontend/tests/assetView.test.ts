import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, EventRecord, Waveform } from "../src/api.js";
import { AssetView, BOX_HOLD_S, interpolateBoxes } from "../src/assetView.js";
import { FakePlayer } from "../src/player.js";

// jsdom has no canvas backend; the view already tolerates a null context
(HTMLCanvasElement.prototype as unknown as { getContext: () => null }).getContext = () => null;

const WAVEFORM: Waveform = {
  asset_id: "x",
  px: 4,
  duration_s: 10,
  peaks: [
    [-0.5, 0.5],
    [-0.1, 0.1],
    [-0.9, 0.9],
    [0, 0],
  ],
};

function trackedEvent(): EventRecord {
  return {
    id: "e1",
    label: "person",
    start_s: 1,
    end_s: 3,
    confidence: 0.9,
    track: [
      { t_s: 1.0, x: 0.1, y: 0.2, w: 0.2, h: 0.4, track_id: 0 },
      { t_s: 3.0, x: 0.3, y: 0.4, w: 0.4, h: 0.2, track_id: 0 },
      { t_s: 1.5, x: 0.6, y: 0.6, w: 0.1, h: 0.1, track_id: 1 },
    ],
  };
}

describe("box interpolation", () => {
  it("lerps every box field between the straddling samples", () => {
    const boxes = interpolateBoxes(trackedEvent(), 2.0).filter((b) => b.trackId === 0);
    expect(boxes.length).toBe(1);
    const box = boxes[0]!;
    expect(box.x).toBeCloseTo(0.2, 10);
    expect(box.y).toBeCloseTo(0.3, 10);
    expect(box.w).toBeCloseTo(0.3, 10);
    expect(box.h).toBeCloseTo(0.3, 10);
  });

  it("shows nothing outside a track's sampled range", () => {
    const only0 = (t: number) => interpolateBoxes(trackedEvent(), t).filter((b) => b.trackId === 0);
    expect(only0(0.5)).toEqual([]);
    expect(only0(3.5)).toEqual([]);
    expect(only0(1.0).length).toBe(1);
  });

  it("holds a lone box briefly and handles events with no track", () => {
    const single = interpolateBoxes(trackedEvent(), 1.5).filter((b) => b.trackId === 1);
    expect(single.length).toBe(1);
    const gone = interpolateBoxes(trackedEvent(), 1.5 + BOX_HOLD_S + 0.01).filter(
      (b) => b.trackId === 1,
    );
    expect(gone).toEqual([]);
    expect(interpolateBoxes({ ...trackedEvent(), track: undefined }, 2.0)).toEqual([]);
  });
});

describe("asset view", () => {
  let player: FakePlayer;
  let view: AssetView;

  beforeEach(() => {
    document.body.replaceChildren();
    player = new FakePlayer(10);
    view = new AssetView({} as ApiClient, "x", player);
    document.body.appendChild(view.root);
    view.setState(
      WAVEFORM,
      {
        gunshot: [
          [1, 2, 0.9],
          [4, 5, 0.8],
          [7, 8, 0.7],
        ],
      },
      [],
    );
  });

  it("draws one colored band per aggregated span", () => {
    const bands = document.querySelectorAll<HTMLElement>(".event-band");
    expect(bands.length).toBe(3);
    expect([...bands].map((b) => b.dataset.label)).toEqual(["gunshot", "gunshot", "gunshot"]);
  });

  it("clicking a band seeks the player into that span", () => {
    const bands = document.querySelectorAll<HTMLElement>(".event-band");
    bands[1]!.click();
    expect(player.currentTime).toBe(4);
  });

  it("next/previous detection walk the span starts", () => {
    view.nextDetection();
    expect(player.currentTime).toBe(1);
    view.nextDetection();
    expect(player.currentTime).toBe(4);
    player.seek(9);
    view.prevDetection();
    expect(player.currentTime).toBe(7);
    view.prevDetection();
    expect(player.currentTime).toBe(4);
  });

  it("rejects an inverted annotation span before any request", async () => {
    const addAnnotation = vi.fn();
    const bad = new AssetView({ addAnnotation } as unknown as ApiClient, "x", player);
    bad.setState(WAVEFORM, {}, []);
    await expect(bad.annotate("mark", 5, 2)).rejects.toThrow("start < end");
    await expect(bad.annotate("mark", -1, 2)).rejects.toThrow("start < end");
    await expect(bad.annotate("", 1, 2)).rejects.toThrow("label");
    expect(addAnnotation).not.toHaveBeenCalled();
  });

  it("adds annotations optimistically and rolls back on API failure", async () => {
    const notices: string[] = [];
    const failing = new AssetView(
      {
        addAnnotation: vi.fn(async () => {
          throw new ApiError(404, "unknown_asset", "x");
        }),
      } as unknown as ApiClient,
      "x",
      player,
      { onNotice: (m) => notices.push(m) },
    );
    document.body.replaceChildren(failing.root);
    failing.setState(WAVEFORM, { gunshot: [[1, 2, 0.9]] }, []);
    expect(document.querySelectorAll(".event-band").length).toBe(1);

    await expect(failing.annotate("blue_car", 3, 4)).rejects.toThrow("unknown_asset");
    expect(document.querySelectorAll(".event-band").length).toBe(1);
    expect(notices.some((n) => n.includes("unknown_asset"))).toBe(true);

    const ok = new AssetView(
      { addAnnotation: vi.fn(async () => ({ event_id: "e9" })) } as unknown as ApiClient,
      "x",
      player,
    );
    document.body.replaceChildren(ok.root);
    ok.setState(WAVEFORM, { gunshot: [[1, 2, 0.9]] }, []);
    await expect(ok.annotate("blue_car", 3, 4)).resolves.toBe("e9");
    expect(document.querySelectorAll(".event-band").length).toBe(2);
  });

  it("renders interpolated overlay boxes at the player time", () => {
    view.setState(WAVEFORM, {}, [trackedEvent()]);
    view.renderOverlay(2.0);
    const boxes = document.querySelectorAll<HTMLElement>(".track-box");
    expect(boxes.length).toBe(1);
    expect(boxes[0]!.style.left).toBe("20%");
    view.renderOverlay(0.2); // before every track sample: overlay empty
    expect(document.querySelectorAll(".track-box").length).toBe(0);
  });
});
