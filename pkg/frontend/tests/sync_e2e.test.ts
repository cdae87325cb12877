// @vitest-environment node
//
// End-to-end check against the real backend: build a twin-pair corpus, serve
// it, create a dashboard over HTTP, then drive a 30 s synchronized playback
// and verify member drift never exceeds the 100 ms tolerance after a tick.

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { FakePlayer } from "../src/player.js";
import { DRIFT_TOLERANCE_S, SyncController } from "../src/sync.js";

const PORT = 8600 + (process.pid % 400);
const BASE = `http://127.0.0.1:${PORT}`;

// 40 s scene plus a copy that starts 2 s later with 20 dB SNR noise
const SERVE_SCRIPT = `
import pathlib, sys
import numpy as np
from avp import synth
from avp.service import ApiConfig, Platform, create_app
import uvicorn

root = pathlib.Path(sys.argv[1])
port = int(sys.argv[2])
rng = np.random.default_rng(90)
scene = synth.make_scene(40.0, rng)
twin = synth.add_noise_snr(synth.trim_start(scene, 2.0), 20.0, rng)
media = root / "media"
media.mkdir(parents=True, exist_ok=True)
synth.write_wav(media / "master.wav", scene)
synth.write_wav(media / "twin.wav", twin)
platform = Platform(ApiConfig(corpus_root=str(root / "corpus")))
platform.ingest_and_index(media / "master.wav", {"name": "master"})
platform.ingest_and_index(media / "twin.wav", {"name": "twin"})
uvicorn.run(create_app(platform), host="127.0.0.1", port=port, log_level="warning")
`;

let child: ChildProcess | null = null;
let workdir = "";
const client = new ApiClient(BASE);

async function waitForHealth(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const health = await client.health();
      if (health.status === "ok") return;
    } catch (exc) {
      lastError = exc;
    }
    await new Promise((r) => setTimeout(r, 500));
  }
  throw new Error(`service never came up on ${BASE}: ${String(lastError)}`);
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "avp-e2e-"));
  child = spawn("python3", ["-c", SERVE_SCRIPT, workdir, String(PORT)], {
    stdio: ["ignore", "inherit", "inherit"],
  });
  await waitForHealth(120_000);
}, 150_000);

afterAll(() => {
  child?.kill("SIGTERM");
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

describe("synchronized playback against the live service", () => {
  it("holds drift within 100 ms over a 30 s run on the twin pair", async () => {
    const assets = await client.listAssets();
    const masterId = assets.find((a) => a.metadata.name === "master")?.asset_id;
    const twinId = assets.find((a) => a.metadata.name === "twin")?.asset_id;
    expect(masterId).toBeDefined();
    expect(twinId).toBeDefined();

    const dash = await client.createDashboard(masterId!, 5.0, "e2e twin pair");
    await client.addMember(dash.dashboard_id, twinId!);
    const timeline = await client.timeline(dash.dashboard_id);

    const twinSpan = timeline.spans.find((s) => s.asset_id === twinId);
    expect(twinSpan).toBeDefined();
    expect(twinSpan!.offset_s).toBeGreaterThan(1.95);
    expect(twinSpan!.offset_s).toBeLessThan(2.05);
    expect(timeline.audit.every((a) => a.clean)).toBe(true);

    const durations = new Map(assets.map((a) => [a.asset_id, a.duration_s]));
    const master = new FakePlayer(durations.get(masterId!) ?? 40);
    const sync = SyncController.fromTimeline(
      master,
      timeline,
      (assetId) => new FakePlayer(durations.get(assetId) ?? 38, 1.02),
    );

    // master at t=5 puts the twin near t=3
    master.currentTime = 5;
    const [initial] = sync.tick();
    expect(initial?.mappedTime).toBeGreaterThan(2.9);
    expect(initial?.mappedTime).toBeLessThan(3.1);
    expect(Math.abs(sync.memberList()[0]!.player.currentTime - initial!.mappedTime)).toBeLessThan(
      0.1,
    );

    // 30 s of playback in 0.25 s steps with a 2 % fast member clock
    sync.play();
    const dt = 0.25;
    let worstDrift = 0;
    for (let i = 0; i < 120; i++) {
      master.advance(dt);
      for (const m of sync.memberList()) (m.player as FakePlayer).advance(dt);
      const statuses = sync.tick();
      for (const s of statuses) {
        if (!s.outOfRange) worstDrift = Math.max(worstDrift, s.drift);
      }
    }
    expect(worstDrift).toBeLessThanOrEqual(DRIFT_TOLERANCE_S + 1e-9);
    expect(sync.corrections).toBeGreaterThan(0);
  });

  it("rejects re-adding an existing member with a conflict", async () => {
    const dashboards = await client.listDashboards();
    const dash = dashboards.find((d) => d.title === "e2e twin pair");
    expect(dash).toBeDefined();
    const twinId = dash!.members[0]!.asset_id;
    await expect(client.addMember(dash!.dashboard_id, twinId)).rejects.toMatchObject({
      status: 409,
      code: "duplicate_member",
    });
  });
});
