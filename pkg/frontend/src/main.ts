/** Page wiring: three areas (clipboard, filters, results) plus hash routes
 * for the asset view and sync dashboards. All logic lives in the modules;
 * this file only connects them to the document. */

import { ApiClient, ApiError } from "./api.js";
import { AssetView } from "./assetView.js";
import { Clipboard } from "./clipboard.js";
import { MediaElementPlayer } from "./player.js";
import { SearchView } from "./search.js";
import { SyncController } from "./sync.js";

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  return override ?? "";
}

function area(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing layout element #${id}`);
  return node;
}

function renderClipboard(container: HTMLElement, pins: readonly string[]): void {
  container.replaceChildren();
  const heading = document.createElement("h2");
  heading.textContent = "clipboard";
  container.appendChild(heading);
  if (pins.length === 0) {
    const hint = document.createElement("p");
    hint.textContent = "pin up to two assets for comparison";
    container.appendChild(hint);
    return;
  }
  for (const assetId of pins) {
    const entry = document.createElement("div");
    entry.className = "clipboard-entry";
    const link = document.createElement("a");
    link.href = `#/asset/${assetId}`;
    link.textContent = assetId;
    entry.appendChild(link);
    container.appendChild(entry);
  }
}

async function showAsset(client: ApiClient, container: HTMLElement, assetId: string): Promise<void> {
  container.replaceChildren();
  const media = document.createElement("video");
  media.src = client.mediaUrl(assetId);
  media.controls = true;
  const view = new AssetView(client, assetId, new MediaElementPlayer(media), {
    onNotice: (m) => window.alert(m),
  });
  container.append(media, view.root);
  await view.load();
  window.setInterval(() => view.renderOverlay(media.currentTime), 100);
}

async function showDashboard(
  client: ApiClient,
  container: HTMLElement,
  dashboardId: string,
): Promise<void> {
  container.replaceChildren();
  const dash = await client.getDashboard(dashboardId);
  const timeline = await client.timeline(dashboardId);

  const players = new Map<string, HTMLVideoElement>();
  const grid = document.createElement("div");
  grid.className = "player-grid";
  for (const span of timeline.spans) {
    const media = document.createElement("video");
    media.src = client.mediaUrl(span.asset_id);
    media.muted = !span.is_master; // only the master carries audio
    players.set(span.asset_id, media);
    grid.appendChild(media);
  }
  const masterMedia = players.get(dash.master_asset_id);
  if (!masterMedia) throw new Error("timeline missing master span");

  const controller = SyncController.fromTimeline(
    new MediaElementPlayer(masterMedia),
    timeline,
    (assetId) => {
      const media = players.get(assetId);
      if (!media) throw new Error(`no player for ${assetId}`);
      return new MediaElementPlayer(media);
    },
  );

  const transport = document.createElement("div");
  const playBtn = document.createElement("button");
  playBtn.textContent = "play all";
  playBtn.addEventListener("click", () => controller.play());
  const pauseBtn = document.createElement("button");
  pauseBtn.textContent = "pause all";
  pauseBtn.addEventListener("click", () => controller.pause());
  transport.append(playBtn, pauseBtn);

  container.append(transport, grid);
  window.setInterval(() => controller.tick(), 250);
}

function boot(): void {
  const client = new ApiClient(apiBase());
  const clipboardArea = area("clipboard-area");
  const resultsArea = area("results-area");

  const clipboard = new Clipboard(window.sessionStorage, {
    onChange: (pins) => renderClipboard(clipboardArea, pins),
  });
  renderClipboard(clipboardArea, clipboard.list());

  const search = new SearchView(client, clipboard, {
    onOpenAsset: (assetId) => {
      window.location.hash = `#/asset/${assetId}`;
    },
    onFindSimilar: (assetId) => {
      void client
        .similarAssets(assetId)
        .then((hits) => {
          const names = hits.map((h) => `${h.asset_id} (${h.best_distance.toFixed(2)})`);
          window.alert(`similar to ${assetId}:\n${names.join("\n")}`);
        })
        .catch((exc: unknown) => {
          window.alert(exc instanceof ApiError ? exc.message : String(exc));
        });
    },
  });
  search.mount(area("filters-area"));

  const route = (): void => {
    const hash = window.location.hash;
    const assetMatch = /^#\/asset\/(.+)$/.exec(hash);
    const dashMatch = /^#\/dash\/(.+)$/.exec(hash);
    if (assetMatch?.[1]) {
      void showAsset(client, resultsArea, assetMatch[1]);
    } else if (dashMatch?.[1]) {
      void showDashboard(client, resultsArea, dashMatch[1]);
    }
  };
  window.addEventListener("hashchange", route);
  route();
}

boot();
