/** Search area: label clauses with confidence sliders, results as cards.
 *
 * The result grid is a pure pass-through: cards appear in exactly the order
 * the API returned them.
 */

import { ApiClient, ApiError, SearchClause, SearchResult } from "./api.js";
import { Clipboard } from "./clipboard.js";
import { labelColor } from "./colors.js";

export interface SearchViewHooks {
  onOpenAsset?: (assetId: string) => void;
  onFindSimilar?: (assetId: string) => void;
}

export class SearchView {
  readonly root: HTMLElement;
  private clauses: SearchClause[] = [];
  private combine: "AND" | "OR" = "AND";
  private knownLabels: string[] = [];

  private clauseList: HTMLElement;
  private labelPicker: HTMLSelectElement;
  private metadataInput: HTMLInputElement;
  private searchButton: HTMLButtonElement;
  private errorBox: HTMLElement;
  private results: HTMLElement;

  constructor(
    private readonly client: ApiClient,
    private readonly clipboard: Clipboard,
    private readonly hooks: SearchViewHooks = {},
  ) {
    this.root = el("div", "search-view");

    const form = el("div", "search-form");
    this.labelPicker = document.createElement("select");
    this.labelPicker.className = "label-picker";
    const addBtn = button("add label", () => {
      const label = this.labelPicker.value;
      if (label) this.addClause(label, 0.5);
    });
    this.clauseList = el("div", "clause-list");

    const combineToggle = document.createElement("select");
    combineToggle.className = "combine-toggle";
    for (const mode of ["AND", "OR"]) {
      const opt = document.createElement("option");
      opt.value = mode;
      opt.textContent = mode;
      combineToggle.appendChild(opt);
    }
    combineToggle.addEventListener("change", () => {
      this.combine = combineToggle.value === "OR" ? "OR" : "AND";
    });

    this.metadataInput = document.createElement("input");
    this.metadataInput.className = "metadata-filter";
    this.metadataInput.placeholder = "metadata filter: site=plaza source=phone";

    this.searchButton = button("search", () => void this.runSearch());
    this.searchButton.className = "search-button";
    this.searchButton.disabled = true;

    this.errorBox = el("div", "error-box");
    this.errorBox.hidden = true;
    this.results = el("div", "result-grid");

    form.append(this.labelPicker, addBtn, this.clauseList, combineToggle, this.metadataInput, this.searchButton);
    this.root.append(form, this.errorBox, this.results);
  }

  mount(container: HTMLElement): void {
    container.appendChild(this.root);
    void this.refreshLabels();
  }

  async refreshLabels(): Promise<void> {
    try {
      this.knownLabels = await this.client.labels();
    } catch (exc) {
      this.showError(exc);
      return;
    }
    this.labelPicker.replaceChildren();
    for (const label of this.knownLabels) {
      const opt = document.createElement("option");
      opt.value = label;
      opt.textContent = label;
      this.labelPicker.appendChild(opt);
    }
  }

  addClause(label: string, minConfidence: number): void {
    this.clauses.push({ label, min_confidence: minConfidence });
    this.renderClauses();
  }

  removeClause(index: number): void {
    this.clauses.splice(index, 1);
    this.renderClauses();
  }

  getClauses(): readonly SearchClause[] {
    return this.clauses;
  }

  private renderClauses(): void {
    this.clauseList.replaceChildren();
    this.clauses.forEach((clause, i) => {
      const row = el("div", "clause-row");
      const swatch = el("span", "label-swatch");
      swatch.style.backgroundColor = labelColor(clause.label);
      const name = el("span", "clause-label");
      name.textContent = clause.label;

      const slider = document.createElement("input");
      slider.type = "range";
      slider.min = "0";
      slider.max = "1";
      slider.step = "0.05";
      slider.value = String(clause.min_confidence);
      const readout = el("span", "clause-confidence");
      readout.textContent = clause.min_confidence.toFixed(2);
      slider.addEventListener("input", () => {
        clause.min_confidence = Number(slider.value);
        readout.textContent = clause.min_confidence.toFixed(2);
      });

      row.append(swatch, name, slider, readout, button("remove", () => this.removeClause(i)));
      this.clauseList.appendChild(row);
    });
    this.searchButton.disabled = this.clauses.length === 0;
  }

  parseMetadataFilter(): Record<string, string> {
    const out: Record<string, string> = {};
    for (const token of this.metadataInput.value.trim().split(/\s+/)) {
      const eq = token.indexOf("=");
      if (eq > 0) out[token.slice(0, eq)] = token.slice(eq + 1);
    }
    return out;
  }

  async runSearch(): Promise<void> {
    if (this.clauses.length === 0) return;
    this.errorBox.hidden = true;
    let results: SearchResult[];
    try {
      results = await this.client.search({
        clauses: this.clauses,
        combine: this.combine,
        metadata: this.parseMetadataFilter(),
      });
    } catch (exc) {
      this.showError(exc);
      return;
    }
    this.renderResults(results);
  }

  /** Cards are appended in API order; nothing re-sorts on the client. */
  renderResults(results: SearchResult[]): void {
    this.results.replaceChildren();
    for (const result of results) {
      this.results.appendChild(this.card(result));
    }
    if (results.length === 0) {
      const empty = el("div", "no-results");
      empty.textContent = "no assets matched";
      this.results.appendChild(empty);
    }
  }

  private card(result: SearchResult): HTMLElement {
    const card = el("div", "result-card");
    card.dataset.assetId = result.asset_id;

    const title = el("div", "card-title");
    title.textContent = result.asset_id;
    title.addEventListener("click", () => this.hooks.onOpenAsset?.(result.asset_id));

    const score = el("div", "card-score");
    score.textContent = `rank ${result.rank_score.toFixed(3)}, ${result.events.length} events`;

    const labels = el("div", "card-labels");
    for (const label of Object.keys(result.spans)) {
      const chip = el("span", "label-chip");
      chip.textContent = label;
      chip.style.backgroundColor = labelColor(label);
      labels.appendChild(chip);
    }

    const actions = el("div", "card-actions");
    actions.append(
      button("find similar", () => this.hooks.onFindSimilar?.(result.asset_id)),
      button("pin to clipboard", () => {
        const evicted = this.clipboard.pin(result.asset_id);
        if (evicted) this.notice(`unpinned ${evicted} to make room`);
      }),
    );

    card.append(title, score, labels, actions);
    return card;
  }

  notice(message: string): void {
    this.errorBox.hidden = false;
    this.errorBox.textContent = message;
  }

  private showError(exc: unknown): void {
    const message = exc instanceof ApiError ? `${exc.code}: ${exc.detail}` : String(exc);
    this.notice(message);
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}

function button(text: string, onClick: () => void): HTMLButtonElement {
  const b = document.createElement("button");
  b.type = "button";
  b.textContent = text;
  b.addEventListener("click", onClick);
  return b;
}
