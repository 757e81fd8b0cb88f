import { fmt, fmtInterval } from "./format.js";
import type { AttributionResponse, ReportResponse } from "./types.js";
import type { LegendEntry } from "./scatter.js";

function field(label: string, name: string, value: number | string | null): string {
  return `<div class="field"><span class="label">${label}</span>` +
    `<span class="num" data-field="${name}">${fmt(value)}</span></div>`;
}

export function renderReport(container: HTMLElement, report: ReportResponse): void {
  container.innerHTML =
    `<h2>Feasibility report</h2>` +
    field("trustworthiness", "trustworthiness", report.trustworthiness) +
    field("proximity", "proximity", report.proximity) +
    field("clusters", "k", report.k) +
    field("radius mean", "radius.mean", report.radius.mean) +
    field("radius min", "radius.min", report.radius.min) +
    field("radius max", "radius.max", report.radius.max) +
    field("density mean", "density.mean", report.density.mean) +
    field("silhouette", "silhouette", report.silhouette) +
    `<div class="field"><span class="label">suitable</span>` +
    `<span class="verdict ${report.suitable ? "ok" : "bad"}">${report.suitable ? "✓" : "✗"}</span></div>`;
}

export function renderLegend(container: HTMLElement, entries: LegendEntry[]): void {
  container.innerHTML =
    `<h3>Legend</h3>` +
    entries
      .map(
        (e) =>
          `<div class="legend-entry"><span class="swatch" style="background:${e.color}"></span>` +
          `<span class="legend-label">${e.label}</span></div>`,
      )
      .join("");
}

export interface InspectorCallbacks {
  onDraftSize: (size: number) => void;
  onMatch: () => void;
}

/** Ranked attributions with prefix-draft checkboxes and the match action.
 *
 * The draft is always the top-n prefix of the ranking (the booster endpoint
 * composes from the strongest n attributions), so checking row i selects
 * rows 0..i and unchecking it deselects i and everything below.
 */
export function renderInspector(
  container: HTMLElement,
  attribution: AttributionResponse,
  draftSize: number,
  matchedCount: number | null,
  callbacks: InspectorCallbacks,
): void {
  const rows = attribution.attributions
    .map((attr, i) => {
      const detail =
        attr.kind === "categorical"
          ? `= ${attr.value ?? ""}`
          : `∈ ${attr.interval ? fmtInterval(attr.interval) : ""}`;
      return (
        `<label class="attr-row"><input type="checkbox" data-rank="${i}" ${i < draftSize ? "checked" : ""}/>` +
        `<span class="attr-feature">${attr.feature}</span>` +
        `<span class="attr-detail">${detail}</span>` +
        `<span class="num" data-field="attributions.${i}.score">${fmt(attr.score)}</span>` +
        `<span class="num" data-field="attributions.${i}.coverage">${fmt(attr.coverage)}</span></label>`
      );
    })
    .join("");
  container.innerHTML =
    `<h2>Cluster ${attribution.cluster_id}${attribution.flagged ? " ⚑" : ""}</h2>` +
    field("size", "size", attribution.size) +
    field("mean score", "mean_score", attribution.mean_score) +
    field("min score", "min_score", attribution.min_score) +
    field("max score", "max_score", attribution.max_score) +
    `<h3>Attributions</h3><div class="attr-list">${rows}</div>` +
    `<div class="booster-bar">` +
    `<input type="file" id="catalog-file" />` +
    `<button id="match-button" ${draftSize === 0 ? "disabled" : ""}>match</button>` +
    `<span id="match-count">${matchedCount === null ? "" : `${matchedCount} matched`}</span>` +
    `</div>`;

  for (const box of container.querySelectorAll<HTMLInputElement>("input[type=checkbox]")) {
    box.addEventListener("change", () => {
      const rank = Number(box.dataset.rank);
      callbacks.onDraftSize(box.checked ? rank + 1 : rank);
    });
  }
  container
    .querySelector<HTMLButtonElement>("#match-button")
    ?.addEventListener("click", () => callbacks.onMatch());
}

export function renderError(container: HTMLElement, message: string): void {
  container.innerHTML = `<div class="error">${message}</div>`;
}

export function clearError(container: HTMLElement): void {
  container.innerHTML = "";
}
