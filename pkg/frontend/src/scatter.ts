import { categoricalColor, MISSING_COLOR, rampRedGreen, TRAINING_COLOR } from "./color.js";
import { fmt } from "./format.js";
import type { OverlayResponse, ResResponse } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
export const WIDTH = 640;
export const HEIGHT = 480;
const MARGIN = 32;

export interface ScatterCallbacks {
  onPick?: (sampleIndex: number) => void;
  onLasso?: (sampleIndices: number[]) => void;
}

export interface LegendEntry {
  label: string;
  color: string;
}

interface Projected {
  x: number;
  y: number;
}

function extent(rows: number[][]): [number, number, number, number] {
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const [x, y] of rows) {
    if (x < minX) minX = x;
    if (x > maxX) maxX = x;
    if (y < minY) minY = y;
    if (y > maxY) maxY = y;
  }
  return [minX, maxX, minY, maxY];
}

function projector(rows: number[][]): (p: number[]) => Projected {
  const [minX, maxX, minY, maxY] = extent(rows);
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const innerW = WIDTH - 2 * MARGIN;
  const innerH = HEIGHT - 2 * MARGIN;
  return ([x, y]) => ({
    x: MARGIN + ((x - minX) / spanX) * innerW,
    y: HEIGHT - MARGIN - ((y - minY) / spanY) * innerH, // PC2 grows upward
  });
}

/** Fill colors for an overlay, plus the legend that explains them. */
export function overlayColors(
  overlay: OverlayResponse,
): { colors: string[]; legend: LegendEntry[] } {
  if (overlay.kind === "categorical") {
    const order: string[] = [];
    for (const value of overlay.values) {
      if (typeof value === "string" && !order.includes(value)) order.push(value);
    }
    const colorOf = new Map(order.map((v, i) => [v, categoricalColor(i)]));
    return {
      colors: overlay.values.map((v) =>
        typeof v === "string" ? (colorOf.get(v) as string) : MISSING_COLOR,
      ),
      legend: order.map((label) => ({ label, color: colorOf.get(label) as string })),
    };
  }
  const present = overlay.values.filter((v): v is number => typeof v === "number");
  // scores live on a fixed [0, 1] domain; other numeric features normalize
  // to their own observed range
  let lo = 0;
  let hi = 1;
  if (overlay.kind === "numeric") {
    lo = present.length ? present.reduce((a, b) => Math.min(a, b), Infinity) : 0;
    hi = present.length ? present.reduce((a, b) => Math.max(a, b), -Infinity) : 1;
  }
  const span = hi - lo || 1;
  const colors = overlay.values.map((v) =>
    typeof v === "number" ? rampRedGreen((v - lo) / span) : MISSING_COLOR,
  );
  return {
    colors,
    legend: [
      { label: `low ${fmt(present.length ? lo : null)}`, color: rampRedGreen(0) },
      { label: `high ${fmt(present.length ? hi : null)}`, color: rampRedGreen(1) },
    ],
  };
}

export function pointInPolygon(x: number, y: number, polygon: Projected[]): boolean {
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const a = polygon[i];
    const b = polygon[j];
    if (a.y > y !== b.y > y && x < ((b.x - a.x) * (y - a.y)) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

export function nearestIndex(x: number, y: number, points: Projected[]): number {
  let best = -1;
  let bestDist = Infinity;
  points.forEach((p, i) => {
    const d = (p.x - x) ** 2 + (p.y - y) ** 2;
    if (d < bestDist) {
      bestDist = d;
      best = i;
    }
  });
  return best;
}

export interface ScatterHandle {
  legend: LegendEntry[];
  projected: Projected[];
}

/** One mark per sample; optional purple training series; click picks the
 * nearest sample, a dragged lasso reports every enclosed sample. */
export function renderScatter(
  svg: SVGSVGElement,
  res: ResResponse,
  overlay: OverlayResponse,
  options: {
    selectedMembers?: Set<number>;
    callbacks?: ScatterCallbacks;
  } = {},
): ScatterHandle {
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.innerHTML = "";
  const allRows = res.training ? res.coords.concat(res.training.coords) : res.coords;
  const project = projector(allRows);
  const projected = res.coords.map(project);
  const { colors, legend } = overlayColors(overlay);

  const axis = document.createElementNS(SVG_NS, "text");
  axis.setAttribute("x", String(WIDTH / 2));
  axis.setAttribute("y", String(HEIGHT - 6));
  axis.setAttribute("class", "axis-label");
  axis.textContent = `PC1 × PC2 (ratio ${fmt(res.explained_ratio[0])}, ${fmt(res.explained_ratio[1])})`;
  svg.appendChild(axis);

  if (res.training) {
    for (const [i, coord] of res.training.coords.entries()) {
      const p = project(coord);
      const square = document.createElementNS(SVG_NS, "rect");
      square.setAttribute("x", String(p.x - 2.5));
      square.setAttribute("y", String(p.y - 2.5));
      square.setAttribute("width", "5");
      square.setAttribute("height", "5");
      square.setAttribute("fill", TRAINING_COLOR);
      square.setAttribute("class", "training");
      square.setAttribute("data-id", res.training.ids[i]);
      svg.appendChild(square);
    }
  }

  for (const [i, p] of projected.entries()) {
    const mark = document.createElementNS(SVG_NS, "circle");
    mark.setAttribute("cx", String(p.x));
    mark.setAttribute("cy", String(p.y));
    mark.setAttribute("r", "4");
    mark.setAttribute("fill", colors[i]);
    mark.setAttribute("class", "mark");
    mark.setAttribute("data-index", String(i));
    mark.setAttribute("data-id", res.ids[i]);
    const selected = options.selectedMembers;
    if (selected && selected.size > 0) {
      mark.setAttribute("opacity", selected.has(i) ? "1" : "0.25");
      if (selected.has(i)) mark.setAttribute("stroke", "#222");
    }
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `${res.ids[i]}: (${fmt(res.coords[i][0])}, ${fmt(res.coords[i][1])}) ${overlay.feature}=${fmt(overlay.values[i])}`;
    mark.appendChild(title);
    svg.appendChild(mark);
  }

  attachPointerHandlers(svg, projected, options.callbacks ?? {});
  return { legend, projected };
}

function attachPointerHandlers(
  svg: SVGSVGElement,
  projected: Projected[],
  callbacks: ScatterCallbacks,
) {
  let trail: Projected[] = [];
  let dragging = false;

  const toLocal = (event: PointerEvent): Projected => {
    const rect = svg.getBoundingClientRect();
    const scaleX = rect.width ? WIDTH / rect.width : 1;
    const scaleY = rect.height ? HEIGHT / rect.height : 1;
    return { x: (event.clientX - rect.left) * scaleX, y: (event.clientY - rect.top) * scaleY };
  };

  svg.addEventListener("pointerdown", (event) => {
    dragging = true;
    trail = [toLocal(event as PointerEvent)];
  });
  svg.addEventListener("pointermove", (event) => {
    if (dragging) trail.push(toLocal(event as PointerEvent));
  });
  svg.addEventListener("pointerup", () => {
    if (!dragging) return;
    dragging = false;
    const start = trail[0];
    const end = trail[trail.length - 1];
    const moved = Math.hypot(end.x - start.x, end.y - start.y);
    if (trail.length < 3 || moved < 6) {
      const index = nearestIndex(end.x, end.y, projected);
      if (index >= 0) callbacks.onPick?.(index);
    } else {
      const enclosed = projected
        .map((p, i) => (pointInPolygon(p.x, p.y, trail) ? i : -1))
        .filter((i) => i >= 0);
      if (enclosed.length > 0) callbacks.onLasso?.(enclosed);
    }
    trail = [];
  });
}

/** Lasso → cluster: the majority cluster among enclosed samples, ties to the
 * lowest cluster id. */
export function majorityCluster(indices: number[], assignments: number[]): number {
  const counts = new Map<number, number>();
  for (const i of indices) {
    counts.set(assignments[i], (counts.get(assignments[i]) ?? 0) + 1);
  }
  let best = -1;
  let bestCount = -1;
  for (const [cluster, count] of [...counts.entries()].sort((a, b) => a[0] - b[0])) {
    if (count > bestCount) {
      best = cluster;
      bestCount = count;
    }
  }
  return best;
}
