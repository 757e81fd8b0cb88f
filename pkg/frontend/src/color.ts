/** Overlay color conventions: categorical features get distinct hues,
 * score/numeric overlays run on a continuous red → green ramp (low → high);
 * training projections are always purple. */

export const CATEGORICAL_PALETTE = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

export const TRAINING_COLOR = "#800080";
export const MISSING_COLOR = "#c8c8c8";

const LOW = [215, 48, 39]; // red
const MID = [255, 255, 191]; // pale yellow
const HIGH = [26, 152, 80]; // green

function mix(a: number[], b: number[], t: number): string {
  const channel = (i: number) => Math.round(a[i] + (b[i] - a[i]) * t);
  return `rgb(${channel(0)}, ${channel(1)}, ${channel(2)})`;
}

/** t in [0, 1]; 0 = low (red), 1 = high (green). */
export function rampRedGreen(t: number): string {
  const clamped = Math.min(1, Math.max(0, t));
  return clamped < 0.5 ? mix(LOW, MID, clamped * 2) : mix(MID, HIGH, clamped * 2 - 1);
}

export function categoricalColor(index: number): string {
  return CATEGORICAL_PALETTE[index % CATEGORICAL_PALETTE.length];
}

/** Red channel dominates below the ramp midpoint (used by tests). */
export function isRedDominant(color: string): boolean {
  const match = color.match(/rgb\((\d+), (\d+), (\d+)\)/);
  if (!match) return false;
  return Number(match[1]) > Number(match[3]) && Number(match[1]) > Number(match[2]) - 40;
}
