/** The single path numbers take into the DOM.
 *
 * Values are rendered as their canonical JSON serialization, byte-equal to
 * the API field they came from. The UI never rounds, truncates, or derives
 * displayed numbers.
 */
export function fmt(value: number | string | null | undefined): string {
  if (value === null || value === undefined) return "–";
  if (typeof value === "string") return value;
  return JSON.stringify(value);
}

/** Interval rendering keeps each bound byte-exact. */
export function fmtInterval(interval: [number, number]): string {
  return `[${fmt(interval[0])}, ${fmt(interval[1])}]`;
}
