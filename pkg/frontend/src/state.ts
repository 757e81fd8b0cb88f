/** View state, fully URL-encodable: a deep link restores session, overlay,
 * and cluster selection on reload. */

export interface ViewState {
  session: string | null;
  overlay: string; // "score" or a feature name
  cluster: number | null;
}

export const DEFAULT_OVERLAY = "score";

export function encodeState(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.session) params.set("s", state.session);
  if (state.overlay && state.overlay !== DEFAULT_OVERLAY) params.set("o", state.overlay);
  if (state.cluster !== null) params.set("c", String(state.cluster));
  const encoded = params.toString();
  return encoded ? `#${encoded}` : "";
}

export function decodeState(hash: string): ViewState {
  const params = new URLSearchParams(hash.replace(/^#/, ""));
  const overlay = params.get("o");
  const cluster = params.get("c");
  return {
    session: params.get("s"),
    // an empty feature selection falls back to the score overlay
    overlay: overlay === null || overlay === "" ? DEFAULT_OVERLAY : overlay,
    cluster: cluster === null || !/^\d+$/.test(cluster) ? null : Number(cluster),
  };
}
