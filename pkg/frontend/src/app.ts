import { ApiClient, ApiError } from "./api.js";
import { clearError, renderError, renderInspector, renderLegend, renderReport } from "./panels.js";
import { majorityCluster, renderScatter } from "./scatter.js";
import { decodeState, DEFAULT_OVERLAY, encodeState, ViewState } from "./state.js";
import type {
  AttributionResponse,
  BoosterResponse,
  ClustersResponse,
  OverlayResponse,
  ReportResponse,
  ResResponse,
} from "./types.js";

export interface AppElements {
  sessionInput: HTMLInputElement;
  overlaySelect: HTMLSelectElement;
  scatter: SVGSVGElement;
  legend: HTMLElement;
  report: HTMLElement;
  inspector: HTMLElement;
  status: HTMLElement;
}

/** The explorer: pure API client plus DOM rendering, no numerics of its own. */
export class App {
  state: ViewState = { session: null, overlay: DEFAULT_OVERLAY, cluster: null };
  res: ResResponse | null = null;
  clusters: ClustersResponse | null = null;
  overlay: OverlayResponse | null = null;
  attribution: AttributionResponse | null = null;
  draftSize = 0;
  matchedCount: number | null = null;
  catalogText: string | null = null;

  constructor(
    private elements: AppElements,
    public api: ApiClient,
    private window_: Pick<Window, "location" | "addEventListener"> = window,
  ) {}

  async init(): Promise<void> {
    this.window_.addEventListener("hashchange", () => {
      void this.applyState(decodeState(this.window_.location.hash));
    });
    this.elements.overlaySelect.addEventListener("change", () => {
      void this.setOverlay(this.elements.overlaySelect.value || DEFAULT_OVERLAY);
    });
    this.elements.sessionInput.addEventListener("change", () => {
      void this.loadSession(this.elements.sessionInput.value.trim());
    });
    const initial = decodeState(this.window_.location.hash);
    if (initial.session) await this.applyState(initial);
  }

  private syncHash(): void {
    const encoded = encodeState(this.state);
    if (this.window_.location.hash !== encoded) {
      this.window_.location.hash = encoded;
    }
  }

  async applyState(next: ViewState): Promise<void> {
    if (!next.session) return;
    if (next.session !== this.state.session) {
      await this.loadSession(next.session, next);
      return;
    }
    if (next.overlay !== this.state.overlay) await this.setOverlay(next.overlay);
    if (next.cluster !== this.state.cluster) await this.selectCluster(next.cluster);
  }

  async loadSession(sessionId: string, target?: ViewState): Promise<void> {
    if (!sessionId) return;
    clearError(this.elements.status);
    try {
      const [res, clusters] = await Promise.all([
        this.api.get<ResResponse>(`/sessions/${sessionId}/res`),
        this.api.get<ClustersResponse>(`/sessions/${sessionId}/clusters`),
      ]);
      const report = await this.api.get<ReportResponse>(`/sessions/${sessionId}/report`);
      this.res = res;
      this.clusters = clusters;
      this.state = {
        session: sessionId,
        overlay: target?.overlay ?? DEFAULT_OVERLAY,
        cluster: target?.cluster ?? null,
      };
      this.elements.sessionInput.value = sessionId;
      this.populateOverlayChoices(res);
      renderReport(this.elements.report, report);
      await this.refreshOverlay();
      if (this.state.cluster !== null) await this.refreshInspector();
      this.syncHash();
    } catch (error) {
      this.surface(error);
    }
  }

  private populateOverlayChoices(res: ResResponse): void {
    const select = this.elements.overlaySelect;
    select.innerHTML = "";
    for (const name of ["score", ...res.features]) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      select.appendChild(option);
    }
    select.value = this.state.overlay;
  }

  async setOverlay(feature: string): Promise<void> {
    this.state = { ...this.state, overlay: feature || DEFAULT_OVERLAY };
    await this.refreshOverlay();
    this.syncHash();
  }

  private async refreshOverlay(): Promise<void> {
    if (!this.state.session || !this.res) return;
    clearError(this.elements.status);
    try {
      this.overlay = await this.api.get<OverlayResponse>(
        `/sessions/${this.state.session}/overlay?feature=${encodeURIComponent(this.state.overlay)}`,
      );
    } catch (error) {
      this.surface(error);
      return;
    }
    this.renderScatterNow();
  }

  renderScatterNow(): void {
    if (!this.res || !this.overlay) return;
    const members =
      this.state.cluster !== null && this.clusters
        ? new Set(
            this.clusters.clusters.assignments
              .map((c, i) => (c === this.state.cluster ? i : -1))
              .filter((i) => i >= 0),
          )
        : undefined;
    const handle = renderScatter(this.elements.scatter, this.res, this.overlay, {
      selectedMembers: members,
      callbacks: {
        onPick: (index) => {
          const assignment = this.clusters?.clusters.assignments[index];
          if (assignment !== undefined) void this.selectCluster(assignment);
        },
        onLasso: (indices) => {
          if (!this.clusters) return;
          void this.selectCluster(
            majorityCluster(indices, this.clusters.clusters.assignments),
          );
        },
      },
    });
    renderLegend(this.elements.legend, handle.legend);
  }

  async selectCluster(cluster: number | null): Promise<void> {
    this.state = { ...this.state, cluster };
    this.draftSize = 0;
    this.matchedCount = null;
    if (cluster !== null) await this.refreshInspector();
    else this.elements.inspector.innerHTML = "";
    this.renderScatterNow();
    this.syncHash();
  }

  private async refreshInspector(): Promise<void> {
    if (!this.state.session || this.state.cluster === null) return;
    try {
      this.attribution = await this.api.get<AttributionResponse>(
        `/sessions/${this.state.session}/clusters/${this.state.cluster}/attribution`,
      );
    } catch (error) {
      this.surface(error);
      return;
    }
    this.renderInspectorNow();
  }

  renderInspectorNow(): void {
    if (!this.attribution) return;
    renderInspector(
      this.elements.inspector,
      this.attribution,
      this.draftSize,
      this.matchedCount,
      {
        onDraftSize: (size) => {
          this.draftSize = size;
          this.matchedCount = null;
          this.renderInspectorNow();
        },
        onMatch: () => void this.match(),
      },
    );
    const fileInput = this.elements.inspector.querySelector<HTMLInputElement>("#catalog-file");
    fileInput?.addEventListener("change", () => {
      const file = fileInput.files?.[0];
      if (!file) return;
      // the file's text is shipped verbatim to the API; parsing stays
      // server-side
      void file.text().then((text) => {
        this.catalogText = text;
      });
    });
  }

  /** POST the draft (top-n prefix) with the chosen catalog; show the count. */
  async match(): Promise<void> {
    if (!this.state.session || this.state.cluster === null || this.draftSize === 0) return;
    clearError(this.elements.status);
    try {
      const spec = await this.api.post<BoosterResponse>(
        `/sessions/${this.state.session}/booster`,
        {
          cluster: this.state.cluster,
          top_n: this.draftSize,
          ...(this.catalogText !== null ? { catalog: this.catalogText } : {}),
        },
      );
      this.matchedCount = spec.matched_ids.length;
      this.renderInspectorNow();
    } catch (error) {
      this.surface(error);
    }
  }

  private surface(error: unknown): void {
    const message =
      error instanceof ApiError
        ? `${error.status}: ${error.message}`
        : String(error);
    renderError(this.elements.status, message);
  }
}

export function bindApp(document_: Document, api: ApiClient): App {
  const elements: AppElements = {
    sessionInput: document_.querySelector("#session-input") as HTMLInputElement,
    overlaySelect: document_.querySelector("#overlay-select") as HTMLSelectElement,
    scatter: document_.querySelector("#scatter") as unknown as SVGSVGElement,
    legend: document_.querySelector("#legend") as HTMLElement,
    report: document_.querySelector("#report") as HTMLElement,
    inspector: document_.querySelector("#inspector") as HTMLElement,
    status: document_.querySelector("#status") as HTMLElement,
  };
  return new App(elements, api);
}
