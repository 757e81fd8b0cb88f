import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { isRedDominant } from "../src/color.js";
import {
  majorityCluster,
  overlayColors,
  pointInPolygon,
  renderScatter,
} from "../src/scatter.js";
import { decodeState, encodeState } from "../src/state.js";
import { fixture, fixtureFetch, fixtureText, makeApp, SESSION } from "./helpers.js";

afterEach(() => vi.unstubAllGlobals());

describe("scatter overlays", () => {
  it("score overlay paints the low-scoring cluster red", async () => {
    const { elements } = await makeApp(`#s=${SESSION}`);
    const clusters = fixture("clusters");
    const flagged: number = clusters.flagged[0];
    const marks = [...elements.scatter.querySelectorAll<SVGCircleElement>(".mark")];
    expect(marks.length).toBe(fixture("res").ids.length);
    for (const mark of marks) {
      const index = Number(mark.dataset.index);
      const inFlagged = clusters.clusters.assignments[index] === flagged;
      expect(isRedDominant(mark.getAttribute("fill") as string), `mark ${index}`).toBe(
        inFlagged,
      );
    }
  });

  it("categorical overlay yields one legend entry per value", async () => {
    const { app, elements } = await makeApp(`#s=${SESSION}`);
    await app.setOverlay("grades");
    const overlay = fixture("overlay_grades");
    const distinct = new Set(overlay.values.filter((v: unknown) => typeof v === "string"));
    const entries = elements.legend.querySelectorAll(".legend-entry");
    expect(entries.length).toBe(distinct.size);
    const labels = [...entries].map(
      (e) => e.querySelector(".legend-label")?.textContent,
    );
    expect(new Set(labels)).toEqual(distinct);
  });

  it("empty feature selection falls back to the score overlay", async () => {
    const { app } = await makeApp(`#s=${SESSION}`);
    await app.setOverlay("");
    expect(app.state.overlay).toBe("score");
    expect(app.overlay?.kind).toBe("score");
  });

  it("training series renders in purple when present", () => {
    const res = {
      ...fixture("res"),
      training: { ids: ["t0", "t1"], coords: [[0, 0], [1, 1]] },
    };
    const overlay = fixture("overlay_score");
    document.body.innerHTML = `<svg id="s" xmlns="http://www.w3.org/2000/svg"></svg>`;
    const svg = document.querySelector("#s") as unknown as SVGSVGElement;
    renderScatter(svg, res, overlay);
    const training = svg.querySelectorAll(".training");
    expect(training.length).toBe(2);
    expect(training[0].getAttribute("fill")).toBe("#800080");
  });
});

describe("lasso and selection geometry", () => {
  it("point-in-polygon matches a simple square", () => {
    const square = [
      { x: 0, y: 0 },
      { x: 10, y: 0 },
      { x: 10, y: 10 },
      { x: 0, y: 10 },
    ];
    expect(pointInPolygon(5, 5, square)).toBe(true);
    expect(pointInPolygon(15, 5, square)).toBe(false);
  });

  it("majority cluster breaks ties toward the lowest id", () => {
    expect(majorityCluster([0, 1, 2, 3], [1, 1, 2, 2])).toBe(1);
    expect(majorityCluster([0, 1, 2], [2, 2, 0])).toBe(2);
  });
});

describe("cluster inspector", () => {
  it("selecting the flagged cluster lists the planted features first", async () => {
    const { app, elements } = await makeApp(`#s=${SESSION}`);
    const flagged = fixture("clusters").flagged[0];
    await app.selectCluster(flagged);
    const features = [
      ...elements.inspector.querySelectorAll(".attr-feature"),
    ].map((e) => e.textContent);
    expect(new Set(features.slice(0, 2))).toEqual(
      new Set(["grades", "row_h/image_h"]),
    );
  });

  it("matching posts the draft and shows the API's matched count", async () => {
    const { app, elements } = await makeApp(`#s=${SESSION}`);
    await app.selectCluster(fixture("clusters").flagged[0]);
    app.draftSize = 2;
    app.catalogText = fixtureText("catalog.csv");
    await app.match();
    const expected = fixture("booster").matched_ids.length;
    expect(app.matchedCount).toBe(expected);
    expect(
      elements.inspector.querySelector("#match-count")?.textContent,
    ).toBe(`${expected} matched`);
  });

  it("deselecting all predicates disables the match action", async () => {
    const { app, elements } = await makeApp(`#s=${SESSION}`);
    await app.selectCluster(fixture("clusters").flagged[0]);
    expect(app.draftSize).toBe(0);
    const button = elements.inspector.querySelector(
      "#match-button",
    ) as HTMLButtonElement;
    expect(button.disabled).toBe(true);
  });

  it("draft checkboxes enforce the top-n prefix", async () => {
    const { app, elements } = await makeApp(`#s=${SESSION}`);
    await app.selectCluster(fixture("clusters").flagged[0]);
    const boxes = elements.inspector.querySelectorAll<HTMLInputElement>(
      "input[type=checkbox]",
    );
    boxes[1].checked = true;
    boxes[1].dispatchEvent(new Event("change"));
    expect(app.draftSize).toBe(2);
    const refreshed = elements.inspector.querySelectorAll<HTMLInputElement>(
      "input[type=checkbox]",
    );
    expect(refreshed[0].checked && refreshed[1].checked).toBe(true);
  });
});

describe("deep links", () => {
  it("state round-trips through the URL hash", () => {
    const state = { session: SESSION, overlay: "grades", cluster: 3 };
    expect(decodeState(encodeState(state))).toEqual(state);
  });

  it("reloading a deep link restores session, overlay, and selection", async () => {
    const flagged = fixture("clusters").flagged[0];
    const { app, elements } = await makeApp(
      `#s=${SESSION}&o=grades&c=${flagged}`,
    );
    expect(app.state).toEqual({ session: SESSION, overlay: "grades", cluster: flagged });
    expect(app.overlay?.feature).toBe("grades");
    expect(elements.inspector.textContent).toContain(`Cluster ${flagged}`);
    expect(elements.sessionInput.value).toBe(SESSION);
  });

  it("hash changes drive the app", async () => {
    const { app, win } = await makeApp(`#s=${SESSION}`);
    win.location.hash = `#s=${SESSION}&o=grades`;
    win.fire("hashchange");
    await vi.waitFor(() => expect(app.state.overlay).toBe("grades"));
  });
});

describe("API client", () => {
  it("deduplicates concurrent in-flight requests per endpoint", async () => {
    const { impl, calls } = fixtureFetch();
    vi.stubGlobal("fetch", impl);
    const client = new ApiClient("");
    const url = `/sessions/${SESSION}/res`;
    const [a, b, c] = await Promise.all([
      client.get(url),
      client.get(url),
      client.get(url),
    ]);
    expect(calls.get(url)).toBe(1);
    expect(a).toEqual(b);
    expect(b).toEqual(c);
  });

  it("surfaces 422 field messages inline", async () => {
    const { app, elements } = await makeApp(`#s=${SESSION}`);
    await app.setOverlay("absent");
    expect(elements.status.textContent).toContain("absent");
    expect(elements.status.textContent).toContain("422");
  });
});

describe("overlay color mapping", () => {
  it("uses a fixed [0,1] domain for scores", () => {
    const { colors } = overlayColors({
      feature: "score",
      kind: "score",
      ids: ["a", "b"],
      values: [0.2, 0.9],
    });
    expect(isRedDominant(colors[0])).toBe(true);
    expect(isRedDominant(colors[1])).toBe(false);
  });

  it("missing values render gray", () => {
    const { colors } = overlayColors({
      feature: "f",
      kind: "numeric",
      ids: ["a", "b"],
      values: [null, 1.0],
    });
    expect(colors[0]).toBe("#c8c8c8");
  });
});
