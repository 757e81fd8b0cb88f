import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { App, AppElements } from "../src/app.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function fixture<T = any>(name: string): T {
  return JSON.parse(readFileSync(join(FIXTURES, `${name}.json`), "utf-8"));
}

export function fixtureText(name: string): string {
  return readFileSync(join(FIXTURES, name), "utf-8");
}

export const SESSION = "fixture-session";

/** fetch backed by the recorded API responses; counts calls per URL. */
export function fixtureFetch() {
  const calls = new Map<string, number>();
  const routes: [RegExp, string | ((m: RegExpMatchArray) => unknown)][] = [
    [new RegExp(`/sessions/${SESSION}/res$`), "res"],
    [new RegExp(`/sessions/${SESSION}/clusters$`), "clusters"],
    [new RegExp(`/sessions/${SESSION}/report$`), "report"],
    [new RegExp(`/sessions/${SESSION}/overlay\\?feature=score$`), "overlay_score"],
    [new RegExp(`/sessions/${SESSION}/overlay\\?feature=grades$`), "overlay_grades"],
    [
      new RegExp(`/sessions/${SESSION}/overlay\\?feature=row_h%2Fimage_h$`),
      "overlay_zoom",
    ],
    [new RegExp(`/sessions/${SESSION}/clusters/\\d+/attribution$`), "attribution"],
    [new RegExp(`/sessions/${SESSION}/booster$`), "booster"],
  ];
  const impl = vi.fn(async (url: string, _init?: unknown) => {
    calls.set(url, (calls.get(url) ?? 0) + 1);
    await Promise.resolve(); // force genuinely async resolution
    for (const [pattern, payload] of routes) {
      const match = url.match(pattern);
      if (match) {
        const body = typeof payload === "string" ? fixture(payload) : payload(match);
        return response(200, body);
      }
    }
    if (url.includes("feature=")) {
      return response(422, fixture("error_422"));
    }
    return response(404, { detail: `unknown path ${url}` });
  });
  return { impl, calls };
}

function response(status: number, body: unknown) {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: async () => body,
  } as Response;
}

export function mountDom(): AppElements {
  document.body.innerHTML = `
    <input id="session-input" />
    <select id="overlay-select"></select>
    <div id="status"></div>
    <svg id="scatter" xmlns="http://www.w3.org/2000/svg"></svg>
    <div id="legend"></div>
    <div id="report"></div>
    <div id="inspector"></div>
  `;
  return {
    sessionInput: document.querySelector("#session-input") as HTMLInputElement,
    overlaySelect: document.querySelector("#overlay-select") as HTMLSelectElement,
    scatter: document.querySelector("#scatter") as unknown as SVGSVGElement,
    legend: document.querySelector("#legend") as HTMLElement,
    report: document.querySelector("#report") as HTMLElement,
    inspector: document.querySelector("#inspector") as HTMLElement,
    status: document.querySelector("#status") as HTMLElement,
  };
}

export interface TestWindow {
  location: { hash: string };
  addEventListener: (type: string, handler: () => void) => void;
  fire: (type: string) => void;
}

export function makeWindow(initialHash = ""): TestWindow {
  const handlers = new Map<string, (() => void)[]>();
  return {
    location: { hash: initialHash },
    addEventListener(type, handler) {
      handlers.set(type, [...(handlers.get(type) ?? []), handler]);
    },
    fire(type) {
      for (const handler of handlers.get(type) ?? []) handler();
    },
  };
}

export async function makeApp(initialHash = "") {
  const elements = mountDom();
  const { impl, calls } = fixtureFetch();
  vi.stubGlobal("fetch", impl);
  const win = makeWindow(initialHash);
  const app = new App(elements, new ApiClient(""), win as unknown as Window);
  await app.init();
  return { app, elements, calls, win, fetchImpl: impl };
}

/** Resolve "a.b.0.c" inside a fixture object. */
export function resolvePath(root: any, path: string): unknown {
  return path.split(".").reduce((node, key) => node[key], root);
}
