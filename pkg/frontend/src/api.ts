import type { FieldError } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string | FieldError[],
  ) {
    super(
      typeof detail === "string"
        ? detail
        : detail.map((d) => `${d.loc.join(".")}: ${d.msg}`).join("; "),
    );
  }
}

/** Thin fetch client; concurrent in-flight GETs are deduplicated per URL. */
export class ApiClient {
  private inflight = new Map<string, Promise<unknown>>();

  constructor(private base: string = "") {}

  async get<T>(path: string): Promise<T> {
    const pending = this.inflight.get(path);
    if (pending) return pending as Promise<T>;
    const request = this.send<T>("GET", path).finally(() => {
      this.inflight.delete(path);
    });
    this.inflight.set(path, request);
    return request;
  }

  async post<T>(path: string, body: unknown): Promise<T> {
    return this.send<T>("POST", path, body);
  }

  private async send<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => null);
    if (!response.ok) {
      const detail =
        payload && typeof payload === "object" && "detail" in payload
          ? (payload as { detail: string | FieldError[] }).detail
          : response.statusText;
      throw new ApiError(response.status, detail);
    }
    return payload as T;
  }
}
