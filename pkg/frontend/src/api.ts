/**
 * Thin client for the mbbminer service.
 *
 * Requests are keyed by panel: issuing a new request for a panel aborts
 * the one still in flight, so rapid parameter dragging can never paint
 * stale shading over newer data (latest-wins per panel).
 *
 * Every request that goes out is appended to `client.trace`, which is
 * what the golden-trace tests assert against — the UI must not invent
 * numbers, so everything it shows has to appear here first.
 */

import type {
  ApiErrorBody,
  DetectRequest,
  DetectResponse,
  ExplainResponse,
  FleetResponse,
  GeoResponse,
  NodesResponse,
  SeriesResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface TraceEntry {
  method: "GET" | "POST";
  path: string;
  body?: unknown;
}

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(body: ApiErrorBody) {
    super(body.message);
    this.status = body.status;
    this.code = body.code;
  }
}

/** Thrown (as a rejection) when a newer request superseded this one. */
export class Superseded extends Error {
  constructor(panel: string) {
    super(`request for panel "${panel}" superseded`);
  }
}

export class ApiClient {
  readonly trace: TraceEntry[] = [];
  private readonly base: string;
  private readonly fetchImpl: FetchLike;
  private readonly inflight = new Map<string, AbortController>();

  constructor(baseUrl = "", fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  getNodes(): Promise<NodesResponse> {
    return this.request("nodes", "GET", "/api/nodes");
  }

  getSeries(panel: string, params: Record<string, string>): Promise<SeriesResponse> {
    return this.request(panel, "GET", "/api/series?" + new URLSearchParams(params));
  }

  detect(panel: string, body: DetectRequest): Promise<DetectResponse> {
    return this.request(panel, "POST", "/api/detect", body);
  }

  explain(panel: string, body: unknown): Promise<ExplainResponse> {
    return this.request(panel, "POST", "/api/explain", body);
  }

  geo(panel: string, params: Record<string, string>): Promise<GeoResponse> {
    return this.request(panel, "GET", "/api/geo?" + new URLSearchParams(params));
  }

  fleet(panel: string, params: Record<string, string>): Promise<FleetResponse> {
    return this.request(panel, "GET", "/api/fleet?" + new URLSearchParams(params));
  }

  private async request<T>(
    panel: string,
    method: "GET" | "POST",
    path: string,
    body?: unknown,
  ): Promise<T> {
    this.inflight.get(panel)?.abort();
    const controller = new AbortController();
    this.inflight.set(panel, controller);

    this.trace.push(body === undefined ? { method, path } : { method, path, body });

    const init: RequestInit = { method, signal: controller.signal };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }

    let resp: Response;
    try {
      resp = await this.fetchImpl(this.base + path, init);
    } catch (err) {
      if (controller.signal.aborted) throw new Superseded(panel);
      throw err;
    }
    if (controller.signal.aborted) throw new Superseded(panel);
    if (this.inflight.get(panel) === controller) this.inflight.delete(panel);

    if (!resp.ok) {
      let parsed: ApiErrorBody;
      try {
        parsed = (await resp.json()) as ApiErrorBody;
      } catch {
        parsed = { status: resp.status, code: "http_error", message: resp.statusText };
      }
      throw new ApiError(parsed);
    }
    return (await resp.json()) as T;
  }
}
