/**
 * Acceptance: the two end-to-end criteria for the explorer.
 *
 * 1. Parameter-feedback loop — moving k_sigma from 3 to 8 on the step
 *    fixture removes the shading, and the requests/responses the UI
 *    issues match the frozen service trace byte-for-byte (the trace is
 *    recorded against the real service; see scripts/make_fixtures.py).
 * 2. Geo box-select export — the CSV the UI exports for the boxed
 *    selection is byte-identical to what the backend itself writes for
 *    the same selection (the frozen oracle file).
 */

import { readFileSync } from "node:fs";

import { describe, expect, it } from "vitest";

import { ApiClient, type FetchLike } from "../src/api.js";
import { exportSelection } from "../src/geo.js";
import { buildDetectRequest } from "../src/detect.js";
import { shadeRegions } from "../src/shading.js";
import { defaultViewState } from "../src/state.js";
import type { DetectRequest, DetectResponse, GeoResponse } from "../src/types.js";

const SEC = 1_000_000_000;

function fixture(name: string): string {
  return readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf8");
}

interface TraceEntry {
  request: { method: string; path: string; body: DetectRequest };
  response: DetectResponse;
}

const goldenTrace = JSON.parse(fixture("detect-trace.json")) as TraceEntry[];

/** Serve responses from the golden trace, insisting on exact requests. */
function traceServer(trace: TraceEntry[]): FetchLike {
  return async (url, init) => {
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    for (const entry of trace) {
      if (entry.request.path === path && JSON.stringify(entry.request.body) === JSON.stringify(body)) {
        return new Response(JSON.stringify(entry.response), { status: 200 });
      }
    }
    throw new Error(`no golden response for ${path} ${JSON.stringify(body)}`);
  };
}

describe("parameter-feedback loop (golden network trace)", () => {
  function stepView(kSigma: number) {
    const view = defaultViewState();
    view.node = "n1";
    view.iface = "op0";
    view.feature = "RTT";
    view.fromNs = 0;
    view.toNs = 1200 * SEC;
    view.params.k_sigma = kSigma;
    return view;
  }

  it("k_sigma=3 issues the oracle request and shades the step region", async () => {
    const client = new ApiClient("", traceServer(goldenTrace));
    const request = buildDetectRequest(stepView(3));
    expect(request).toEqual(goldenTrace[0]!.request.body);

    const response = await client.detect("detect", request);
    expect(response).toEqual(goldenTrace[0]!.response);
    expect(client.trace).toEqual([{ method: "POST", path: "/api/detect", body: request }]);

    const scale = { fromNs: 0, toNs: 1200 * SEC, widthPx: 1200 };
    const shading = shadeRegions(response.regions, scale);
    expect(shading.length).toBeGreaterThan(0);
    expect(shading[0]!.startNs).toBe(600 * SEC);
  });

  it("changing k_sigma to 8 removes the shading", async () => {
    const client = new ApiClient("", traceServer(goldenTrace));
    const request = buildDetectRequest(stepView(8));
    expect(request).toEqual(goldenTrace[1]!.request.body);

    const response = await client.detect("detect", request);
    expect(response).toEqual(goldenTrace[1]!.response);

    const scale = { fromNs: 0, toNs: 1200 * SEC, widthPx: 1200 };
    expect(shadeRegions(response.regions, scale)).toEqual([]);
  });

  it("the full 3→8 interaction matches the golden trace request-for-request", async () => {
    const client = new ApiClient("", traceServer(goldenTrace));
    const responses = [];
    for (const kSigma of [3, 8]) {
      responses.push(await client.detect("detect", buildDetectRequest(stepView(kSigma))));
    }
    expect(client.trace).toEqual(
      goldenTrace.map((e) => ({ method: "POST", path: "/api/detect", body: e.request.body })),
    );
    expect(responses).toEqual(goldenTrace.map((e) => e.response));
  });
});

describe("geo box-select export (oracle CSV)", () => {
  it("exported CSV is byte-identical to the backend's own export", () => {
    const geo = JSON.parse(fixture("geo-box.json")) as GeoResponse;
    const oracle = fixture("geo-box-export.csv");
    expect(exportSelection(geo.instances, "RTT")).toBe(oracle);
  });
});
