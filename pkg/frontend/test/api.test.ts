import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, Superseded, type FetchLike } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("ApiClient", () => {
  it("parses a successful response and records the request in the trace", async () => {
    const client = new ApiClient("", async () => jsonResponse({ buckets: [] }));
    const resp = await client.fleet("fleet", { target: "RTT", from: "0", to: "1", bucket: "5min" });
    expect(resp.buckets).toEqual([]);
    expect(client.trace).toEqual([
      { method: "GET", path: "/api/fleet?target=RTT&from=0&to=1&bucket=5min" },
    ]);
  });

  it("turns service error bodies into ApiError", async () => {
    const client = new ApiClient("", async () =>
      jsonResponse({ status: 404, code: "unknown_key", message: "no such node" }, 404),
    );
    await expect(client.getNodes()).rejects.toMatchObject({
      status: 404,
      code: "unknown_key",
      message: "no such node",
    });
    await expect(client.getNodes()).rejects.toBeInstanceOf(ApiError);
  });

  it("latest-wins: a newer request for the same panel supersedes the older one", async () => {
    const resolvers: ((r: Response) => void)[] = [];
    const fetchImpl: FetchLike = (_url, init) =>
      new Promise((resolve, reject) => {
        init?.signal?.addEventListener("abort", () => reject(new Error("aborted")));
        resolvers.push(resolve);
      });
    const client = new ApiClient("", fetchImpl);

    const first = client.detect("detect", {
      method: "rolling",
      target: "RTT",
      scope: { node: "n", iface: "i", from: 0, to: 1 },
      params: { k_sigma: 3 },
    });
    const second = client.detect("detect", {
      method: "rolling",
      target: "RTT",
      scope: { node: "n", iface: "i", from: 0, to: 1 },
      params: { k_sigma: 8 },
    });

    await expect(first).rejects.toBeInstanceOf(Superseded);
    resolvers[1]!(jsonResponse({ method: "rolling", regions: [] }));
    await expect(second).resolves.toEqual({ method: "rolling", regions: [] });
  });

  it("does not cancel across panels", async () => {
    let aborted = 0;
    const fetchImpl: FetchLike = async (_url, init) => {
      init?.signal?.addEventListener("abort", () => aborted++);
      return jsonResponse({ instances: [] });
    };
    const client = new ApiClient("", fetchImpl);
    await client.geo("geo", { feature: "RTT", bbox: "0,1,0,1", from: "0", to: "1" });
    await client.fleet("fleet", { target: "RTT", from: "0", to: "1", bucket: "5min" });
    expect(aborted).toBe(0);
  });

  it("a superseded response is never delivered, even if fetch ignores the abort", async () => {
    // a fetch that resolves anyway, like a response already in flight
    let call = 0;
    const client = new ApiClient("", async () => jsonResponse({ value: call++ }));
    const first = client.getSeries("s", { a: "1" });
    const second = client.getSeries("s", { a: "2" });
    const settled = await Promise.allSettled([first, second]);
    expect(settled[0]!.status).toBe("rejected");
    expect(settled[1]!.status).toBe("fulfilled");
  });
});
