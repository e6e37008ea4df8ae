import { describe, expect, it } from "vitest";

import {
  decodeViewState,
  defaultViewState,
  encodeViewState,
  validateParams,
  type ViewState,
} from "../src/state.js";

describe("view state URL round-trip", () => {
  it("default state encodes to an empty query and decodes back", () => {
    const state = defaultViewState();
    expect(encodeViewState(state)).toBe("");
    expect(decodeViewState("")).toEqual(state);
  });

  it("a fully populated state survives the round trip", () => {
    const state: ViewState = {
      node: "n1",
      iface: "op0",
      feature: "RTT",
      fromNs: 0,
      toNs: 1200_000_000_000,
      colorBy: "CID",
      detector: "rolling",
      params: { window: 600, k_sigma: 8, min_cluster: 5, max_gap: 60 },
      selectedRegion: 600_000_000_000,
      mapBox: { latMin: 59.5, latMax: 59.7, lonMin: 9, lonMax: 12 },
    };
    expect(decodeViewState(encodeViewState(state))).toEqual(state);
  });

  it("baseline detector and its parameters round-trip", () => {
    const state = defaultViewState();
    state.detector = "baseline";
    state.params = { q_low: 0.05, q_high: 0.95, n_trees: 100, min_cluster: 20, max_gap: 60 };
    const decoded = decodeViewState(encodeViewState(state));
    expect(decoded.detector).toBe("baseline");
    expect(decoded.params).toEqual(state.params);
  });

  it("non-default params appear in the URL, defaults do not", () => {
    const state = defaultViewState();
    state.params.k_sigma = 8;
    const query = encodeViewState(state);
    expect(query).toContain("p.k_sigma=8");
    expect(query).not.toContain("min_cluster");
  });

  it("garbage box parameters are dropped, not crashed on", () => {
    const state = decodeViewState("box=a,b,c,d");
    expect(state.mapBox).toBeNull();
  });
});

describe("client-side parameter validation", () => {
  it("accepts the defaults", () => {
    expect(validateParams("rolling", { window: 300, k_sigma: 3, min_cluster: 5, max_gap: 60 })).toEqual([]);
  });

  it("rejects out-of-range rolling parameters before any request", () => {
    expect(validateParams("rolling", { window: 0, k_sigma: 3, min_cluster: 5, max_gap: 60 })).not.toEqual([]);
    expect(validateParams("rolling", { window: 300, k_sigma: -1, min_cluster: 5, max_gap: 60 })).not.toEqual([]);
    expect(validateParams("rolling", { window: 300, k_sigma: 3, min_cluster: 0, max_gap: 60 })).not.toEqual([]);
    expect(validateParams("rolling", { window: 300, k_sigma: 3, min_cluster: 5, max_gap: NaN })).not.toEqual([]);
  });

  it("rejects inverted baseline quantiles", () => {
    expect(validateParams("baseline", { q_low: 0.9, q_high: 0.1, n_trees: 50, min_cluster: 5, max_gap: 60 })).not.toEqual([]);
    expect(validateParams("baseline", { q_low: 0.1, q_high: 0.9, n_trees: 50, min_cluster: 5, max_gap: 60 })).toEqual([]);
  });
});
