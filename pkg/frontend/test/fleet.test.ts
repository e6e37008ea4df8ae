import { readFileSync } from "node:fs";

import { describe, expect, it } from "vitest";

import { flaggedBuckets, fleetBars, fleetQuery } from "../src/fleet.js";
import type { FleetResponse } from "../src/types.js";

const fleet = JSON.parse(
  readFileSync(new URL("./fixtures/fleet.json", import.meta.url), "utf8"),
) as FleetResponse;

describe("fleet bars", () => {
  it("one bar per bucket, heights proportional to count", () => {
    const bars = fleetBars(fleet);
    expect(bars).toHaveLength(fleet.buckets.length);
    const max = Math.max(...bars.map((b) => b.count));
    for (const bar of bars) expect(bar.height).toBeCloseTo(bar.count / Math.max(max, 1));
  });

  it("no anomalies → flat zero line", () => {
    const empty: FleetResponse = {
      buckets: fleet.buckets.map((b) => ({ ...b, count: 0, flagged: false })),
    };
    expect(fleetBars(empty).every((b) => b.height === 0)).toBe(true);
    expect(flaggedBuckets(empty)).toEqual([]);
  });

  it("flagged buckets are highlighted exactly as the service marked them", () => {
    const bars = fleetBars(fleet);
    const flagged = fleet.buckets.filter((b) => b.flagged).map((b) => b.bucket_start_ns);
    expect(bars.filter((b) => b.flagged).map((b) => b.tsNs)).toEqual(flagged);
  });

  it("query carries operator for side-by-side comparison", () => {
    expect(fleetQuery("RTT", 0, 5, "5min", "TeliaSE")).toEqual({
      target: "RTT",
      from: "0",
      to: "5",
      bucket: "5min",
      operator: "TeliaSE",
    });
    expect(fleetQuery("RTT", 0, 5, "5min")).not.toHaveProperty("operator");
  });
});
