import { readFileSync } from "node:fs";

import { describe, expect, it } from "vitest";

import { bboxParam, colorScale, exportSelection, geoQuery, legendRange, tracePoints } from "../src/geo.js";
import type { GeoResponse } from "../src/types.js";

const geo = JSON.parse(
  readFileSync(new URL("./fixtures/geo-box.json", import.meta.url), "utf8"),
) as GeoResponse;

const box = { latMin: 59.5, latMax: 59.7, lonMin: 9, lonMax: 12 };

describe("trace points", () => {
  it("keeps only instances with coordinates, carrying the KPI value", () => {
    const points = tracePoints(geo, "RTT");
    expect(points).toHaveLength(geo.instances.length);
    expect(points[0]).toMatchObject({ lat: 59.5, lon: 11.0, iface: "op0" });
    expect(points[0]!.value).toBeCloseTo(100.057, 3);
  });

  it("missing geo data yields an empty trace (empty-state contract)", () => {
    expect(tracePoints({ instances: [] }, "RTT")).toEqual([]);
  });
});

describe("legend", () => {
  it("reflects the KPI min/max of the visible points", () => {
    const points = tracePoints(geo, "RTT");
    const legend = legendRange(points)!;
    const values = points.map((p) => p.value!).filter((v) => v !== null);
    expect(legend.min).toBe(Math.min(...values));
    expect(legend.max).toBe(Math.max(...values));
  });

  it("scales values into [0, 1] with clamping", () => {
    const legend = { min: 100, max: 110 };
    expect(colorScale(legend, 105)).toBeCloseTo(0.5);
    expect(colorScale(legend, 90)).toBe(0);
    expect(colorScale(legend, 200)).toBe(1);
    expect(colorScale({ min: 5, max: 5 }, 5)).toBe(0.5);
  });
});

describe("geo query", () => {
  it("renders the bbox as lat_min,lat_max,lon_min,lon_max", () => {
    expect(bboxParam(box)).toBe("59.5,59.7,9,12");
    expect(geoQuery(box, "RTT", 0, 5)).toEqual({
      feature: "RTT",
      bbox: "59.5,59.7,9,12",
      from: "0",
      to: "5",
    });
  });
});

describe("export", () => {
  it("an empty box exports the header line only", () => {
    expect(exportSelection([], "RTT")).toBe("ts,node,iface,RTT,Latitude,Longitude,anomaly\n");
  });

  it("row count matches the selection", () => {
    const csv = exportSelection(geo.instances, "RTT");
    expect(csv.trimEnd().split("\n")).toHaveLength(geo.instances.length + 1);
  });
});
