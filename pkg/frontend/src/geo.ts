/**
 * Map panel model: the measurement trace colored by KPI value, a
 * drawable selection box, and CSV export of the boxed selection.
 *
 * Tiles (when configured) come from a slippy-tile URL template; with
 * no template configured the trace renders on a blank canvas, so the
 * panel works fully offline.
 */

import type { MapBox } from "./state.js";
import type { GeoInstance, GeoResponse } from "./types.js";
import { instancesToCsv } from "./csv.js";

export interface TracePoint {
  lat: number;
  lon: number;
  tsNs: number;
  iface: string;
  /** KPI value, for color mapping; null renders gray */
  value: number | null;
}

export function tracePoints(geo: GeoResponse, kpi: string): TracePoint[] {
  const points: TracePoint[] = [];
  for (const inst of geo.instances) {
    const lat = inst.values["Latitude"];
    const lon = inst.values["Longitude"];
    if (typeof lat !== "number" || typeof lon !== "number") continue;
    const v = inst.values[kpi];
    points.push({
      lat,
      lon,
      tsNs: inst.ts_ns,
      iface: inst.iface,
      value: typeof v === "number" ? v : null,
    });
  }
  return points;
}

export interface Legend {
  min: number;
  max: number;
}

/** Color-scale legend bounds: KPI min/max over the visible points. */
export function legendRange(points: TracePoint[]): Legend | null {
  let min = Infinity;
  let max = -Infinity;
  for (const p of points) {
    if (p.value === null) continue;
    if (p.value < min) min = p.value;
    if (p.value > max) max = p.value;
  }
  return min <= max ? { min, max } : null;
}

/** Map a KPI value into [0, 1] for the color ramp. */
export function colorScale(legend: Legend, value: number): number {
  if (legend.max === legend.min) return 0.5;
  const t = (value - legend.min) / (legend.max - legend.min);
  return Math.min(1, Math.max(0, t));
}

/** bbox query parameter for /api/geo: lat_min,lat_max,lon_min,lon_max */
export function bboxParam(box: MapBox): string {
  return [box.latMin, box.latMax, box.lonMin, box.lonMax].join(",");
}

export function geoQuery(
  box: MapBox,
  feature: string,
  fromNs: number,
  toNs: number,
): Record<string, string> {
  return {
    feature,
    bbox: bboxParam(box),
    from: String(fromNs),
    to: String(toNs),
  };
}

/**
 * "Export selection": the boxed instances as labeled-instance CSV,
 * with the KPI first and the coordinates after it. An empty selection
 * exports the header line only.
 */
export function exportSelection(instances: GeoInstance[], feature: string): string {
  return instancesToCsv(instances, [feature, "Latitude", "Longitude"]);
}
