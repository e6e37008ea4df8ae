/**
 * Series panel model: one lane per interface, points colored by a
 * chosen dimension, tooltip listing all co-timed feature values, and
 * zoom that re-fetches at whatever granularity the service picks for
 * the new window.
 */

import type { SeriesBucket, SeriesResponse } from "./types.js";

export interface LanePoint {
  tsNs: number;
  value: number;
  colorKey: string;
}

export interface Lane {
  iface: string;
  granularity: string;
  points: LanePoint[];
}

/** Distinct, order-stable colors for categorical color-by values. */
const PALETTE = [
  "#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951",
  "#ff8ab7", "#a463f2", "#97bbf5", "#9c6b4e", "#9498a0",
];

export function colorFor(key: string, order: string[]): string {
  let idx = order.indexOf(key);
  if (idx === -1) {
    order.push(key);
    idx = order.length - 1;
  }
  return PALETTE[idx % PALETTE.length]!;
}

/**
 * Build one lane from a series response, joining an optional color-by
 * series on bucket timestamps (same granularity, same window).
 */
export function buildLane(series: SeriesResponse, colorBy?: SeriesResponse): Lane {
  const colorAt = new Map<number, string>();
  if (colorBy) {
    for (const bucket of colorBy.buckets) {
      if (bucket.value !== null) colorAt.set(bucket.ts_ns, String(bucket.value));
    }
  }
  const points: LanePoint[] = [];
  for (const bucket of series.buckets) {
    if (bucket.value === null || typeof bucket.value !== "number") continue;
    points.push({
      tsNs: bucket.ts_ns,
      value: bucket.value,
      colorKey: colorAt.get(bucket.ts_ns) ?? "",
    });
  }
  return { iface: series.iface, granularity: series.granularity, points };
}

export interface TooltipRow {
  feature: string;
  value: string;
}

/**
 * Tooltip contents for a hovered timestamp: the value of every feature
 * the interface carries, one row per feature ("" when absent). The
 * per-feature buckets come from the same /api/series granularity as
 * the lane, so the rows are exactly co-timed.
 */
export function tooltipRows(
  featureNames: string[],
  byFeature: Map<string, SeriesBucket | undefined>,
): TooltipRow[] {
  return featureNames.map((feature) => {
    const bucket = byFeature.get(feature);
    const value = bucket === undefined || bucket.value === null ? "" : String(bucket.value);
    return { feature, value };
  });
}

/** Event-kind features render as vertical rules at their bucket times. */
export function eventRules(series: SeriesResponse): number[] {
  return series.buckets.filter((b) => b.count > 0).map((b) => b.ts_ns);
}

export interface ZoomWindow {
  fromNs: number;
  toNs: number;
}

/**
 * Zoom to a sub-range expressed as fractions of the current window.
 * The caller re-issues /api/series for the new range; the service
 * chooses the (finer) granularity.
 */
export function zoomTo(current: ZoomWindow, fracLo: number, fracHi: number): ZoomWindow {
  const lo = Math.min(fracLo, fracHi);
  const hi = Math.max(fracLo, fracHi);
  const span = current.toNs - current.fromNs;
  return {
    fromNs: Math.round(current.fromNs + lo * span),
    toNs: Math.round(current.fromNs + hi * span),
  };
}

/** Query parameters for a series fetch over a window. */
export function seriesQuery(
  node: string,
  iface: string,
  feature: string,
  window: ZoomWindow,
  maxPoints = 2000,
): Record<string, string> {
  return {
    node,
    iface,
    feature,
    from: String(window.fromNs),
    to: String(window.toNs),
    max_points: String(maxPoints),
  };
}
