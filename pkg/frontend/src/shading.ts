/**
 * Anomaly shading: turn detector regions into overlay geometry for the
 * series panel. The overlay never recomputes anything — it only maps
 * what the service returned onto pixels.
 */

import type { AnomalyRegion } from "./types.js";

export interface TimeScale {
  fromNs: number;
  toNs: number;
  widthPx: number;
}

export interface ShadeRect {
  x: number;
  width: number;
  direction: "above" | "below";
  score: number;
  startNs: number;
  endNs: number;
}

export interface OutlierTick {
  x: number;
  tsNs: number;
}

export function tsToX(scale: TimeScale, tsNs: number): number {
  const span = scale.toNs - scale.fromNs;
  if (span <= 0) return 0;
  return ((tsNs - scale.fromNs) / span) * scale.widthPx;
}

/**
 * Regions clipped to the visible window, as shaded rectangles. A
 * zero-length region (single-instant) still gets a minimum 1px width
 * so it stays visible.
 */
export function shadeRegions(regions: AnomalyRegion[], scale: TimeScale): ShadeRect[] {
  const rects: ShadeRect[] = [];
  for (const region of regions) {
    const start = Math.max(region.start_ns, scale.fromNs);
    const end = Math.min(region.end_ns, scale.toNs);
    if (end < start) continue; // fully outside the window
    const x = tsToX(scale, start);
    const width = Math.max(tsToX(scale, end) - x, 1);
    rects.push({
      x,
      width,
      direction: region.direction,
      score: region.score,
      startNs: region.start_ns,
      endNs: region.end_ns,
    });
  }
  return rects;
}

/** Individual outlier timestamps, tinted distinctly from the band. */
export function outlierTicks(regions: AnomalyRegion[], scale: TimeScale): OutlierTick[] {
  const ticks: OutlierTick[] = [];
  for (const region of regions) {
    for (const tsNs of region.outlier_ts) {
      if (tsNs < scale.fromNs || tsNs > scale.toNs) continue;
      ticks.push({ x: tsToX(scale, tsNs), tsNs });
    }
  }
  return ticks;
}

/** The region whose span contains tsNs, for click-to-select. */
export function regionAt(regions: AnomalyRegion[], tsNs: number): AnomalyRegion | null {
  for (const region of regions) {
    if (tsNs >= region.start_ns && tsNs <= region.end_ns) return region;
  }
  return null;
}
