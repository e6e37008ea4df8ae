/**
 * Fleet panel model: bar chart of simultaneous anomaly counts per time
 * bucket, with buckets flagged by the service (count above mean + 2
 * standard deviations) drawn highlighted. Supports side-by-side
 * operator comparison by stacking one lane per operator.
 */

import type { FleetBucket, FleetResponse } from "./types.js";

export interface FleetBar {
  tsNs: number;
  count: number;
  flagged: boolean;
  /** bar height as a fraction of the lane height */
  height: number;
}

export function fleetBars(fleet: FleetResponse): FleetBar[] {
  const maxCount = Math.max(1, ...fleet.buckets.map((b) => b.count));
  return fleet.buckets.map((b: FleetBucket) => ({
    tsNs: b.bucket_start_ns,
    count: b.count,
    flagged: b.flagged,
    height: b.count / maxCount,
  }));
}

export function flaggedBuckets(fleet: FleetResponse): number[] {
  return fleet.buckets.filter((b) => b.flagged).map((b) => b.bucket_start_ns);
}

export function fleetQuery(
  target: string,
  fromNs: number,
  toNs: number,
  bucket: string,
  operator?: string,
): Record<string, string> {
  const params: Record<string, string> = {
    target,
    from: String(fromNs),
    to: String(toNs),
    bucket,
  };
  if (operator) params.operator = operator;
  return params;
}
