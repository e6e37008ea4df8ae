/**
 * Payload types for the mbbminer HTTP API.
 *
 * These mirror the JSON shapes served by the backend; every timestamp
 * comes in RFC3339 (`ts`) and integer-nanosecond (`ts_ns`) form and the
 * UI does all arithmetic on the `_ns` twins.
 */

export type FeatureKind = "numeric" | "categorical" | "event";

export interface FeatureSpec {
  name: string;
  kind: FeatureKind;
  unit: string;
  aggregation: string;
  orientation: string;
}

export interface TimeExtent {
  from: string;
  to: string;
  from_ns: number;
  to_ns: number;
}

export interface InterfaceSummary {
  features: string[];
  time_extent: TimeExtent;
}

export interface NodesResponse {
  nodes: Record<string, Record<string, InterfaceSummary>>;
  features: FeatureSpec[];
  granularities?: Record<string, number>;
}

export interface SeriesBucket {
  ts: string;
  ts_ns: number;
  value: number | string | null;
  count: number;
  min?: number;
  max?: number;
  /** categorical levels: per-category counts instead of min/max */
  categories?: Record<string, number>;
}

export interface SeriesResponse {
  node: string;
  iface: string;
  feature: string;
  granularity: string;
  granularity_ns: number;
  buckets: SeriesBucket[];
}

export interface AnomalyRegion {
  interface: string;
  detector: string;
  start: string;
  end: string;
  start_ns: number;
  end_ns: number;
  score: number;
  direction: "above" | "below";
  n_outliers: number;
  outlier_ts: number[];
  params: Record<string, number>;
}

export interface DetectScope {
  node: string;
  iface: string;
  from: number;
  to: number;
}

export interface DetectRequest {
  method: "rolling" | "baseline" | "distribution";
  target: string;
  scope: DetectScope;
  params: Record<string, number | string | string[]>;
}

export interface DetectResponse {
  method: string;
  regions: AnomalyRegion[];
  baseline?: unknown;
  comparisons?: unknown;
}

export interface GeoInstance {
  ts: string;
  ts_ns: number;
  node: string;
  iface: string;
  values: Record<string, number | string | null>;
  label?: string;
}

export interface GeoResponse {
  instances: GeoInstance[];
}

export interface ExplainRow {
  subset: Record<string, string>;
  k: number;
  n: number;
  K: number;
  N: number;
  enrichment: number;
  p: number;
  q: number;
}

export interface ExplainResponse {
  rows: ExplainRow[];
  N: number;
  K: number;
}

export interface FleetBucket {
  bucket_start: string;
  bucket_start_ns: number;
  count: number;
  flagged: boolean;
}

export interface FleetResponse {
  buckets: FleetBucket[];
}

export interface ApiErrorBody {
  status: number;
  code: string;
  message: string;
}
