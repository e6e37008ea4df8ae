/**
 * View state: everything needed to reproduce the current panels.
 *
 * The whole state round-trips through the URL query string so a view
 * can be shared as a link and re-opened identically. Only non-default
 * values are serialized, to keep URLs short.
 */

export type DetectorName = "rolling" | "baseline";

export interface MapBox {
  latMin: number;
  latMax: number;
  lonMin: number;
  lonMax: number;
}

export interface ViewState {
  node: string;
  iface: string;
  feature: string;
  /** visible time window, epoch-ns */
  fromNs: number;
  toNs: number;
  /** feature used to color series points (e.g. CID); "" = single color */
  colorBy: string;
  detector: DetectorName;
  params: Record<string, number>;
  /** start_ns of the selected region, or null */
  selectedRegion: number | null;
  mapBox: MapBox | null;
}

export const DEFAULT_PARAMS: Record<DetectorName, Record<string, number>> = {
  // durations in seconds here; the request builder renders "300s" etc.
  rolling: { window: 300, k_sigma: 3, min_cluster: 5, max_gap: 60 },
  baseline: { q_low: 0.1, q_high: 0.9, n_trees: 50, min_cluster: 5, max_gap: 60 },
};

export function defaultViewState(): ViewState {
  return {
    node: "",
    iface: "",
    feature: "",
    fromNs: 0,
    toNs: 0,
    colorBy: "",
    detector: "rolling",
    params: { ...DEFAULT_PARAMS.rolling },
    selectedRegion: null,
    mapBox: null,
  };
}

/**
 * Validate detector parameters client-side, before any request goes
 * out. Returns a list of human-readable problems; empty = OK.
 */
export function validateParams(detector: DetectorName, params: Record<string, number>): string[] {
  const problems: string[] = [];
  const bad = (name: string, why: string) => problems.push(`${name}: ${why}`);

  for (const [name, value] of Object.entries(params)) {
    if (!Number.isFinite(value)) bad(name, "must be a finite number");
  }
  if (problems.length) return problems;

  if (detector === "rolling") {
    if ((params.window ?? 0) <= 0) bad("window", "must be > 0");
    if ((params.k_sigma ?? 0) <= 0) bad("k_sigma", "must be > 0");
    if ((params.min_cluster ?? 0) < 1) bad("min_cluster", "must be ≥ 1");
    if ((params.max_gap ?? 0) <= 0) bad("max_gap", "must be > 0");
  } else {
    const qLow = params.q_low ?? 0.1;
    const qHigh = params.q_high ?? 0.9;
    if (!(qLow > 0 && qLow < 1)) bad("q_low", "must be in (0, 1)");
    if (!(qHigh > 0 && qHigh < 1)) bad("q_high", "must be in (0, 1)");
    if (qLow >= qHigh) bad("q_low", "must be < q_high");
    if ((params.n_trees ?? 1) < 1) bad("n_trees", "must be ≥ 1");
    if ((params.min_cluster ?? 1) < 1) bad("min_cluster", "must be ≥ 1");
    if ((params.max_gap ?? 1) <= 0) bad("max_gap", "must be > 0");
  }
  return problems;
}

export function encodeViewState(state: ViewState): string {
  const q = new URLSearchParams();
  if (state.node) q.set("node", state.node);
  if (state.iface) q.set("iface", state.iface);
  if (state.feature) q.set("feature", state.feature);
  if (state.fromNs || state.toNs) {
    q.set("from", String(state.fromNs));
    q.set("to", String(state.toNs));
  }
  if (state.colorBy) q.set("color", state.colorBy);
  if (state.detector !== "rolling") q.set("detector", state.detector);
  const defaults = DEFAULT_PARAMS[state.detector];
  for (const [name, value] of Object.entries(state.params)) {
    if (value !== defaults[name]) q.set(`p.${name}`, String(value));
  }
  if (state.selectedRegion !== null) q.set("region", String(state.selectedRegion));
  if (state.mapBox) {
    const b = state.mapBox;
    q.set("box", [b.latMin, b.latMax, b.lonMin, b.lonMax].join(","));
  }
  return q.toString();
}

export function decodeViewState(query: string): ViewState {
  const q = new URLSearchParams(query);
  const state = defaultViewState();
  state.node = q.get("node") ?? "";
  state.iface = q.get("iface") ?? "";
  state.feature = q.get("feature") ?? "";
  state.fromNs = Number(q.get("from") ?? 0);
  state.toNs = Number(q.get("to") ?? 0);
  state.colorBy = q.get("color") ?? "";
  state.detector = q.get("detector") === "baseline" ? "baseline" : "rolling";
  state.params = { ...DEFAULT_PARAMS[state.detector] };
  for (const [key, value] of q.entries()) {
    if (key.startsWith("p.")) state.params[key.slice(2)] = Number(value);
  }
  const region = q.get("region");
  state.selectedRegion = region === null ? null : Number(region);
  const box = q.get("box");
  if (box) {
    const parts = box.split(",").map(Number);
    if (parts.length === 4 && parts.every(Number.isFinite)) {
      state.mapBox = {
        latMin: parts[0]!,
        latMax: parts[1]!,
        lonMin: parts[2]!,
        lonMax: parts[3]!,
      };
    }
  }
  return state;
}
