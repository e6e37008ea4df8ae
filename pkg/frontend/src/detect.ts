/**
 * Detector request construction. The tuning widgets edit plain numbers
 * (window in seconds, k_sigma, ...); this module renders them into the
 * wire format the detect endpoint takes. Parameter edits are validated
 * client-side first (see state.ts) so out-of-range values never reach
 * the network.
 */

import type { ViewState } from "./state.js";
import type { DetectRequest } from "./types.js";

/**
 * Render a duration in seconds for the API. Whole minutes read as
 * "5min" (the window slider steps in minutes); anything else stays in
 * seconds, e.g. "60s" for the gap input.
 */
export function windowDuration(seconds: number): string {
  if (seconds >= 60 && seconds % 60 === 0) return `${seconds / 60}min`;
  return `${seconds}s`;
}

export function buildDetectRequest(state: ViewState, contextFeatures: string[] = []): DetectRequest {
  const scope = {
    node: state.node,
    iface: state.iface,
    from: state.fromNs,
    to: state.toNs,
  };
  if (state.detector === "rolling") {
    return {
      method: "rolling",
      target: state.feature,
      scope,
      params: {
        window: windowDuration(state.params.window ?? 300),
        k_sigma: state.params.k_sigma ?? 3,
        min_cluster: state.params.min_cluster ?? 5,
        max_gap: `${state.params.max_gap ?? 60}s`,
      },
    };
  }
  return {
    method: "baseline",
    target: state.feature,
    scope,
    params: {
      context: contextFeatures,
      trees: state.params.n_trees ?? 50,
      min_cluster: state.params.min_cluster ?? 5,
      max_gap: `${state.params.max_gap ?? 60}s`,
    },
  };
}
