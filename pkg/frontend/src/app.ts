/**
 * Explorer shell: wires the panels to the service and keeps the view
 * state synced with the URL so any view is shareable as a link.
 *
 * Layout (see index.html): a series panel with one SVG lane per
 * interface and the anomaly overlay, a detector tuning form, a region
 * list + enrichment table, a map canvas with box selection + export,
 * and a fleet bar chart. All numbers shown come from service
 * responses; nothing is computed locally.
 */

import { ApiClient, ApiError, Superseded } from "./api.js";
import { buildDetectRequest } from "./detect.js";
import { fleetBars, fleetQuery } from "./fleet.js";
import { colorScale, exportSelection, geoQuery, legendRange, tracePoints } from "./geo.js";
import { buildLane, colorFor, seriesQuery, zoomTo } from "./series.js";
import { outlierTicks, regionAt, shadeRegions } from "./shading.js";
import {
  decodeViewState,
  encodeViewState,
  validateParams,
  type ViewState,
} from "./state.js";
import type { AnomalyRegion, GeoInstance, NodesResponse } from "./types.js";

const LANE_W = 960;
const LANE_H = 140;

export class ExplorerApp {
  state: ViewState;
  regions: AnomalyRegion[] = [];
  selection: GeoInstance[] = [];
  private nodes: NodesResponse | null = null;
  private colorOrder: string[] = [];

  constructor(
    private readonly client: ApiClient,
    private readonly root: HTMLElement,
  ) {
    this.state = decodeViewState(window.location.search.slice(1));
    window.addEventListener("popstate", () => {
      this.state = decodeViewState(window.location.search.slice(1));
      void this.refreshAll();
    });
  }

  async start(): Promise<void> {
    try {
      this.nodes = await this.client.getNodes();
    } catch (err) {
      this.banner(err);
      return;
    }
    // default to the first node/interface/feature if the URL didn't say
    const nodeIds = Object.keys(this.nodes.nodes);
    if (!this.state.node && nodeIds.length) {
      const node = nodeIds[0]!;
      const iface = Object.keys(this.nodes.nodes[node]!)[0]!;
      const summary = this.nodes.nodes[node]![iface]!;
      this.state.node = node;
      this.state.iface = iface;
      this.state.feature = summary.features[0] ?? "";
      this.state.fromNs = summary.time_extent.from_ns;
      this.state.toNs = summary.time_extent.to_ns;
    }
    await this.refreshAll();
  }

  /** Push the current state into the URL (shareable view). */
  syncUrl(): void {
    const query = encodeViewState(this.state);
    window.history.replaceState(null, "", query ? `?${query}` : window.location.pathname);
  }

  async refreshAll(): Promise<void> {
    this.syncUrl();
    await Promise.allSettled([this.refreshSeries(), this.refreshDetect(), this.refreshFleet()]);
  }

  async refreshSeries(): Promise<void> {
    const ifaces = Object.keys(this.nodes?.nodes[this.state.node] ?? { [this.state.iface]: 0 });
    const window = { fromNs: this.state.fromNs, toNs: this.state.toNs };
    for (const iface of ifaces) {
      const panel = `series:${iface}`;
      try {
        const series = await this.client.getSeries(
          panel,
          seriesQuery(this.state.node, iface, this.state.feature, window),
        );
        const colorBy = this.state.colorBy
          ? await this.client.getSeries(
              `${panel}:color`,
              seriesQuery(this.state.node, iface, this.state.colorBy, window),
            )
          : undefined;
        this.drawLane(iface, buildLane(series, colorBy));
      } catch (err) {
        if (!(err instanceof Superseded)) this.banner(err);
      }
    }
  }

  async refreshDetect(): Promise<void> {
    const problems = validateParams(this.state.detector, this.state.params);
    if (problems.length) {
      this.banner(new Error(problems.join("; ")));
      return; // rejected client-side, no request issued
    }
    try {
      const resp = await this.client.detect("detect", buildDetectRequest(this.state));
      this.regions = resp.regions;
      this.drawShading();
    } catch (err) {
      if (!(err instanceof Superseded)) this.banner(err);
    }
  }

  async selectRegion(tsNs: number): Promise<void> {
    const region = regionAt(this.regions, tsNs);
    this.state.selectedRegion = region ? region.start_ns : null;
    this.syncUrl();
    if (!region) return;
    try {
      const resp = await this.client.explain("explain", {
        region: { from: region.start_ns, to: region.end_ns },
        scope: { node: this.state.node, iface: this.state.iface, from: this.state.fromNs, to: this.state.toNs },
      });
      this.drawEnrichment(resp.rows);
    } catch (err) {
      if (!(err instanceof Superseded)) this.banner(err);
    }
  }

  async boxSelect(): Promise<void> {
    if (!this.state.mapBox) return;
    this.syncUrl();
    try {
      const resp = await this.client.geo(
        "geo",
        geoQuery(this.state.mapBox, this.state.feature, this.state.fromNs, this.state.toNs),
      );
      this.selection = resp.instances;
      this.drawMap();
    } catch (err) {
      if (!(err instanceof Superseded)) this.banner(err);
    }
  }

  /** Exported CSV for the current box selection (download handler). */
  exportCsv(): string {
    return exportSelection(this.selection, this.state.feature);
  }

  async zoom(fracLo: number, fracHi: number): Promise<void> {
    const next = zoomTo({ fromNs: this.state.fromNs, toNs: this.state.toNs }, fracLo, fracHi);
    this.state.fromNs = next.fromNs;
    this.state.toNs = next.toNs;
    await this.refreshAll();
  }

  async refreshFleet(): Promise<void> {
    try {
      const resp = await this.client.fleet(
        "fleet",
        fleetQuery(this.state.feature, this.state.fromNs, this.state.toNs, "5min"),
      );
      const bars = fleetBars(resp);
      const svg = this.panelSvg("fleet");
      svg.innerHTML = bars
        .map((bar, i) => {
          const w = LANE_W / Math.max(bars.length, 1);
          const h = bar.height * (LANE_H - 8);
          const cls = bar.flagged ? "bar flagged" : "bar";
          return `<rect class="${cls}" x="${i * w}" y="${LANE_H - h}" width="${w - 1}" height="${h}"><title>${bar.count}</title></rect>`;
        })
        .join("");
    } catch (err) {
      if (!(err instanceof Superseded)) this.banner(err);
    }
  }

  private drawLane(iface: string, lane: ReturnType<typeof buildLane>): void {
    const svg = this.panelSvg(`lane-${iface}`);
    const values = lane.points.map((p) => p.value);
    const lo = Math.min(...values, 0);
    const hi = Math.max(...values, 1);
    const scale = { fromNs: this.state.fromNs, toNs: this.state.toNs, widthPx: LANE_W };
    const span = scale.toNs - scale.fromNs || 1;
    svg.innerHTML = lane.points
      .map((p) => {
        const x = ((p.tsNs - scale.fromNs) / span) * LANE_W;
        const y = LANE_H - ((p.value - lo) / (hi - lo || 1)) * (LANE_H - 8) - 4;
        const fill = p.colorKey ? colorFor(p.colorKey, this.colorOrder) : "#4269d0";
        return `<circle cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="1.5" fill="${fill}"/>`;
      })
      .join("");
    svg.setAttribute("data-granularity", lane.granularity);
  }

  private drawShading(): void {
    const scale = { fromNs: this.state.fromNs, toNs: this.state.toNs, widthPx: LANE_W };
    const overlay = this.panelSvg("overlay");
    const rects = shadeRegions(this.regions, scale)
      .map(
        (r) =>
          `<rect class="shade ${r.direction}" x="${r.x.toFixed(1)}" y="0" width="${r.width.toFixed(1)}" height="${LANE_H}"/>`,
      )
      .join("");
    const ticks = outlierTicks(this.regions, scale)
      .map((t) => `<line class="outlier" x1="${t.x.toFixed(1)}" y1="0" x2="${t.x.toFixed(1)}" y2="8"/>`)
      .join("");
    overlay.innerHTML = rects + ticks;
  }

  private drawMap(): void {
    const svg = this.panelSvg("map");
    const points = tracePoints({ instances: this.selection }, this.state.feature);
    const legend = legendRange(points);
    svg.innerHTML = points
      .map((p) => {
        const t = legend && p.value !== null ? colorScale(legend, p.value) : 0;
        const hue = 240 - 240 * t; // blue → red
        return `<circle cx="${(p.lon * 8).toFixed(2)}" cy="${(-p.lat * 8).toFixed(2)}" r="2" fill="hsl(${hue.toFixed(0)},70%,50%)"/>`;
      })
      .join("");
    const label = this.root.querySelector("#legend");
    if (label) {
      label.textContent = legend
        ? `${this.state.feature}: ${legend.min.toFixed(1)} – ${legend.max.toFixed(1)}`
        : "no geo data in the selected window";
    }
  }

  private drawEnrichment(rows: { subset: Record<string, string>; enrichment: number; q: number }[]): void {
    const table = this.root.querySelector("#enrichment");
    if (!table) return;
    table.innerHTML = rows
      .map((row) => {
        const subset = Object.entries(row.subset)
          .map(([k, v]) => `${k}=${v}`)
          .join(", ");
        return `<tr><td>${subset}</td><td>${row.enrichment.toFixed(2)}</td><td>${row.q.toExponential(2)}</td></tr>`;
      })
      .join("");
  }

  private panelSvg(id: string): SVGElement {
    let svg = this.root.querySelector<SVGElement>(`#${CSS.escape(id)}`);
    if (!svg) {
      svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
      svg.id = id;
      svg.setAttribute("viewBox", `0 0 ${LANE_W} ${LANE_H}`);
      this.root.appendChild(svg);
    }
    return svg;
  }

  private banner(err: unknown): void {
    const box = this.root.querySelector("#banners");
    if (!box) return;
    const message =
      err instanceof ApiError ? `${err.code}: ${err.message}` : err instanceof Error ? err.message : String(err);
    const div = document.createElement("div");
    div.className = "banner";
    div.textContent = message;
    const dismiss = document.createElement("button");
    dismiss.textContent = "×";
    dismiss.addEventListener("click", () => div.remove());
    div.appendChild(dismiss);
    box.appendChild(div);
  }
}

export function mount(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("#app not found");
  const app = new ExplorerApp(new ApiClient(""), root);
  void app.start();
}
