"""HTTP API for the explorer UI and other clients.

All endpoints live under ``/api`` and speak JSON (except the CSV export).
Timestamps on the wire are RFC3339 UTC strings; integer epoch-nanoseconds
are also accepted on input.  Error bodies are
``{"status", "code", "message"}`` with status 400 (malformed request),
404 (unknown node/interface/feature), 422 (invalid parameter ranges), or
500 (internal, with an opaque id).

The service holds a read-only view of the store and re-reads the manifest
when the CLI swaps it.  See docs/api-reference.md for payload examples.
"""

from __future__ import annotations

import concurrent.futures
import logging
import uuid

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import detect, pipeline, qrf, rootcause
from .merge import instances_to_csv
from .errors import MbbMinerError, UnknownKey
from .store import SeriesStore
from .timeutil import (format_duration, format_timestamp,
                       parse_duration, parse_timestamp)

logger = logging.getLogger(__name__)

DEFAULT_DETECT_BUDGET_S = 30.0


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


def _ts(value, name: str) -> int:
    try:
        return parse_timestamp(value)
    except (ValueError, TypeError) as exc:
        raise ApiError(400, "bad_timestamp", f"{name}: {exc}")


def _range(t0raw, t1raw) -> tuple[int, int]:
    t0 = _ts(t0raw, "from")
    t1 = _ts(t1raw, "to")
    if t0 >= t1:
        raise ApiError(422, "empty_range", "'from' must precede 'to'")
    return t0, t1


class DetectBody(BaseModel):
    method: str = "rolling"
    target: str
    scope: dict
    params: dict = {}


class ExplainBody(BaseModel):
    region: dict
    scope: dict
    features: list[str] | None = None
    max_subset_size: int = 2
    top_m: int = 50


class ExportBody(BaseModel):
    scope: dict
    labels: list[dict] = []


def _region_payload(region: detect.AnomalyRegion, interface: str) -> dict:
    payload = detect.region_to_json(region, interface)
    payload["start"] = format_timestamp(region.start_ts)
    payload["end"] = format_timestamp(region.end_ts)
    payload["start_ns"] = region.start_ts
    payload["end_ns"] = region.end_ts
    return payload


def _detect_params(method: str, params: dict, seed: int = 0):
    try:
        rolling = detect.RollingParams(
            window=parse_duration(params.get("window", "5min")),
            k_sigma=float(params.get("k_sigma", 3.0)),
            min_cluster=int(params.get("min_cluster", 5)),
            max_gap=parse_duration(params.get("max_gap", "60s")),
        )
        baseline = None
        if method == "baseline":
            forest = qrf.ForestParams(
                n_trees=int(params.get("trees", 100)),
                min_leaf=int(params.get("min_leaf", 5)),
                seed=int(params.get("seed", seed)))
            baseline = detect.BaselineParams(
                features=tuple(params["context"]),
                quantile=params.get("quantile"),
                residual_quantile=float(params.get("residual_quantile", 0.99)),
                min_cluster=int(params.get("min_cluster", 5)),
                max_gap=parse_duration(params.get("max_gap", "60s")),
                forest=forest)
        dist = detect.DistParams(
            segment=parse_duration(params.get("segment", "15min")),
            kl_threshold=float(params.get("kl_threshold", 0.5)))
    except KeyError as exc:
        raise ApiError(400, "missing_param", f"missing detector parameter {exc}")
    except ValueError as exc:
        raise ApiError(422, "bad_param", str(exc))
    return rolling, baseline, dist


def create_app(store_path, allow_origins: list[str] | None = None,
               detect_budget_s: float = DEFAULT_DETECT_BUDGET_S) -> FastAPI:
    store = SeriesStore.open(store_path)
    app = FastAPI(title="mbbminer service", version="0.1.0")
    if allow_origins:
        app.add_middleware(CORSMiddleware, allow_origins=allow_origins,
                           allow_methods=["*"], allow_headers=["*"])
    executor = concurrent.futures.ThreadPoolExecutor(max_workers=4)

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={
            "status": exc.status, "code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={
            "status": 400, "code": "malformed_request", "message": str(exc)})

    @app.exception_handler(UnknownKey)
    async def unknown_key_handler(request: Request, exc: UnknownKey):
        return JSONResponse(status_code=404, content={
            "status": 404, "code": "unknown_key", "message": str(exc)})

    @app.exception_handler(MbbMinerError)
    async def data_error_handler(request: Request, exc: MbbMinerError):
        return JSONResponse(status_code=422, content={
            "status": 422, "code": type(exc).__name__, "message": str(exc)})

    @app.exception_handler(Exception)
    async def internal_handler(request: Request, exc: Exception):
        error_id = uuid.uuid4().hex[:12]
        logger.exception("internal error %s", error_id)
        return JSONResponse(status_code=500, content={
            "status": 500, "code": "internal", "message": f"internal error {error_id}"})

    def fresh() -> SeriesStore:
        store.maybe_reload()
        return store

    @app.get("/api/nodes")
    def nodes():
        s = fresh()
        summary = s.summary()
        return {
            "nodes": {
                node: {
                    iface: {
                        "features": info["features"],
                        "time_extent": None if info["time_extent"] is None else {
                            "from": format_timestamp(info["time_extent"][0]),
                            "to": format_timestamp(info["time_extent"][1]),
                            "from_ns": info["time_extent"][0],
                            "to_ns": info["time_extent"][1],
                        },
                    } for iface, info in ifaces.items()
                } for node, ifaces in summary.items()
            },
            "features": [{
                "name": f.name, "kind": f.kind, "unit": f.unit,
                "aggregation": f.aggregation, "orientation": f.orientation,
            } for f in s.schema.features],
            "ladder": [format_duration(v) for v in s.ladder.levels],
        }

    @app.get("/api/series")
    def series(node: str, iface: str, feature: str, request: Request,
               max_points: int = 5000):
        qp = request.query_params
        if "from" not in qp or "to" not in qp:
            raise ApiError(400, "missing_param", "'from' and 'to' are required")
        t0, t1 = _range(qp["from"], qp["to"])
        if max_points < 1:
            raise ApiError(422, "bad_param", "max_points must be >= 1")
        s = fresh()
        level, result = s.query(node, iface, [feature], t0, t1, max_points)
        buckets = result[feature]
        return {
            "node": node, "iface": iface, "feature": feature,
            "granularity": format_duration(level), "granularity_ns": level,
            "buckets": [{"ts": format_timestamp(b.start_ts), "ts_ns": b.start_ts,
                         "value": b.value, "count": b.count,
                         "min": b.min, "max": b.max} for b in buckets],
        }

    def _scope(scope: dict):
        for key in ("node", "iface", "from", "to"):
            if key not in scope:
                raise ApiError(400, "missing_param", f"scope.{key} is required")
        t0, t1 = _range(scope["from"], scope["to"])
        step = parse_duration(scope.get("step", "1s"))
        return scope["node"], scope["iface"], t0, t1, step

    @app.post("/api/detect")
    def detect_endpoint(body: DetectBody):
        if body.method not in ("rolling", "baseline", "distribution"):
            raise ApiError(422, "bad_param", f"unknown method {body.method!r}")
        node, iface, t0, t1, step = _scope(body.scope)
        rolling, baseline, dist = _detect_params(body.method, body.params)
        train_range = None
        if "train_from" in body.scope and "train_to" in body.scope:
            train_range = (_ts(body.scope["train_from"], "train_from"),
                           _ts(body.scope["train_to"], "train_to"))
        s = fresh()

        def work():
            return pipeline.run_detect(
                s, body.method, node, iface, body.target, t0, t1,
                rolling=rolling, baseline=baseline, dist=dist,
                train_range=train_range, step=step)

        future = executor.submit(work)
        try:
            regions, extra = future.result(timeout=detect_budget_s)
        except concurrent.futures.TimeoutError:
            raise ApiError(422, "budget_exceeded",
                           f"detection exceeded the {detect_budget_s}s budget")
        if body.method == "distribution":
            return {"method": body.method, "regions": [], "comparisons": [
                {"segment_pair": [format_timestamp(c.segment_pair[0]),
                                  format_timestamp(c.segment_pair[1])],
                 "segment_pair_ns": list(c.segment_pair),
                 "kl": c.kl, "flagged": c.flagged, "skipped": c.skipped}
                for c in extra]}
        payload = {"method": body.method,
                   "regions": [_region_payload(r, iface) for r in regions]}
        if body.method == "baseline" and extra is not None:
            payload["baseline"] = [{"ts_ns": t, "value": v} for t, v in extra.baseline]
            payload["threshold"] = extra.threshold
        return payload

    @app.post("/api/explain")
    def explain_endpoint(body: ExplainBody):
        node, iface, t0, t1, step = _scope(body.scope)
        features = body.features or [f.name for f in fresh().schema.features]
        for f in features:
            if f not in fresh().schema.by_name:
                raise ApiError(404, "unknown_key", f"unknown feature {f!r}")
        start = _ts(body.region.get("start"), "region.start")
        end = _ts(body.region.get("end"), "region.end")
        s = fresh()
        instances = pipeline.merged_instances(s, node, iface, features, t0, t1, step)
        region = detect.AnomalyRegion(start_ts=start, end_ts=end, detector="manual",
                                      params={}, outlier_ts=(), score=0.0,
                                      direction="shift")
        rows = pipeline.run_explain(instances, [region], features,
                                    max_subset_size=body.max_subset_size,
                                    top_m=body.top_m)
        return {"rows": [{"subset": [list(p) for p in r.subset], "count": r.n,
                          "count_class": r.k, "enrichment": r.enrichment,
                          "p_value": r.p_value, "q_value": r.q_value}
                         for r in rows]}

    @app.get("/api/geo")
    def geo(feature: str, bbox: str, request: Request, step: str = "1s"):
        qp = request.query_params
        if "from" not in qp or "to" not in qp:
            raise ApiError(400, "missing_param", "'from' and 'to' are required")
        t0, t1 = _range(qp["from"], qp["to"])
        try:
            lat_min, lat_max, lon_min, lon_max = (float(v) for v in bbox.split(","))
        except ValueError:
            raise ApiError(400, "bad_bbox",
                           "bbox must be lat_min,lat_max,lon_min,lon_max")
        if lat_min > lat_max or lon_min > lon_max:
            raise ApiError(422, "empty_bbox", "bounding box is empty")
        s = fresh()
        instances = s.geo_select(t0, t1, (lat_min, lat_max, lon_min, lon_max),
                                 [feature], step=parse_duration(step))
        return {"instances": [{
            "ts": format_timestamp(i.ts), "ts_ns": i.ts, "node": i.node_id,
            "iface": i.interface_id, "values": i.values} for i in instances]}

    @app.get("/api/fleet")
    def fleet(target: str, request: Request, operator: str | None = None,
              bucket: str = "5min", flag_sigma: float = 2.0):
        qp = request.query_params
        if "from" not in qp or "to" not in qp:
            raise ApiError(400, "missing_param", "'from' and 'to' are required")
        t0, t1 = _range(qp["from"], qp["to"])
        s = fresh()
        bucket_ns = parse_duration(bucket)
        regions_by_iface: dict[str, list[detect.AnomalyRegion]] = {}
        for node, ifaces in s.summary().items():
            for iface in ifaces:
                if operator and not _iface_has_operator(s, node, iface, operator):
                    continue
                ts, x = pipeline.target_series(s, node, iface, target, t0, t1)
                if len(ts) < 3:
                    continue
                regions_by_iface[f"{node}/{iface}"] = detect.detect_rolling(
                    (ts, x), detect.RollingParams())
        buckets = detect.fleet_count(regions_by_iface, bucket_ns, flag_sigma,
                                     span=(t0, t1))
        return {"buckets": [{"bucket_start": format_timestamp(b.bucket_start),
                             "bucket_start_ns": b.bucket_start,
                             "count": b.count, "flagged": b.flagged}
                            for b in buckets]}

    def _iface_has_operator(s: SeriesStore, node: str, iface: str,
                            operator: str) -> bool:
        if "Operator" not in s.schema.by_name:
            return True
        buckets = s.read_partition(node, iface, "Operator", s.ladder.base,
                                   missing_ok=True)
        return any((b.categories or {b.value: 1}).get(operator) for b in buckets)

    @app.post("/api/export")
    def export(body: ExportBody):
        node, iface, t0, t1, step = _scope(body.scope)
        s = fresh()
        features = body.scope.get("features") or [f.name for f in s.schema.features]
        instances = pipeline.merged_instances(s, node, iface, features, t0, t1, step)
        if body.labels:
            regions = [detect.AnomalyRegion(
                start_ts=_ts(lbl["start"], "label.start"),
                end_ts=_ts(lbl["end"], "label.end"), detector="manual", params={},
                outlier_ts=(), score=0.0, direction="shift") for lbl in body.labels]
            instances = list(rootcause.label_instances(instances, regions).instances)
        return PlainTextResponse(instances_to_csv(instances, features),
                                 media_type="text/csv")

    return app
