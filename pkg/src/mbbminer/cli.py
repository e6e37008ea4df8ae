"""Batch command line: ingest, resample, query, detect, explain, fleet, export, serve.

Machine-readable output (CSV by default, ``--json`` to switch) goes to the
``-o`` file or standard output; progress and diagnostics go to standard
error.  Exit codes: 0 success, 1 usage error, 2 data error.

The default store path can be set with the ``MBBMINER_STORE`` environment
variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import detect, pipeline, rootcause
from .merge import instances_from_csv, instances_to_csv
from .errors import MbbMinerError
from .ingest import parse_records
from .schema import parse_schema
from .store import GranularityLadder, SeriesStore, resample
from .timeutil import NS_PER_SEC, format_duration, parse_duration, parse_timestamp

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _duration(text):
    try:
        return parse_duration(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _timestamp(text):
    try:
        return parse_timestamp(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _build_parser() -> _Parser:
    parser = _Parser(prog="mbbminer",
                     description="Mobile-broadband measurement mining toolkit")
    parser.add_argument("--show-defaults", action="store_true",
                        help="print all detector defaults and exit")
    sub = parser.add_subparsers(dest="command")

    def add_store(p):
        p.add_argument("--store", default=os.environ.get("MBBMINER_STORE"),
                       help="store directory (default: $MBBMINER_STORE)")

    def add_output(p):
        p.add_argument("--json", action="store_true", help="JSON instead of CSV")
        p.add_argument("-o", "--output", help="output file (default: stdout)")

    p = sub.add_parser("ingest", help="parse measurement logs into the store")
    add_store(p)
    p.add_argument("--schema", help="schema document (required when creating)")
    p.add_argument("--format", choices=("ndjson", "csv"), default="ndjson")
    p.add_argument("--strict", action="store_true",
                   help="treat unknown fields as errors")
    p.add_argument("files", nargs="+")

    p = sub.add_parser("resample", help="rebuild coarser levels from the base level")
    add_store(p)

    p = sub.add_parser("query", help="range query with automatic granularity")
    add_store(p)
    add_output(p)
    p.add_argument("--node", required=True)
    p.add_argument("--iface", required=True)
    p.add_argument("--feature", action="append", required=True, dest="features")
    p.add_argument("--from", dest="t0", type=_timestamp, required=True)
    p.add_argument("--to", dest="t1", type=_timestamp, required=True)
    p.add_argument("--max-points", type=int, default=5000)

    p = sub.add_parser("detect", help="run an anomaly detector")
    add_store(p)
    add_output(p)
    p.add_argument("--method", choices=("rolling", "baseline", "distribution"),
                   default="rolling")
    p.add_argument("--node", required=True)
    p.add_argument("--iface", required=True)
    p.add_argument("--feature", "--target", dest="target", required=True)
    p.add_argument("--from", dest="t0", type=_timestamp, required=True)
    p.add_argument("--to", dest="t1", type=_timestamp, required=True)
    p.add_argument("--step", type=_duration, default=NS_PER_SEC,
                   help="merge axis step for the baseline detector")
    p.add_argument("--threads", type=int, default=1)
    # rolling
    p.add_argument("--window", type=_duration, default=None)
    p.add_argument("--k-sigma", type=float, default=None)
    p.add_argument("--min-cluster", type=int, default=None)
    p.add_argument("--max-gap", type=_duration, default=None)
    # baseline
    p.add_argument("--context", help="comma-separated context features")
    p.add_argument("--train-from", type=_timestamp)
    p.add_argument("--train-to", type=_timestamp)
    p.add_argument("--quantile", type=float, default=None)
    p.add_argument("--residual-quantile", type=float, default=None)
    p.add_argument("--trees", type=int, default=None)
    p.add_argument("--min-leaf", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    # distribution
    p.add_argument("--segment", type=_duration, default=None)
    p.add_argument("--kl-threshold", type=float, default=None)

    p = sub.add_parser("explain", help="rank enriched feature-value subsets")
    add_output(p)
    p.add_argument("--instances", required=True,
                   help="labeled-instance CSV (see docs/exchange-formats.md)")
    p.add_argument("--regions", help="region CSV used to label instances")
    p.add_argument("--features", default="all",
                   help="'all' or comma-separated feature names")
    p.add_argument("--max-subset-size", type=int, default=2)
    p.add_argument("--top-m", type=int, default=50)

    p = sub.add_parser("fleet", help="concurrent anomaly counts across interfaces")
    add_output(p)
    p.add_argument("--regions", required=True, help="region CSV")
    p.add_argument("--bucket", type=_duration, default=parse_duration("5min"))
    p.add_argument("--flag-sigma", type=float, default=2.0)

    p = sub.add_parser("export", help="export labeled instances as CSV")
    add_store(p)
    add_output(p)
    p.add_argument("--node", required=True)
    p.add_argument("--iface", required=True)
    p.add_argument("--feature", action="append", dest="features",
                   help="repeatable; default: all schema features")
    p.add_argument("--from", dest="t0", type=_timestamp, required=True)
    p.add_argument("--to", dest="t1", type=_timestamp, required=True)
    p.add_argument("--step", type=_duration, default=NS_PER_SEC)
    p.add_argument("--regions", help="region CSV used to label instances")

    p = sub.add_parser("serve", help="run the HTTP API")
    add_store(p)
    p.add_argument("--bind", default="127.0.0.1:8040")
    p.add_argument("--cors", action="append", default=[], metavar="ORIGIN",
                   help="repeatable; origins allowed to call the API")
    return parser


def _emit(text: str, output: str | None):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _open_store(args) -> SeriesStore:
    if not args.store:
        raise SystemExit(EXIT_USAGE)
    return SeriesStore.open(args.store)


def _show_defaults():
    defaults = {
        "rolling": asdict(detect.RollingParams()),
        "baseline": {**asdict(detect.BaselineParams(features=("_",))),
                     "features": [], "quantile": "0.10 lower_is_better / 0.90 otherwise"},
        "distribution": asdict(detect.DistParams()),
        "ladder": [format_duration(v) for v in GranularityLadder().levels],
    }
    print(json.dumps(defaults, indent=2))


def _cmd_ingest(args) -> int:
    store_path = args.store
    if not store_path:
        print("ingest: --store (or MBBMINER_STORE) is required", file=sys.stderr)
        return EXIT_USAGE
    if (Path(store_path) / "manifest.json").exists():
        store = SeriesStore.open(store_path)
    else:
        if not args.schema:
            print("ingest: --schema required to create a new store", file=sys.stderr)
            return EXIT_USAGE
        schema = parse_schema(Path(args.schema).read_text())
        store = SeriesStore.create(store_path, schema)
    total_records = 0
    total_errors = 0
    for fname in args.files:
        with open(fname, "r") as fh:
            records, errors = parse_records(fh, store.schema, args.format,
                                            strict=args.strict)
        for err in errors[:20]:
            print(f"{fname}:{err.line}: {err.reason}", file=sys.stderr)
        if len(errors) > 20:
            print(f"{fname}: ... {len(errors) - 20} more errors", file=sys.stderr)
        report = store.load(records)
        total_records += report.accepted
        total_errors += len(errors) + report.rejected
        print(f"{fname}: {report.describe()}", file=sys.stderr)
    print(f"ingested {total_records} records, {total_errors} rejected lines",
          file=sys.stderr)
    return EXIT_OK


def _cmd_resample(args) -> int:
    store = _open_store(args)
    rebuilt = 0
    base = store.ladder.base
    for key in list(store._partitions):
        if key.level != base:
            continue
        buckets = store.read_partition(key.node_id, key.interface_id,
                                       key.feature_name, base)
        spec = store.schema.feature(key.feature_name)
        for level in store.ladder.levels[1:]:
            coarse = resample(buckets, level, spec, from_level=base)
            store._write_partition(key.node_id, key.interface_id,
                                   key.feature_name, level, coarse, spec)
            rebuilt += 1
    store._write_manifest()
    print(f"rebuilt {rebuilt} coarse partitions", file=sys.stderr)
    return EXIT_OK


def _cmd_query(args) -> int:
    store = _open_store(args)
    level, series = store.query(args.node, args.iface, args.features,
                                args.t0, args.t1, args.max_points)
    if args.json:
        payload = {"granularity": format_duration(level),
                   "granularity_ns": level,
                   "series": {f: [{"ts": b.start_ts, "value": b.value,
                                   "count": b.count} for b in buckets]
                              for f, buckets in series.items()}}
        _emit(json.dumps(payload, indent=1) + "\n", args.output)
    else:
        lines = ["feature,ts,value,count"]
        for f in args.features:
            for b in series[f]:
                v = repr(b.value) if isinstance(b.value, float) else (b.value or "")
                lines.append(f"{f},{b.start_ts},{v},{b.count}")
        _emit("\n".join(lines) + "\n", args.output)
    print(f"granularity {format_duration(level)}", file=sys.stderr)
    return EXIT_OK


def _detect_params(args):
    rolling = detect.RollingParams(
        window=args.window or detect.RollingParams().window,
        k_sigma=args.k_sigma or detect.RollingParams().k_sigma,
        min_cluster=args.min_cluster or detect.RollingParams().min_cluster,
        max_gap=args.max_gap or detect.RollingParams().max_gap)
    baseline = None
    if args.method == "baseline":
        if not args.context:
            raise SystemExit(EXIT_USAGE)
        import mbbminer.qrf as qrf
        forest_defaults = qrf.ForestParams()
        baseline = detect.BaselineParams(
            features=tuple(args.context.split(",")),
            quantile=args.quantile,
            residual_quantile=args.residual_quantile or 0.99,
            min_cluster=args.min_cluster or 5,
            max_gap=args.max_gap or detect.BaselineParams(features=("_",)).max_gap,
            forest=qrf.ForestParams(
                n_trees=args.trees or forest_defaults.n_trees,
                min_leaf=args.min_leaf or forest_defaults.min_leaf,
                seed=args.seed))
    dist = detect.DistParams(
        segment=args.segment or detect.DistParams().segment,
        kl_threshold=(args.kl_threshold if args.kl_threshold is not None
                      else detect.DistParams().kl_threshold))
    return rolling, baseline, dist


def _cmd_detect(args) -> int:
    store = _open_store(args)
    rolling, baseline, dist = _detect_params(args)
    train_range = None
    if args.train_from is not None and args.train_to is not None:
        train_range = (args.train_from, args.train_to)
    regions, extra = pipeline.run_detect(
        store, args.method, args.node, args.iface, args.target, args.t0, args.t1,
        rolling=rolling, baseline=baseline, dist=dist,
        train_range=train_range, step=args.step, n_jobs=args.threads)
    if args.method == "distribution":
        rows = extra
        if args.json:
            payload = [{"segment_pair": list(c.segment_pair), "kl": c.kl,
                        "flagged": c.flagged, "skipped": c.skipped}
                       for c in rows]
            _emit(json.dumps(payload, indent=1) + "\n", args.output)
        else:
            lines = ["segment_a,segment_b,kl,flagged,skipped"]
            for c in rows:
                kl = "" if c.kl is None else repr(c.kl)
                lines.append(f"{c.segment_pair[0]},{c.segment_pair[1]},{kl},"
                             f"{int(c.flagged)},{int(c.skipped)}")
            _emit("\n".join(lines) + "\n", args.output)
        return EXIT_OK
    if args.json:
        payload = [detect.region_to_json(r, args.iface) for r in regions]
        _emit(json.dumps(payload, indent=1) + "\n", args.output)
    else:
        _emit(detect.regions_to_csv({args.iface: regions}), args.output)
    print(f"{len(regions)} region(s)", file=sys.stderr)
    return EXIT_OK


def _read_regions(path: str):
    by_iface = detect.regions_from_csv(Path(path).read_text())
    return [r for regions in by_iface.values() for r in regions]


def _cmd_explain(args) -> int:
    instances = instances_from_csv(Path(args.instances).read_text())
    regions = _read_regions(args.regions) if args.regions else []
    features = None if args.features == "all" else args.features.split(",")
    rows = pipeline.run_explain(instances, regions, features,
                                max_subset_size=args.max_subset_size,
                                top_m=args.top_m)
    if args.json:
        payload = [{"subset": [list(p) for p in r.subset], "count": r.n,
                    "count_class": r.k, "enrichment": r.enrichment,
                    "p_value": r.p_value, "q_value": r.q_value} for r in rows]
        _emit(json.dumps(payload, indent=1) + "\n", args.output)
    else:
        _emit(rootcause.enrichment_to_csv(rows), args.output)
    return EXIT_OK


def _cmd_fleet(args) -> int:
    by_iface = detect.regions_from_csv(Path(args.regions).read_text())
    buckets = detect.fleet_count(by_iface, args.bucket, args.flag_sigma)
    if args.json:
        payload = [{"bucket_start": b.bucket_start, "count": b.count,
                    "flagged": b.flagged} for b in buckets]
        _emit(json.dumps(payload, indent=1) + "\n", args.output)
    else:
        lines = ["bucket_start,count,flagged"]
        lines += [f"{b.bucket_start},{b.count},{int(b.flagged)}" for b in buckets]
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def _cmd_export(args) -> int:
    store = _open_store(args)
    features = args.features or [f.name for f in store.schema.features]
    instances = pipeline.merged_instances(store, args.node, args.iface, features,
                                          args.t0, args.t1, args.step)
    if args.regions:
        data = rootcause.label_instances(instances, _read_regions(args.regions))
        instances = list(data.instances)
    _emit(instances_to_csv(instances, features), args.output)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, _, port = args.bind.rpartition(":")
    app = create_app(args.store, allow_origins=args.cors or None)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "resample": _cmd_resample,
    "query": _cmd_query,
    "detect": _cmd_detect,
    "explain": _cmd_explain,
    "fleet": _cmd_fleet,
    "export": _cmd_export,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.show_defaults:
        _show_defaults()
        return EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except MbbMinerError as exc:
        print(f"mbbminer {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        print(f"mbbminer {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


def entrypoint():
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
