"""mbbminer: mining toolkit for mobile-broadband measurement streams.

Ingest heterogeneous measurement logs, store them at multiple time
granularities, merge asynchronous streams into mining instances, detect
anomalous regions with three detectors, aggregate anomalies fleet-wide,
and explain them via statistical feature enrichment.
"""

from .detect import (AnomalyRegion, BaselineParams, DistParams, FleetBucket,
                     RollingParams, detect_baseline, detect_distribution,
                     detect_rolling, fleet_count, kl_divergence)
from .ingest import (LoadReport, MeasurementRecord, ParseError, parse_records,
                     serialize_records)
from .merge import (Instance, instances_from_csv, instances_to_csv, merge,
                    state_timeline)
from .qrf import ForestParams, QrfModel, dump_model, fit, load_model, predict_quantile
from .rootcause import (EnrichmentRow, LabeledDataset, benjamini_hochberg,
                        enrichment_to_csv, hypergeom_tail, label_instances,
                        permutation_test, significant_groups, welch_t_test)
from .schema import (FeatureSpec, Interpolate, LastValue, Schema, StateTrack,
                     WindowMean, default_monroe_schema, dump_schema, parse_schema)
from .store import Bucket, GranularityLadder, SeriesStore, resample
from .timeutil import format_timestamp, parse_duration, parse_timestamp

__version__ = "0.1.0"

__all__ = [
    "AnomalyRegion", "BaselineParams", "Bucket", "DistParams", "EnrichmentRow",
    "FeatureSpec", "FleetBucket", "ForestParams", "GranularityLadder",
    "Instance", "Interpolate", "LabeledDataset", "LastValue", "LoadReport",
    "MeasurementRecord", "ParseError", "QrfModel", "RollingParams", "Schema",
    "SeriesStore", "StateTrack", "WindowMean", "benjamini_hochberg",
    "default_monroe_schema", "detect_baseline", "detect_distribution",
    "detect_rolling", "dump_model", "dump_schema", "enrichment_to_csv", "fit",
    "fleet_count", "format_timestamp", "hypergeom_tail", "instances_from_csv",
    "instances_to_csv", "kl_divergence", "label_instances", "load_model",
    "merge", "parse_duration", "parse_records", "parse_schema",
    "parse_timestamp", "permutation_test", "predict_quantile", "resample",
    "serialize_records", "significant_groups", "state_timeline",
    "welch_t_test",
]
