"""Exception hierarchy shared across the toolkit."""


class MbbMinerError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(MbbMinerError):
    """Invalid schema document or feature specification."""


class SchemaMismatch(MbbMinerError):
    """Records do not conform to the store's schema."""


class StorageIO(MbbMinerError):
    """Store directory missing, corrupt, or unwritable."""


class LevelNotCoarser(MbbMinerError):
    """Resample target level is not a coarser ladder level."""


class UnsortedInput(MbbMinerError):
    """A sequence that must be sorted by timestamp is not."""


class UnknownKey(MbbMinerError):
    """Queried node/interface/feature is not in the store."""


class MissingGeoFeatures(MbbMinerError):
    """Geographic selection requested without position features."""


class StrategyKindMismatch(MbbMinerError):
    """Merge strategy incompatible with the feature kind."""


class TooFewPoints(MbbMinerError):
    """Series too short for the requested detector."""


class SegmentTooSmall(MbbMinerError):
    """Distribution segment below the minimum sample size."""


class InsufficientData(MbbMinerError):
    """Not enough usable instances to fit a model."""


class NoUsableFeatures(MbbMinerError):
    """No context feature carries any non-null value."""


class UnfittedModel(MbbMinerError):
    """Prediction requested from a model that was never fitted."""


class InvalidCounts(MbbMinerError):
    """Hypergeometric counts violate k <= n <= N, k <= K <= N."""


class NoAnomalousInstances(MbbMinerError):
    """Enrichment requested on a dataset without anomalous labels."""


class InvalidR(MbbMinerError):
    """Permutation replicate count below 1."""


class DegenerateGroups(MbbMinerError):
    """Both t-test groups have zero variance."""
