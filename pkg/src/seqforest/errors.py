"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid sizes, parameters or config fields."""


class DomainError(ValueError):
    """An operation was called outside its domain (empty input, zero totals, ...)."""


class DatasetError(ValueError):
    """Base class for problems reading a tabular dataset."""


class SchemaError(DatasetError):
    pass


class ParseError(DatasetError):
    pass


class LabelError(DatasetError):
    pass


class PoolExhaustedError(RuntimeError):
    """The candidate pool has no samples left to acquire."""


class AggregationError(ValueError):
    """Run results with incompatible shapes were aggregated together."""
