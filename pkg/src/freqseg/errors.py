"""Exception types shared across the package."""


class FreqsegError(Exception):
    """Base class for all contract violations raised by this package."""


class ShapeError(FreqsegError):
    """Operands have incompatible shapes."""


class ContractError(FreqsegError):
    """An operation was called outside its contract (e.g. backward on a non-scalar)."""


class NumericalError(FreqsegError):
    """Non-finite values appeared where finite ones are required."""


class ConfigError(FreqsegError):
    """Invalid or inconsistent configuration values."""


class BoundaryError(FreqsegError):
    """Segment boundaries are malformed (unordered, duplicated, or out of range)."""


class FormatError(FreqsegError):
    """A serialized file does not conform to its format (bad magic, truncation, checksum)."""


class ClusteringError(FreqsegError):
    """Clustering indices are undefined for the given labelling (fewer than two classes)."""
