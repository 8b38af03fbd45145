"""Exception types raised by the simulator."""


class FeesimError(Exception):
    """Base class for all package errors."""


class MalformedRecordError(FeesimError):
    """A snapshot record is missing a field or holds an invalid value."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptySnapshotError(FeesimError):
    """The snapshot file contains no channel records."""


class MalformedLineError(FeesimError):
    """A merchants file line is not a valid node id."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ManualSumMismatchError(FeesimError):
    """Manually assigned balances do not sum to the channel capacity."""


class UnknownCenterError(FeesimError):
    """The requested center node is not present in the graph."""


class NodeHasNoChannelsError(FeesimError):
    """The center node has no channels after localization."""


class NoEligibleReceiverError(FeesimError):
    """No receiver can be sampled (the graph has fewer than two nodes)."""


class StaleRouteError(FeesimError):
    """A balance changed since routing and the route is no longer well funded."""


class DimensionMismatchError(FeesimError):
    """An action or report vector has the wrong length."""


class ConfigError(FeesimError):
    """Invalid or inconsistent run configuration."""
