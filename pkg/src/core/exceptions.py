"""Exception hierarchy. Every error carries the CLI exit code it maps to."""


class AttackCircuitError(Exception):
    """Base class for data errors raised by the engine."""

    exit_code = 1


class ConfigError(AttackCircuitError):
    """Raised when the run configuration or CLI usage is invalid."""

    exit_code = 2


class FeedParseError(AttackCircuitError):
    """Raised when an NVD feed is not valid JSON."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class EmptyFeedError(AttackCircuitError):
    """Raised when a feed holds no item with both an English description and CVSS v3."""


class CatalogError(AttackCircuitError):
    """Raised when the device catalog is malformed or empty."""


class TrafficFormatError(AttackCircuitError):
    """Raised when a traffic CSV does not have the expected layout."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"{message} (row {row})")
        self.row = row


class DegenerateCircuitError(AttackCircuitError):
    """Raised when a circuit has no entry points or no sinks."""


class InfeasibleFlowError(AttackCircuitError):
    """Raised when a required flow exceeds the maximum feasible flow."""

    def __init__(self, required: int, max_feasible: int):
        super().__init__(
            f"Required flow {required} is infeasible; maximum feasible flow is {max_feasible}"
        )
        self.required = required
        self.max_feasible = max_feasible


class FlowInvariantError(AttackCircuitError):
    """Raised when a solver returns an assignment violating capacity or conservation."""


class MissingArtifactError(AttackCircuitError):
    """Raised when a command needs an artifact an earlier command did not produce."""
