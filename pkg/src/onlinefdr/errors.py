"""Exception types shared across the package."""


class OnlineFdrError(Exception):
    """Base class for all package errors."""


class InvalidPValue(OnlineFdrError):
    """Submitted p-value outside [0, 1]."""


class InvalidParams(OnlineFdrError):
    """Configuration or parameter outside its documented range."""


class NegativeInput(OnlineFdrError):
    """Negative value passed where a nonnegative one is required."""


class BudgetViolation(OnlineFdrError):
    """Penalty phi_t exceeds the available wealth budget."""


class RewardViolation(OnlineFdrError):
    """Reward psi_t exceeds the admissible reward cap."""


class ResetNotAllowed(OnlineFdrError):
    """reset() called on a stream that does not satisfy the reset condition."""


class NonPositiveWeight(OnlineFdrError):
    """Weight stream emitted w <= 0 or u <= 0."""


class GridMismatch(OnlineFdrError):
    """Trial trajectories have different checkpoint grids."""


class SnapshotError(OnlineFdrError):
    """Base class for snapshot encode/decode failures."""


class VersionMismatch(SnapshotError):
    """Snapshot format version not supported."""


class ParseError(SnapshotError):
    """Snapshot bytes are corrupt or not in the expected layout."""


class ConfigError(OnlineFdrError):
    """Invalid run/suite configuration; message names the offending field."""
