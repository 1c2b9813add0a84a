"""Exception hierarchy shared by all qkicks modules."""


class QkicksError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(QkicksError, ValueError):
    """A parameter violates its precondition (wrong type, range or shape)."""


class OutOfBandError(InvalidParameterError):
    """A rotor point lies outside the band that fits on the sphere (|P| > j_r)."""


class InvariantViolationError(QkicksError):
    """A runtime invariant (norm, spectrum bound, |<J>| <= j) was broken."""


class NumericalError(QkicksError):
    """A computation produced non-finite values; carries the failing step."""


class CheckpointError(QkicksError):
    """Checkpoint file is corrupt, truncated mid-record, or malformed."""


class SpecMismatchError(CheckpointError):
    """Checkpoint header hash does not match the scan spec being resumed."""
