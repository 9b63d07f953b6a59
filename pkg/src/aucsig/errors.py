"""Exception hierarchy shared across the package.

CLI exit-code mapping: SizeGuardError exits 3, every other SignalingError
exits 2.
"""


class SignalingError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SignalingError):
    """Malformed instance, scheme, prior or parameter set."""


class MatroidViolation(ValidationError):
    """A winner mapping is dependent in the truncated partition matroid."""


class ZeroProbabilitySignal(SignalingError):
    """A conditional value was queried for a signal with x(s) = 0."""


class SizeGuardError(SignalingError):
    """A combinatorial budget (enumeration size, field size) was exceeded."""


class DegenerateInstance(SignalingError):
    """An algorithm precondition failed in a degenerate way, e.g. welfare 0."""


class UnsupportedConstraint(SignalingError):
    """Operation requires a complete bipartite graph but got a sparse one."""


class MalformedSignal(SignalingError):
    """A serialized signal could not be decoded."""
