"""Exception types shared across the package."""


class BlfTrackError(Exception):
    """Base class for all package errors."""


class ConstraintBreachError(BlfTrackError):
    """A tracking error reached its constraint radius; the run is invalid.

    Carries the breach time, the offending joint (0-based) and the error
    value.  ``trace`` holds the partial trace up to the last valid record
    when the breach happened inside a simulation run.
    """

    def __init__(self, time: float, joint: int, value: float, trace=None):
        self.time = time
        self.joint = joint
        self.value = value
        self.trace = trace
        super().__init__(
            f"tracking error constraint breached at t={time:.6g} s on joint "
            f"{joint + 1} (|e|={abs(value):.6g} rad)"
        )


class NonFiniteError(BlfTrackError):
    """A state or derivative became NaN/inf during integration."""

    def __init__(self, time: float, trace=None):
        self.time = time
        self.trace = trace
        super().__init__(f"non-finite state encountered at t={time:.6g} s")


class SingularMassError(BlfTrackError):
    """The inertia matrix solve failed (invalid parameter vector)."""


class ConfigError(BlfTrackError):
    """A scenario config failed to parse or violated a validity rule."""


class TraceParseError(BlfTrackError):
    """A trace CSV file is malformed."""


class UnknownParameterError(BlfTrackError):
    """Sweep was asked to vary a parameter outside the whitelist."""
