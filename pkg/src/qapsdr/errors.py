"""Exception types shared across the package."""


class QapError(Exception):
    """Base class for all package errors."""


class InvalidInput(QapError, ValueError):
    """Raised when an argument violates a documented precondition."""


class SizeLimit(QapError, ValueError):
    """Raised when a requested dense object exceeds the configured budget."""


class KernelMismatch(QapError, ValueError):
    """Raised when a vector claimed to span a kernel direction does not.

    Carries the measured residual so callers can report how far off the
    claim was.
    """

    def __init__(self, residual, limit):
        self.residual = float(residual)
        self.limit = float(limit)
        super().__init__(
            f"kernel residual {self.residual:.3e} exceeds limit {self.limit:.3e}"
        )


class InvariantViolation(QapError, AssertionError):
    """Raised when a construction fails one of its own algebraic identities."""

    def __init__(self, identity, residual):
        self.identity = identity
        self.residual = float(residual)
        super().__init__(f"identity '{identity}' violated, residual {self.residual:.3e}")


class WindowViolation(QapError, ValueError):
    """Raised when a spectral shift parameter falls outside its valid window."""

    def __init__(self, value, low, high):
        self.value = float(value)
        self.low = float(low)
        self.high = float(high)
        super().__init__(
            f"parameter {self.value:.6g} outside the open window ({self.low:.6g}, {self.high:.6g})"
        )


# Unwritable output paths surface as the built-in OSError; kept under a
# package-local name so call sites can reference one symbol.
IoError = OSError
