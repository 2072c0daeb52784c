"""Exception classes for the oscillator QFT simulator."""

from typing import Optional, Tuple


class OscQFTError(Exception):
    """Base exception for all simulator errors."""

    exit_code: int = 1

    def __init__(self, message: str, details: Optional[str] = None):
        """Initialize the exception.

        Args:
            message: Error message
            details: Additional error details
        """
        super().__init__(message)
        self.message = message
        self.details = details

    def __str__(self) -> str:
        """Return string representation."""
        if self.details:
            return f"{self.message} - {self.details}"
        return self.message


class ConfigError(OscQFTError):
    """Exception raised when a scenario configuration is invalid."""

    exit_code = 2

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        line: Optional[int] = None,
        details: Optional[str] = None,
    ):
        """Initialize the exception.

        Args:
            message: Error message
            field: Dotted path of the offending field
            line: Line number in the configuration file, when known
            details: Additional error details
        """
        super().__init__(message, details)
        self.field = field
        self.line = line

    def __str__(self) -> str:
        """Return string representation."""
        base = self.message
        if self.line is not None:
            base = f"line {self.line}: {base}"
        if self.field:
            base = f"{self.field}: {base}"
        if self.details:
            return f"{base} - {self.details}"
        return base


class NumericalError(OscQFTError):
    """Exception raised when a numerical result cannot be trusted."""

    exit_code = 3


class IntegrationError(NumericalError):
    """Exception raised when time propagation drifts off the unit sphere."""

    def __init__(self, norm_drift: float, tolerance: float, details: Optional[str] = None):
        """Initialize the exception.

        Args:
            norm_drift: Observed deviation of the norm from one
            tolerance: Allowed deviation for the propagated duration
            details: Additional error details
        """
        message = f"Norm drift {norm_drift:.3e} exceeds tolerance {tolerance:.3e}"
        super().__init__(message, details)
        self.norm_drift = norm_drift
        self.tolerance = tolerance


class LeakageError(NumericalError):
    """Exception raised when population reaches the truncation edge."""

    def __init__(self, leakage: float, tolerance: float, details: Optional[str] = None):
        """Initialize the exception.

        Args:
            leakage: Largest population observed in the top Fock level
            tolerance: Allowed population
            details: Additional error details
        """
        message = f"Truncation leakage {leakage:.3e} exceeds tolerance {tolerance:.3e}"
        super().__init__(message, details)
        self.leakage = leakage
        self.tolerance = tolerance


class PreconditionError(OscQFTError):
    """Exception raised when an operation is called outside its domain."""

    exit_code = 4


class DimensionError(PreconditionError):
    """Exception raised for out-of-range occupations or mismatched spaces."""
    pass


class SupportError(PreconditionError):
    """Exception raised when a state has weight outside the supported subspace."""
    pass


class SynthesisError(PreconditionError):
    """Exception raised when two drive components fall inside the guard band."""

    def __init__(
        self,
        pair: Tuple[str, str],
        separation: float,
        guard_band: float,
        details: Optional[str] = None,
    ):
        """Initialize the exception.

        Args:
            pair: Labels of the colliding drive components
            separation: Angular frequency separation of the pair (rad/us)
            guard_band: Required minimum separation (rad/us)
            details: Additional error details
        """
        message = (
            f"Drive components {pair[0]} and {pair[1]} are {separation:.4g} rad/us apart,"
            f" inside the {guard_band:.4g} rad/us guard band"
        )
        super().__init__(message, details)
        self.pair = pair
        self.separation = separation
        self.guard_band = guard_band
