"""Error handling for raman-memory.

This module provides the exception hierarchy shared by the numerical modules and the
command-line surface, plus a helper that turns an exception into a structured report.
"""

from typing import Any, Literal, NotRequired, TypedDict

# Process exit status per error family
EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_THRESHOLD = 3


class ErrorDetails(TypedDict):
    """Type definition for error details in a report."""

    message: str
    code: str
    details: NotRequired[dict[str, Any]]


class ErrorReport(TypedDict):
    """Type definition for the structured failure report printed by the CLI."""

    status: Literal["error"]
    exit_code: int
    error: ErrorDetails
    command: NotRequired[str]


class RamanMemoryError(Exception):
    """Base class for all raman-memory exceptions."""

    exit_code = EXIT_NUMERIC

    def __init__(self, message: str, code: str = "INTERNAL_ERROR", details: dict[str, Any] | None = None):
        """Initialize RamanMemoryError.

        Args:
            message: Error message
            code: Error code
            details: Additional error details
        """
        super().__init__(message)
        self.message = message
        self.code = code
        self.details = details or {}


class DomainError(RamanMemoryError, ValueError):
    """Exception raised when an argument, grid, mesh or configuration is invalid."""

    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        """Initialize DomainError.

        Args:
            message: Error message
            details: Additional error details
        """
        super().__init__(message, "VALIDATION_ERROR", details)


class NumericalError(RamanMemoryError):
    """Exception raised when a solver fails or produces non-finite values."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        """Initialize NumericalError.

        Args:
            message: Error message
            details: Additional error details, typically the residual norm
        """
        super().__init__(message, "NUMERIC_ERROR", details)


class UnreachableShapeError(RamanMemoryError):
    """Exception raised when no control pulse reproduces the target wavepacket."""

    def __init__(self, message: str, best_overlap: float, details: dict[str, Any] | None = None):
        """Initialize UnreachableShapeError.

        Args:
            message: Error message
            best_overlap: Largest overlap found before giving up
            details: Additional error details
        """
        super().__init__(message, "UNREACHABLE_SHAPE", {"best_overlap": best_overlap, **(details or {})})
        self.best_overlap = best_overlap


class ThresholdError(RamanMemoryError):
    """Exception raised when an acceptance check exceeds its threshold."""

    exit_code = EXIT_THRESHOLD

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        """Initialize ThresholdError.

        Args:
            message: Error message
            details: Additional error details, typically the failed checks
        """
        super().__init__(message, "THRESHOLD_ERROR", details)


def create_error_report(error: RamanMemoryError, command: str | None = None) -> ErrorReport:
    """Create an ErrorReport from a RamanMemoryError.

    Args:
        error: The exception that occurred
        command: The subcommand that was running

    Returns:
        ErrorReport with error details and the exit status to use
    """
    error_details = ErrorDetails(message=error.message, code=error.code)
    if error.details:
        error_details["details"] = dict(error.details)

    report = ErrorReport(status="error", exit_code=error.exit_code, error=error_details)
    if command:
        report["command"] = command
    return report
