"""Tests for the error handling module."""

from raman_memory.errors import (
    DomainError,
    NumericalError,
    RamanMemoryError,
    ThresholdError,
    UnreachableShapeError,
    create_error_report,
)


def test_base_error():
    """Test the base error class."""
    error = RamanMemoryError("Test error")
    assert str(error) == "Test error"
    assert error.code == "INTERNAL_ERROR"
    assert error.details == {}
    assert error.exit_code == 2

    error_with_details = RamanMemoryError("Test error", "TEST_CODE", {"key": "value"})
    assert error_with_details.code == "TEST_CODE"
    assert error_with_details.details == {"key": "value"}


def test_domain_error():
    """Test the domain error class."""
    error = DomainError("Bad grid", {"n": 0})
    assert str(error) == "Bad grid"
    assert error.code == "VALIDATION_ERROR"
    assert error.details == {"n": 0}
    assert error.exit_code == 1
    assert isinstance(error, ValueError)


def test_numerical_error():
    """Test the numerical error class."""
    error = NumericalError("SVD failed")
    assert error.code == "NUMERIC_ERROR"
    assert error.details == {}
    assert error.exit_code == 2


def test_unreachable_shape_error():
    """Test that the best overlap is kept on the error and in its details."""
    error = UnreachableShapeError("No control found", 0.7, {"target": "gaussian"})
    assert error.code == "UNREACHABLE_SHAPE"
    assert error.best_overlap == 0.7
    assert error.details == {"best_overlap": 0.7, "target": "gaussian"}


def test_threshold_error():
    """Test the threshold error class."""
    error = ThresholdError("2 checks failed", {"failed": {"oracle_cw": 0.1}})
    assert error.code == "THRESHOLD_ERROR"
    assert error.exit_code == 3


def test_create_error_report():
    """Test creating a structured error report."""
    report = create_error_report(DomainError("Bad config", {"fields": {"readin.c": "must be > 0"}}), "readin")
    assert report == {
        "status": "error",
        "exit_code": 1,
        "error": {"message": "Bad config", "code": "VALIDATION_ERROR", "details": {"fields": {"readin.c": "must be > 0"}}},
        "command": "readin",
    }


def test_create_error_report_without_details():
    """Test that empty details and a missing command are omitted."""
    report = create_error_report(NumericalError("Solver diverged"))
    assert report == {"status": "error", "exit_code": 2, "error": {"message": "Solver diverged", "code": "NUMERIC_ERROR"}}
