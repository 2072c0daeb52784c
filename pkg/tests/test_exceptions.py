"""Test exceptions module."""

import pytest

from osc_qft.exceptions import (
    ConfigError,
    DimensionError,
    IntegrationError,
    LeakageError,
    NumericalError,
    OscQFTError,
    PreconditionError,
    SupportError,
    SynthesisError,
)


def test_osc_qft_error():
    """Test base simulator error."""
    error = OscQFTError("Test error")
    assert str(error) == "Test error"
    assert error.message == "Test error"
    assert error.details is None
    assert error.exit_code == 1


def test_osc_qft_error_with_details():
    """Test simulator error with details."""
    error = OscQFTError("Test error", "Additional details")
    assert str(error) == "Test error - Additional details"
    assert error.details == "Additional details"


def test_config_error_location():
    """Test configuration error with field and line."""
    error = ConfigError("bad value", field="device.coupling_mhz", line=3)
    assert isinstance(error, OscQFTError)
    assert str(error) == "device.coupling_mhz: line 3: bad value"
    assert error.field == "device.coupling_mhz"
    assert error.line == 3
    assert error.exit_code == 2


def test_config_error_with_details():
    """Test configuration error without a location."""
    error = ConfigError("Unsupported format", details="use .toml or .json")
    assert str(error) == "Unsupported format - use .toml or .json"
    assert error.field is None
    assert error.line is None


def test_integration_error():
    """Test norm drift error message and attributes."""
    error = IntegrationError(1e-6, 1e-9)
    assert isinstance(error, NumericalError)
    assert str(error) == "Norm drift 1.000e-06 exceeds tolerance 1.000e-09"
    assert error.norm_drift == 1e-6
    assert error.tolerance == 1e-9
    assert error.exit_code == 3


def test_leakage_error():
    """Test truncation leakage error."""
    error = LeakageError(2.5e-5, 1e-6, "top level 11")
    assert isinstance(error, NumericalError)
    assert str(error) == "Truncation leakage 2.500e-05 exceeds tolerance 1.000e-06 - top level 11"
    assert error.leakage == 2.5e-5


@pytest.mark.parametrize("cls", [DimensionError, SupportError])
def test_precondition_subclasses(cls):
    """Test precondition errors share the exit code."""
    error = cls("outside")
    assert isinstance(error, PreconditionError)
    assert error.exit_code == 4


def test_synthesis_error():
    """Test guard-band collision error."""
    error = SynthesisError(("(1,+)->(2,-)", "(5,+)->(6,-)"), 3.0, 12.566)
    assert isinstance(error, PreconditionError)
    assert error.pair == ("(1,+)->(2,-)", "(5,+)->(6,-)")
    assert "(1,+)->(2,-)" in str(error)
    assert "(5,+)->(6,-)" in str(error)
    assert "12.57 rad/us guard band" in str(error)
    assert error.exit_code == 4
