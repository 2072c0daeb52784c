"""Shared fixtures."""

import math
import os

import pytest
import structlog

from osc_qft.dynamics import DeviceParams, PropagationConfig

TWO_PI = 2 * math.pi


@pytest.fixture(autouse=True)
def _reset_logging():
    """CLI tests reconfigure structlog against captured streams; undo that after each test."""
    yield
    structlog.reset_defaults()


@pytest.fixture
def clean_env(monkeypatch):
    """Remove every OSC_QFT_ variable from the environment."""
    for key in list(os.environ.keys()):
        if key.startswith("OSC_QFT_"):
            monkeypatch.delenv(key, raising=False)


@pytest.fixture
def params():
    """Device with a 2 GHz resonator so dynamical tests stay short."""
    return DeviceParams(
        omega_A=TWO_PI * 2000.0,
        omega_B=TWO_PI * 2500.0,
        g=TWO_PI * 200.0,
        chi_AB=-TWO_PI * 0.05,
    )


@pytest.fixture
def omega():
    return TWO_PI * 0.2


@pytest.fixture
def propagation():
    return PropagationConfig(samples=50)
