"""Oscillator QFT - a simulator for the resonator-based quantum Fourier transform."""

__version__ = "0.1.0"
__author__ = "Oscillator QFT Team"
__description__ = "Numerical simulator for the oscillator-based quantum Fourier transform protocol"

# Import main components for easier access
from .config import ScenarioConfig
from .exceptions import (
    OscQFTError,
    ConfigError,
    NumericalError,
    IntegrationError,
    LeakageError,
    PreconditionError,
    DimensionError,
    SupportError,
    SynthesisError,
)
from .hilbert import (
    CompositeSpace,
    DensityMatrix,
    FockSpace,
    QubitRegister,
    StateVector,
)
from .dynamics import DeviceParams, DressedBasis, PropagationConfig
from .drives import DrivePulse, occupied_photon_numbers
from .transfer import TransferPlan, TransferSimulator, build_plan
from .kerr import KerrConfig, run_qft, wigner_grid
from .phase_estimation import PhaseScenario, resource_counts, run_phase_estimation
from .runner import ScenarioRunner, create_runner

__all__ = [
    # Version info
    "__version__",
    "__author__",
    "__description__",

    # Configuration
    "ScenarioConfig",

    # Exceptions
    "OscQFTError",
    "ConfigError",
    "NumericalError",
    "IntegrationError",
    "LeakageError",
    "PreconditionError",
    "DimensionError",
    "SupportError",
    "SynthesisError",

    # State spaces
    "CompositeSpace",
    "DensityMatrix",
    "FockSpace",
    "QubitRegister",
    "StateVector",

    # Dynamics and drives
    "DeviceParams",
    "DressedBasis",
    "PropagationConfig",
    "DrivePulse",
    "occupied_photon_numbers",

    # Protocol stages
    "TransferPlan",
    "TransferSimulator",
    "build_plan",
    "KerrConfig",
    "run_qft",
    "wigner_grid",
    "PhaseScenario",
    "resource_counts",
    "run_phase_estimation",

    # Runner
    "ScenarioRunner",
    "create_runner",
]
