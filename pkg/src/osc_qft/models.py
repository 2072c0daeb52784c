"""Pydantic records emitted by the simulator pipelines."""

from datetime import datetime
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, computed_field


class BaseRecord(BaseModel):
    """Base model for all report records."""

    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
    )


class PropagationReport(BaseRecord):
    """Diagnostics of one numerical propagation."""

    duration_us: float = Field(..., ge=0, description="Propagated time (us)")
    steps: int = Field(..., ge=0, description="Number of integrator steps")
    step_us: float = Field(..., ge=0, description="Integrator step (us)")
    method: str = Field(..., description="Integrator scheme")
    norm_drift: float = Field(..., ge=0, description="Largest deviation of the norm from one")
    leakage: float = Field(default=0.0, ge=0, description="Largest top-level Fock population")
    convergence_overlap: Optional[float] = Field(
        None, description="Overlap between full-step and half-step results"
    )
    wall_clock_s: float = Field(default=0.0, ge=0, description="Elapsed wall-clock time (s)")
    warnings: List[str] = Field(default_factory=list, description="Non-fatal findings")


class StepReport(BaseRecord):
    """Outcome of one transfer step."""

    k: int = Field(..., ge=0, description="Active qubit index")
    backend: Literal["ideal", "dynamical"] = Field(..., description="Execution backend")
    omega_mhz: float = Field(..., description="Drive scale Omega/2pi (MHz)")
    duration_us: float = Field(..., ge=0, description="Drive window (us)")
    fidelity: float = Field(..., ge=0, le=1, description="Overlap with the ideal step map")
    raw_fidelity: float = Field(
        ..., ge=0, le=1, description="Overlap before the phase-frame correction"
    )
    qubit_excitation: float = Field(..., ge=0, description="Excited population of qubit k after the step")
    leakage: float = Field(default=0.0, ge=0, description="Largest top-level Fock population")
    correction_phases: Dict[int, float] = Field(
        default_factory=dict, description="Phase-frame correction per Fock level (rad)"
    )
    times_us: List[float] = Field(default_factory=list, description="Sample times (us)")
    populations: Dict[str, List[float]] = Field(
        default_factory=dict, description="Population time series per basis label"
    )
    propagation: Optional[PropagationReport] = Field(None, description="Integrator diagnostics")


class InverseReport(BaseRecord):
    """Outcome of a reverse transfer."""

    mode: Literal["recorded-adjoint", "physical"] = Field(..., description="Inverse scheme")
    compensated: bool = Field(..., description="Whether per-level pre-compensation was applied")
    residual_phases: Dict[str, float] = Field(
        default_factory=dict,
        description="Uncompensated phase picked up per basis string (rad)",
    )
    max_residual_phase: float = Field(default=0.0, ge=0, description="Largest |residual phase| (rad)")


class SweepRow(BaseRecord):
    """Analytic prediction next to a simulated value."""

    parameter: float = Field(..., description="Swept parameter value")
    analytic: float = Field(..., description="Analytic prediction")
    simulated: Optional[float] = Field(None, description="Simulated value")
    alternate: Optional[float] = Field(None, description="Second analytic reading, when defined")

    @computed_field  # type: ignore[prop-decorator]
    @property
    def relative_error(self) -> Optional[float]:
        if self.simulated is None or self.analytic == 0:
            return None
        return abs(self.simulated - self.analytic) / abs(self.analytic)


class MonteCarloSummary(BaseRecord):
    """Statistics over repeated noisy runs."""

    parameter: float = Field(..., description="Noise strength")
    repetitions: int = Field(..., ge=1, description="Number of draws")
    mean_fidelity: float = Field(..., description="Mean fidelity")
    std_fidelity: float = Field(..., ge=0, description="Standard deviation of the fidelity")
    excess_infidelity: float = Field(..., description="Mean infidelity above the noiseless baseline")
    predicted_infidelity: float = Field(..., description="Analytic infidelity (amplitude reading)")
    printed_infidelity: float = Field(..., description="Analytic infidelity (printed reading)")


class CoherenceBudget(BaseRecord):
    """Lifetime requirements implied by the protocol timing."""

    n: int = Field(..., ge=1, description="Number of qubits")
    q: int = Field(..., ge=2, description="Resonator dimension 2**n")
    tau1_us: float = Field(..., description="Transfer time (us)")
    tau2_us: float = Field(..., description="Kerr QFT time (us)")
    qubit_lifetime_us: float = Field(..., description="Required qubit lifetime (us)")
    photon_lifetime_us: float = Field(..., description="Required single-photon lifetime (us)")
    kerr_photon_lifetime_us: float = Field(
        ..., description="Single-photon lifetime needed during the Kerr stage (us)"
    )
    feasible: bool = Field(..., description="Within state-of-the-art lifetimes")


class EstimateResult(BaseRecord):
    """Photon-number readout of the phase-estimation pipeline."""

    n: int = Field(..., ge=1, description="Number of phase bits")
    theta: float = Field(..., description="True phase (rad)")
    distribution: List[float] = Field(..., description="Probability per photon number")
    outcome: int = Field(..., ge=0, description="Modal photon number")
    theta_hat: float = Field(..., description="Estimated phase 2*pi*outcome/q (rad)")
    error: float = Field(..., ge=0, description="Circular error |theta_hat - theta| (rad)")
    counts: List[int] = Field(default_factory=list, description="Sampled outcome counts")
    mode: Literal["ideal", "physical"] = Field(default="ideal", description="Mapping backend")
    success_probability: float = Field(default=1.0, description="Post-selection probability")


class ResourceComparison(BaseRecord):
    """Operation and ancilla inventory of three phase-estimation approaches."""

    n: int = Field(..., ge=1, description="Number of phase bits")
    conventional: int = Field(..., description="Operations, textbook circuit")
    recycling: int = Field(..., description="Operations, single recycled qubit")
    oscillator: int = Field(..., description="Operations, oscillator-based transform")
    ancillas: Dict[str, str] = Field(..., description="Ancilla inventory per approach")
    inventories: Dict[str, Dict[str, int]] = Field(..., description="Operation itemization per approach")


class RunRecord(BaseRecord):
    """Manifest of one command run."""

    command: str = Field(..., description="Subcommand name")
    seed: int = Field(..., description="Random seed")
    config: Dict[str, Any] = Field(..., description="Resolved configuration echo")
    reports: Dict[str, Any] = Field(default_factory=dict, description="Per-module summaries")
    outputs: List[str] = Field(default_factory=list, description="Files written by the run")
    versions: Dict[str, str] = Field(default_factory=dict, description="Package versions")
    started_at: datetime = Field(..., description="Start timestamp")
    finished_at: Optional[datetime] = Field(None, description="End timestamp")


class WignerGrid(BaseRecord):
    """Wigner function sampled on a rectangular phase-space grid."""

    x: List[float] = Field(..., description="Re(alpha) axis")
    p: List[float] = Field(..., description="Im(alpha) axis")
    values: List[List[float]] = Field(..., description="W[i_p][i_x]")
    top_population: float = Field(..., ge=0, description="Population of the top two Fock levels")
    truncated: bool = Field(default=False, description="Top-level population above the warning threshold")

    @computed_field  # type: ignore[prop-decorator]
    @property
    def integral(self) -> float:
        """Riemann sum of W over the grid."""
        if len(self.x) < 2 or len(self.p) < 2:
            return 0.0
        dx = (self.x[-1] - self.x[0]) / (len(self.x) - 1)
        dp = (self.p[-1] - self.p[0]) / (len(self.p) - 1)
        return float(sum(sum(row) for row in self.values) * dx * dp)


class QftRecord(BaseRecord):
    """Serializable outcome of one Kerr transform."""

    q: int = Field(..., ge=1, description="Transform size")
    direction: Literal["forward", "inverse"] = Field(..., description="Transform direction")
    tau_2_us: float = Field(..., ge=0, description="Kerr evolution time (us)")
    success_probability: float = Field(..., ge=0, le=1, description="Post-selection probability")
    oracle_fidelity: float = Field(..., ge=0, le=1, description="Overlap with the brute-force DFT")
    amplitudes: List[Tuple[float, float]] = Field(..., description="(re, im) of B per Fock index")
    vacuum_population: Optional[float] = Field(None, description="A vacuum population after disentangling")
