"""Phase estimation with the oscillator inverse transform.

U enters only through the kickback phase exp(i 2^k theta) on a single
ancilla. After every kickback the ancilla excitation is mapped into
resonator A as 2^k photons, so A ends in sum_m exp(i m theta)|m>/sqrt(q).
The inverse Kerr transform then localizes the estimate in B.
"""

import math
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .drives import occupied_photon_numbers
from .exceptions import DimensionError, PreconditionError, SupportError
from .hilbert import (
    CompositeSpace,
    FockSpace,
    QubitRegister,
    StateVector,
    apply_local,
    fock_populations,
    project,
    tensor,
)
from .kerr import KerrConfig, run_qft
from .models import EstimateResult, ResourceComparison
from .transfer import TransferSimulator, ideal_step_unitary

logger = structlog.get_logger(__name__)

Mode = Literal["ideal", "physical"]

SUPPORT_TOLERANCE = 1e-3


class PhaseScenario(BaseModel):
    """Unknown phase and register size."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    theta: float = Field(..., description="Phase of U (rad), reduced mod 2 pi")
    n: int = Field(..., ge=1, description="Phase bits")
    mode: Mode = Field(default="ideal")
    trials: int = Field(default=0, ge=0, description="Sampled photon-number readouts")

    @field_validator("theta")
    @classmethod
    def _reduce(cls, v: float) -> float:
        return math.fmod(math.fmod(v, 2 * math.pi) + 2 * math.pi, 2 * math.pi)

    @property
    def q(self) -> int:
        return 2**self.n


def build_phase_state(theta: float, q: int, dim: Optional[int] = None) -> StateVector:
    """(1/sqrt q) sum_{m<q} exp(i m theta)|m>_A."""
    if q < 2:
        raise DimensionError("Phase register needs q >= 2")
    dim = dim or q
    if dim < q:
        raise DimensionError(f"A truncation {dim} below q = {q}")
    amps = np.zeros(dim, dtype=complex)
    amps[:q] = np.exp(1j * theta * np.arange(q)) / math.sqrt(q)
    return StateVector(space=CompositeSpace.of(FockSpace(dim=dim, label="A")), amplitudes=amps)


def kickback_ancilla(theta: float, k: int) -> StateVector:
    """(|0> + exp(i 2^k theta)|1>)/sqrt 2 on the ancilla register ``a``."""
    amps = np.array([1.0, np.exp(1j * 2**k * theta)], dtype=complex) / math.sqrt(2)
    return StateVector(space=CompositeSpace.of(QubitRegister(n=1, label="a")), amplitudes=amps)


def ancilla_map_step(
    joint: StateVector,
    k: int,
    n: int,
    simulator: Optional[TransferSimulator] = None,
) -> StateVector:
    """|1>_a|m>_A -> |0>_a|m + 2^k>_A on a joint state holding A and ancilla ``a0``.

    A must be supported on the photon numbers reachable before step k. With a
    simulator the dynamical step of the transfer plan is applied instead of
    the exact map.
    """
    occupied = set(occupied_photon_numbers(n, k).photons)
    pops = fock_populations(joint, "A")
    outside = float(sum(p for m, p in enumerate(pops) if m not in occupied))
    if outside > SUPPORT_TOLERANCE:
        raise SupportError(
            f"Resonator A has population {outside:.3e} outside the step-{k} support",
            f"allowed photon numbers {sorted(occupied)}",
        )
    if simulator is not None:
        return simulator.apply_step(joint, k, "a0")
    dim_a = joint.space.factor("A").dim
    return apply_local(joint, ideal_step_unitary(k, n, dim_a), ["A", "a0"])


def encode_phase(
    theta: float, n: int, simulator: Optional[TransferSimulator] = None
) -> Tuple[StateVector, float]:
    """Kickback and ancilla mapping for k = n-1 ... 0.

    Returns A's state and the probability that the ancilla was found in its
    ground state after every mapping.
    """
    dim_a = simulator.dim_A if simulator is not None else 2**n
    a_state = StateVector(
        space=CompositeSpace.of(FockSpace(dim=dim_a, label="A")),
        amplitudes=np.eye(dim_a)[0],
    )
    ground = np.array([1.0, 0.0], dtype=complex)
    survival = 1.0
    for k in range(n - 1, -1, -1):
        joint = ancilla_map_step(tensor(a_state, kickback_ancilla(theta, k)), k, n, simulator)
        reset = project(joint, "a", ground)
        if reset.state is None:
            raise PreconditionError(f"Ancilla never returned to ground after step {k}")
        survival *= reset.probability
        a_state = reset.state
    return a_state, survival


def closed_form_distribution(theta: float, q: int) -> np.ndarray:
    """|sum_m exp(i m (theta - 2 pi j/q))|^2 / q^2 for j < q."""
    m = np.arange(q)
    j = np.arange(q)[:, None]
    amps = np.exp(1j * m[None, :] * (theta - 2 * np.pi * j / q)).sum(axis=1) / q
    return np.abs(amps) ** 2


def circular_error(a: float, b: float) -> float:
    d = math.fmod(abs(a - b), 2 * math.pi)
    return min(d, 2 * math.pi - d)


def run_phase_estimation(
    scenario: PhaseScenario,
    kerr: KerrConfig,
    simulator: Optional[TransferSimulator] = None,
    seed: int = 0,
) -> EstimateResult:
    """Encode theta in A, apply the inverse Kerr transform and read B's photon number."""
    if kerr.direction != "inverse":
        kerr = kerr.model_copy(update={"direction": "inverse"})
    if scenario.mode == "physical" and simulator is None:
        raise PreconditionError("Physical phase estimation needs a transfer simulator")
    q = scenario.q
    a_state, survival = encode_phase(
        scenario.theta, scenario.n, simulator if scenario.mode == "physical" else None
    )
    result = run_qft(a_state, kerr, q)
    if result.b_state is None:
        raise PreconditionError("Post-selection on A has zero probability")
    distribution = np.abs(result.b_state.amplitudes) ** 2
    distribution = distribution / distribution.sum()
    outcome = int(np.argmax(distribution))
    theta_hat = 2 * math.pi * outcome / q
    counts: List[int] = []
    if scenario.trials:
        rng = np.random.default_rng(seed)
        counts = [int(c) for c in rng.multinomial(scenario.trials, distribution)]
    estimate = EstimateResult(
        n=scenario.n,
        theta=scenario.theta,
        distribution=[float(p) for p in distribution],
        outcome=outcome,
        theta_hat=theta_hat,
        error=circular_error(theta_hat, scenario.theta),
        counts=counts,
        mode=scenario.mode,
        success_probability=survival * result.probability,
    )
    logger.info(
        "phase_estimate_done",
        n=scenario.n,
        mode=scenario.mode,
        outcome=outcome,
        probability=float(distribution[outcome]),
    )
    return estimate


def resource_counts(n: int) -> ResourceComparison:
    """Operation totals n(n+7)/2, 6n-2 and 5n+1 with their itemization."""
    if n < 1:
        raise DimensionError("n must be >= 1")
    inventories: Dict[str, Dict[str, int]] = {
        "conventional": {
            "hadamard": 2 * n,
            "two_qubit": n * (n - 1) // 2,
            "measurement": n,
            "controlled_u": n,
        },
        "recycling": {
            "hadamard": 2 * n,
            "measurement": n,
            "feedforward_rotation": n - 1,
            "reset": n - 1,
            "controlled_u": n,
        },
        "oscillator": {
            "hadamard": n,
            "state_transfer": 2 * n,
            "qubit_measurement": n,
            "photon_measurement": 1,
            "controlled_u": n,
        },
    }
    totals = {name: sum(items.values()) for name, items in inventories.items()}
    return ResourceComparison(
        n=n,
        conventional=totals["conventional"],
        recycling=totals["recycling"],
        oscillator=totals["oscillator"],
        ancillas={
            "conventional": f"{n} qubits",
            "recycling": "1 qubit",
            "oscillator": "1 qubit, 2 resonators",
        },
        inventories=inventories,
    )
