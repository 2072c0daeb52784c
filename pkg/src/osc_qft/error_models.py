"""Analytic timing-jitter and level-fluctuation models, with Monte-Carlo checks."""

import math
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .drives import chain_hamiltonian
from .dynamics import PropagationConfig
from .exceptions import DimensionError, PreconditionError
from .hilbert import overlap_fidelity
from .models import CoherenceBudget, MonteCarloSummary
from .transfer import TransferPlan, TransferSimulator, transfer_input, transfer_target

logger = structlog.get_logger(__name__)

Reading = Literal["printed", "amplitude"]

BIT0_CHAIN = 3
NONZERO_WEIGHT = 1e-14
MC_MAX_QUBITS = 2

# Nominal device figures used by the coherence budget
STEP_TIME_US = 0.3
KERR_CHI_KHZ = 50.0
QUBIT_LIFETIME_LIMIT_US = 50.0
PHOTON_LIFETIME_LIMIT_US = 10_000.0


class PathDecomposition(BaseModel):
    """Chain node counts travelled by every supported basis string."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(..., ge=1)
    chains: Dict[str, List[int]] = Field(..., description="Node counts, highest bit first")
    weights: Dict[str, float] = Field(..., description="|c_b|^2 per basis string")

    @model_validator(mode="after")
    def _check(self) -> "PathDecomposition":
        if set(self.chains) != set(self.weights):
            raise ValueError("Chains and weights must cover the same basis strings")
        return self


class JitterModel(BaseModel):
    """Drive window t0 + delta_t."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    delta_t: float = Field(..., description="Timing jitter (us)")
    t0: float = Field(..., gt=0, description="Nominal window pi/Omega (us)")

    @model_validator(mode="after")
    def _check(self) -> "JitterModel":
        if abs(self.delta_t) >= self.t0:
            raise ValueError("|delta_t| must be smaller than t0")
        return self

    @property
    def ratio(self) -> float:
        return self.delta_t / self.t0


class EnergyFluctModel(BaseModel):
    """Static level shift delta_E over a round trip of 2 t0."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    delta_e: float = Field(..., ge=0, description="Level fluctuation (rad/us)")
    t0: float = Field(..., gt=0, description="Nominal window pi/Omega (us)")

    @model_validator(mode="after")
    def _check(self) -> "EnergyFluctModel":
        if 2 * self.t0 * self.delta_e >= 1:
            raise ValueError("2 t0 delta_E must stay below 1")
        return self

    @property
    def product(self) -> float:
        return self.t0 * self.delta_e


def chains_for(bits: str) -> List[int]:
    """Set bit k >= 1 travels a 2^k-node chain, bit 0 a 3-node chain."""
    n = len(bits)
    out = []
    for k in range(n - 1, -1, -1):
        if bits[n - 1 - k] == "1":
            out.append(2**k if k >= 1 else BIT0_CHAIN)
    return out


def decompose_paths(amplitudes: Sequence[complex]) -> PathDecomposition:
    c = np.asarray(amplitudes, dtype=complex)
    n = int(round(math.log2(c.size))) if c.size else 0
    if c.size < 2 or 2**n != c.size:
        raise DimensionError(f"Amplitude count {c.size} is not a power of two >= 2")
    weights = np.abs(c) ** 2
    if abs(weights.sum() - 1) > 1e-6:
        raise PreconditionError("Amplitudes are not normalized", f"sum |c|^2 = {weights.sum():.9f}")
    chains, kept = {}, {}
    for value in range(c.size):
        if weights[value] <= NONZERO_WEIGHT:
            continue
        bits = format(value, f"0{n}b")
        chains[bits] = chains_for(bits)
        kept[bits] = float(weights[value])
    return PathDecomposition(n=n, chains=chains, weights=kept)


def uniform_decomposition(n: int) -> PathDecomposition:
    return decompose_paths(np.full(2**n, 1 / math.sqrt(2**n)))


def chain_fidelity(node_count: int, t: float, omega: float) -> float:
    """sin(Omega t/2)^(2(N-1))."""
    if node_count < 2:
        raise PreconditionError("A transfer chain needs at least two nodes")
    if t < 0:
        raise PreconditionError("Time must be non-negative")
    return math.sin(omega * t / 2) ** (2 * (node_count - 1))


def chain_infidelity(node_count: int, t: float, omega: float) -> float:
    """1 - chain_fidelity without cancellation for t close to pi/Omega."""
    if node_count < 2:
        raise PreconditionError("A transfer chain needs at least two nodes")
    s = abs(math.sin(omega * t / 2))
    if s == 0:
        return 1.0
    return -math.expm1(2 * (node_count - 1) * math.log(s))


def chain_fidelity_jitter(node_count: int, delta_t: float, t0: float) -> float:
    """1 - ((N-1) pi^2/4)(delta_t/t0)^2."""
    x = delta_t / t0
    if abs(x) > 0.1:
        raise PreconditionError(f"Jitter ratio {x:.3g} outside the quadratic regime |x| <= 0.1")
    return 1 - (node_count - 1) * math.pi**2 / 4 * x**2


def transfer_fidelity_jitter(
    decomposition: PathDecomposition,
    delta_t: float,
    t0: float,
    reading: Reading = "printed",
) -> float:
    """Aggregate fidelity over the supported strings.

    ``printed`` weights each string by the squared product of its chain
    fidelities. ``amplitude`` treats each chain fidelity as a population and
    returns |sum_b |c_b|^2 prod sqrt(F)|^2, the overlap a coherent simulation
    measures.
    """
    omega = math.pi / t0
    t = t0 + delta_t
    if reading == "printed":
        total = 0.0
        for bits, chains in decomposition.chains.items():
            prod = math.prod(chain_fidelity(c, t, omega) for c in chains)
            total += decomposition.weights[bits] * prod**2
        return total
    amp = 0.0
    for bits, chains in decomposition.chains.items():
        amp += decomposition.weights[bits] * math.prod(
            math.sqrt(chain_fidelity(c, t, omega)) for c in chains
        )
    return amp**2


def exact_jitter_coefficient(n: int) -> float:
    """Quadratic coefficient of the printed aggregate for the uniform state, (pi^2/4)(2^n - n + 1)."""
    if n < 1:
        raise DimensionError("n must be >= 1")
    return math.pi**2 / 4 * (2**n - n + 1)


def uniform_jitter_approx(n: int, delta_t: float, t0: float) -> float:
    """1 - (pi^2/2^(n+1)) [2^n - (n-1)] (2^n - 1)/n (delta_t/t0)^2."""
    if n < 1:
        raise DimensionError("n must be >= 1")
    x = delta_t / t0
    if abs(x) > 0.05:
        raise PreconditionError(f"Jitter ratio {x:.3g} outside |x| <= 0.05")
    q = 2**n
    return 1 - math.pi**2 / 2 ** (n + 1) * (q - (n - 1)) * (q - 1) / n * x**2


def energy_fidelity(node_count: int, delta_e: float, t0: float) -> float:
    """Round-trip fidelity 1 - 2 t0 delta_E of one chain."""
    if node_count < 2:
        raise PreconditionError("A transfer chain needs at least two nodes")
    model = EnergyFluctModel(delta_e=delta_e, t0=t0)
    return 1 - 2 * model.product


def aggregate_energy_fidelity(n: int, delta_e: float, t0: float) -> Tuple[float, float]:
    """(exact [1 + (1 - 2 t0 dE)^2]^n / 2^n, approximation 1 - n t0 dE)."""
    if n < 1:
        raise DimensionError("n must be >= 1")
    x = EnergyFluctModel(delta_e=delta_e, t0=t0).product
    exact = (1 + (1 - 2 * x) ** 2) ** n / 2**n
    return exact, 1 - n * x


def monte_carlo_jitter(
    plan: TransferPlan,
    delta_t: float,
    repetitions: int,
    seed: int = 0,
    amplitudes: Optional[Sequence[complex]] = None,
    config: Optional[PropagationConfig] = None,
    baseline: Optional[TransferSimulator] = None,
) -> MonteCarloSummary:
    """Dynamical transfers with every window drawn as t0 +- delta_t.

    Each draw picks one sign per step from a seeded generator. The mean
    infidelity above the delta_t = 0 run is compared with both analytic
    readings. The phase frame is recalibrated for every window, so only the
    population error of the chains enters.
    """
    if plan.n > MC_MAX_QUBITS:
        raise PreconditionError(f"Monte-Carlo jitter is limited to n <= {MC_MAX_QUBITS}")
    if repetitions < 1:
        raise PreconditionError("Need at least one repetition")
    n, dim_a = plan.n, plan.dim_A
    c = np.full(2**n, 1 / math.sqrt(2**n), dtype=complex) if amplitudes is None else np.asarray(amplitudes)
    start = transfer_input(c, n, dim_a)
    target = transfer_target(c, n, dim_a)
    t0 = plan.steps[0].pulse.tau_map

    def forward(sims: Dict[int, TransferSimulator], signs: Dict[int, int]) -> float:
        state = start
        for step in plan.steps:
            state = sims[signs[step.k]].apply_step(state, step.k)
        return overlap_fidelity(target, state)

    nominal = baseline or TransferSimulator(plan, config, "dynamical")
    base_fidelity = forward({1: nominal}, {s.k: 1 for s in plan.steps})
    sims = {
        sign: TransferSimulator(plan.with_offsets({s.k: sign * delta_t for s in plan.steps}), config, "dynamical")
        for sign in (1, -1)
    }
    rng = np.random.default_rng(seed)
    fidelities = []
    for _ in range(repetitions):
        draw = rng.choice([1, -1], size=n)
        signs = {step.k: int(s) for step, s in zip(plan.steps, draw)}
        fidelities.append(forward(sims, signs))
    values = np.array(fidelities)
    decomposition = decompose_paths(c)
    summary = MonteCarloSummary(
        parameter=delta_t,
        repetitions=repetitions,
        mean_fidelity=float(values.mean()),
        std_fidelity=float(values.std()),
        excess_infidelity=float(base_fidelity - values.mean()),
        predicted_infidelity=1 - transfer_fidelity_jitter(decomposition, delta_t, t0, "amplitude"),
        printed_infidelity=1 - transfer_fidelity_jitter(decomposition, delta_t, t0, "printed"),
    )
    logger.info(
        "monte_carlo_jitter_done",
        delta_t=delta_t,
        excess_infidelity=summary.excess_infidelity,
        predicted=summary.predicted_infidelity,
    )
    return summary


def monte_carlo_energy(
    node_count: int,
    delta_e: float,
    omega: float,
    repetitions: int,
    seed: int = 0,
) -> MonteCarloSummary:
    """Round trip of the perfect chain with independent level shifts in [-dE, dE].

    Qualitative only: the printed 1 - 2 t0 dE fixes no microscopic disorder model.
    """
    if repetitions < 1:
        raise PreconditionError("Need at least one repetition")
    t0 = math.pi / omega
    printed = 1 - energy_fidelity(node_count, delta_e, t0)
    h0 = chain_hamiltonian(node_count, omega)
    rng = np.random.default_rng(seed)
    fidelities = []
    for _ in range(repetitions):
        h = h0 + np.diag(rng.uniform(-delta_e, delta_e, size=node_count))
        w, v = np.linalg.eigh(h)
        amp = (v[0, :] * np.exp(-2j * w * t0)) @ v[0, :].conj()
        fidelities.append(float(abs(amp) ** 2))
    values = np.array(fidelities)
    return MonteCarloSummary(
        parameter=delta_e,
        repetitions=repetitions,
        mean_fidelity=float(values.mean()),
        std_fidelity=float(values.std()),
        excess_infidelity=float(1 - values.mean()),
        predicted_infidelity=printed,
        printed_infidelity=printed,
    )


def coherence_budget(
    n: int,
    step_time_us: float = STEP_TIME_US,
    chi_khz: float = KERR_CHI_KHZ,
) -> CoherenceBudget:
    """Lifetimes needed for one transfer and one Kerr stage.

    The top Fock level q - 1 decays about q times faster than a single
    photon, so photon lifetimes are scaled by q.
    """
    if n < 1:
        raise DimensionError("n must be >= 1")
    q = 2**n
    tau1 = n * step_time_us
    tau2 = 1e3 / (chi_khz * q)
    photon = tau1 * q
    kerr_photon = tau2 * q
    feasible = (
        tau1 <= QUBIT_LIFETIME_LIMIT_US
        and photon <= PHOTON_LIFETIME_LIMIT_US
        and kerr_photon <= PHOTON_LIFETIME_LIMIT_US
    )
    return CoherenceBudget(
        n=n,
        q=q,
        tau1_us=tau1,
        tau2_us=tau2,
        qubit_lifetime_us=tau1,
        photon_lifetime_us=photon,
        kerr_photon_lifetime_us=kerr_photon,
        feasible=feasible,
    )
