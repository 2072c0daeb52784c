"""Qubit-register to Fock-state transfer.

Step ``k`` (run in order ``k = n-1 ... 0``) moves |m,1> of the pair
(A, qubit k) to |m + 2**k, 0> for every photon number m reachable at that
point. The dynamical backend integrates the driven dressed pair; the ideal
backend applies the exact permutation. Each step is cached as a bare-frame
pair unitary so forward, inverse and ancilla runs share one propagation.
"""

import math
from typing import Dict, List, Literal, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, computed_field

from .drives import (
    DEFAULT_GUARD_BAND,
    DrivePulse,
    OccupiedSet,
    occupied_photon_numbers,
    synthesize_photon_preserving_drive,
    synthesize_transfer_drive,
)
from .dynamics import (
    DeviceParams,
    DressedBasis,
    DressingMode,
    InteractionHamiltonian,
    PropagationConfig,
    check_leakage,
    evolve_operator,
    ramp_operator,
)
from .exceptions import DimensionError, PreconditionError, SupportError
from .hilbert import (
    CompositeSpace,
    FockSpace,
    QubitRegister,
    StateVector,
    apply_local,
    apply_local_array,
    bits_to_int,
    excited_population,
    fock_populations,
    overlap_fidelity,
)
from .models import InverseReport, PropagationReport, StepReport

logger = structlog.get_logger(__name__)

Backend = Literal["ideal", "dynamical"]
InverseMode = Literal["recorded-adjoint", "physical"]

DEFAULT_PAD = 4
SUPPORT_TOLERANCE = 1e-3
SERIES_FLOOR = 1e-6
RESET_TOLERANCE = 1e-2


class TransferStep(BaseModel):
    """One scheduled step."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    k: int = Field(..., ge=0)
    omega: float = Field(..., gt=0, description="Omega (rad/us)")
    occupied: OccupiedSet
    pulse: DrivePulse


class TransferPlan(BaseModel):
    """Ordered k = n-1 ... 0 schedule."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(..., ge=1)
    steps: Tuple[TransferStep, ...]
    params: DeviceParams
    dressing: DressingMode = "ideal"
    pad: int = Field(default=DEFAULT_PAD, ge=0)

    @property
    def dim_A(self) -> int:
        return 2**self.n + self.pad

    @computed_field  # type: ignore[prop-decorator]
    @property
    def tau_1(self) -> float:
        """Total transfer time including one ramp in and out per step (us)."""
        return sum(s.pulse.duration + 2 * self.params.tau_ad for s in self.steps)

    def step(self, k: int) -> TransferStep:
        for s in self.steps:
            if s.k == k:
                return s
        raise DimensionError(f"No step {k} in a plan for {self.n} qubits")

    def with_offsets(self, offsets: Dict[int, float]) -> "TransferPlan":
        """Same plan with per-step timing offsets (us)."""
        steps = tuple(
            s.model_copy(update={"pulse": s.pulse.with_offset(offsets.get(s.k, 0.0))}) for s in self.steps
        )
        return self.model_copy(update={"steps": steps})


def build_plan(
    n: int,
    omegas: Union[float, Sequence[float]],
    params: DeviceParams,
    mode: DressingMode = "ideal",
    pad: int = DEFAULT_PAD,
    guard_band_factor: float = DEFAULT_GUARD_BAND,
) -> TransferPlan:
    """Synthesize the drive of every step; ``omegas`` is ordered k = n-1 ... 0."""
    if n < 1:
        raise DimensionError("A transfer plan needs n >= 1")
    if isinstance(omegas, (int, float)):
        per_step = [float(omegas)] * n
    else:
        per_step = [float(w) for w in omegas]
        if len(per_step) != n:
            raise PreconditionError(f"Expected {n} drive scales, got {len(per_step)}")
    steps = []
    for k, omega in zip(range(n - 1, -1, -1), per_step):
        occupied = occupied_photon_numbers(n, k)
        if k == 0:
            pulse = synthesize_photon_preserving_drive(occupied, omega, params, guard_band_factor)
        else:
            pulse = synthesize_transfer_drive(k, occupied, omega, params, guard_band_factor)
        steps.append(TransferStep(k=k, omega=omega, occupied=occupied, pulse=pulse))
    plan = TransferPlan(n=n, steps=tuple(steps), params=params, dressing=mode, pad=pad)
    logger.info("plan_built", n=n, dressing=mode, tau_1_us=plan.tau_1, dim_A=plan.dim_A)
    return plan


def bits_to_fock(bitstring: str, n: Optional[int] = None) -> int:
    """Photon number sum b_k 2^k of a register string b_{n-1}...b_0."""
    if n is not None and len(bitstring) != n:
        raise DimensionError(f"Bitstring '{bitstring}' does not have {n} bits")
    if not bitstring or set(bitstring) - {"0", "1"}:
        raise DimensionError(f"Invalid bitstring '{bitstring}'")
    return bits_to_int(bitstring)


class ProtocolSchedule(BaseModel):
    """Stage durations of one transform (us); tau_3 is bookkeeping only."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tau_1: float = Field(..., ge=0, description="Transfer")
    tau_2: float = Field(..., ge=0, description="Kerr evolution")
    tau_3: float = Field(default=0.0, ge=0, description="Measurement")
    tau_ad: float = Field(..., ge=0, description="One adiabatic ramp")

    @property
    def total(self) -> float:
        """Transfer, Kerr stage, reverse transfer and readout."""
        return 2 * self.tau_1 + self.tau_2 + self.tau_3


def ideal_step_unitary(k: int, n: int, dim_A: Optional[int] = None) -> np.ndarray:
    """Swap |m,1> <-> |m + 2^k, 0> for m in the step-k occupied set; identity elsewhere."""
    dim_A = dim_A or 2**n
    if dim_A < 2**n:
        raise DimensionError(f"Resonator dimension {dim_A} below 2^n = {2**n}")
    occupied = occupied_photon_numbers(n, k)
    u = np.eye(2 * dim_A, dtype=complex)
    for m in occupied.photons:
        src, dst = 2 * m + 1, 2 * (m + 2**k)
        u[[src, dst], :] = u[[dst, src], :]
    return u


def register_space(n: int, dim_A: int) -> CompositeSpace:
    return CompositeSpace.of(FockSpace(dim=dim_A, label="A"), QubitRegister(n=n, label="q"))


def transfer_input(amplitudes: Sequence[complex], n: int, dim_A: int) -> StateVector:
    """|0>_A x sum_b c_b |b>."""
    c = np.asarray(amplitudes, dtype=complex)
    if c.size != 2**n:
        raise DimensionError(f"Expected {2**n} register amplitudes, got {c.size}")
    amps = np.zeros(dim_A * 2**n, dtype=complex)
    amps[: 2**n] = c
    return StateVector.normalized(register_space(n, dim_A), amps)


def transfer_target(amplitudes: Sequence[complex], n: int, dim_A: int) -> StateVector:
    """sum_m c_m |m>_A x |0...0>."""
    c = np.asarray(amplitudes, dtype=complex)
    if c.size != 2**n:
        raise DimensionError(f"Expected {2**n} register amplitudes, got {c.size}")
    amps = np.zeros(dim_A * 2**n, dtype=complex)
    amps[np.arange(2**n) * 2**n] = c
    return StateVector.normalized(register_space(n, dim_A), amps)


class StepOperator(NamedTuple):
    """Cached propagation of one step in bare pair coordinates."""

    unitary: np.ndarray
    times: np.ndarray
    samples: np.ndarray
    report: Optional[PropagationReport]


class StepPhases(NamedTuple):
    """Per-level phases (rad) a step imprints, forward and reversed."""

    untouched: Dict[int, float]
    transferred: Dict[int, float]
    inverse_untouched: Dict[int, float]
    inverse_transferred: Dict[int, float]


class TransferSimulator:
    """Executes a transfer plan on the ideal or dynamical backend."""

    def __init__(
        self,
        plan: TransferPlan,
        config: Optional[PropagationConfig] = None,
        backend: Backend = "dynamical",
    ):
        """Initialize the simulator.

        Args:
            plan: Transfer schedule with synthesized pulses
            config: Integrator settings
            backend: ``dynamical`` integrates the drives, ``ideal`` applies exact maps
        """
        self.plan = plan
        self.config = config or PropagationConfig()
        self.backend = backend
        self._operators: Dict[int, StepOperator] = {}
        self._phases: Dict[int, StepPhases] = {}

    @property
    def dim_A(self) -> int:
        return self.plan.dim_A

    def step_operator(self, k: int) -> StepOperator:
        if k not in self._operators:
            self._operators[k] = self._compute_step(k)
        return self._operators[k]

    def _compute_step(self, k: int) -> StepOperator:
        step = self.plan.step(k)
        duration = step.pulse.duration
        if self.backend == "ideal":
            u = ideal_step_unitary(k, self.plan.n, self.dim_A)
            eye = np.eye(2 * self.dim_A, dtype=complex)
            return StepOperator(u, np.array([0.0, duration]), np.array([eye, u]), None)

        basis = DressedBasis(self.dim_A, self.plan.params, k)
        source = InteractionHamiltonian(step.pulse, basis, self.config.quadrature)
        times = np.linspace(0.0, duration, self.config.samples)
        logger.info("step_propagation_started", k=k, duration_us=duration, components=len(step.pulse.components))
        traj = evolve_operator(source, duration, self.config, sample_times=times)
        relabel = basis.relabel
        samples = np.einsum("ji,sjk,kl->sil", relabel, traj.columns, relabel)
        unitary = samples[-1]
        report = traj.report
        if self.plan.dressing == "ramp":
            ramp_in, in_report = ramp_operator("in", self.plan.params, self.dim_A, k, self.config)
            ramp_out, out_report = ramp_operator("out", self.plan.params, self.dim_A, k, self.config)
            vectors = basis.vectors
            unitary = ramp_out @ vectors @ traj.columns[-1] @ vectors.conj().T @ ramp_in
            report = report.model_copy(
                update={"warnings": [*report.warnings, *in_report.warnings, *out_report.warnings]}
            )
        return StepOperator(unitary, times, samples, report)

    def step_phases(self, k: int) -> StepPhases:
        if k not in self._phases:
            w = self.step_operator(k).unitary
            occupied = self.plan.step(k).occupied
            stride = 2**k
            untouched, transferred, inv_untouched, inv_transferred = {}, {}, {}, {}
            for m in occupied.photons:
                top = m + stride
                untouched[m] = float(np.angle(w[2 * m, 2 * m]))
                transferred[top] = float(np.angle(w[2 * top, 2 * m + 1]))
                inv_untouched[m] = untouched[m]
                inv_transferred[top] = float(np.angle(w[2 * m + 1, 2 * top]))
            self._phases[k] = StepPhases(untouched, transferred, inv_untouched, inv_transferred)
        return self._phases[k]

    def phase_frame(self) -> Dict[int, StepPhases]:
        return {s.k: self.step_phases(s.k) for s in self.plan.steps}

    def _level_phases(self, table: Dict[int, float], sign: float) -> np.ndarray:
        diag = np.ones(self.dim_A, dtype=complex)
        for level, phase in table.items():
            diag[level] = np.exp(1j * sign * phase)
        return np.diag(diag)

    def correction(self, k: int) -> np.ndarray:
        """Diagonal A operator removing the forward step's per-level phases."""
        phases = self.step_phases(k)
        return self._level_phases({**phases.untouched, **phases.transferred}, -1.0)

    def precompensation(self, k: int) -> np.ndarray:
        """Diagonal A operator cancelling the phases of the reversed step."""
        phases = self.step_phases(k)
        return self._level_phases({**phases.inverse_untouched, **phases.inverse_transferred}, -1.0)

    def check_support(self, state: StateVector, k: int, register: str = "q") -> None:
        pops = fock_populations(state, "A")
        allowed = set(self.plan.step(k).occupied.photons)
        outside = float(sum(p for m, p in enumerate(pops) if m not in allowed))
        if outside > SUPPORT_TOLERANCE:
            raise SupportError(
                f"Resonator A has population {outside:.3e} outside the step-{k} occupied set",
                f"allowed photon numbers {sorted(allowed)}",
            )

    def apply_step(self, state: StateVector, k: int, qubit_key: Optional[str] = None) -> StateVector:
        """Corrected step-k map on (A, qubit); the qubit defaults to q{k}."""
        key = qubit_key or f"q{k}"
        out = apply_local(state, self.step_operator(k).unitary, ["A", key])
        return apply_local(out, self.correction(k), ["A"])

    def _series(self, state: StateVector, op: StepOperator, key: str) -> Tuple[Dict[str, List[float]], float]:
        space = state.space
        stacked = np.stack(
            [apply_local_array(space, state.amplitudes, u, ["A", key]) for u in op.samples]
        )
        probs = np.abs(stacked) ** 2
        per_factor = probs.reshape((len(op.samples),) + tuple(space.factor_dims))
        top = np.take(per_factor, self.dim_A - 1, axis=space.factor_position("A") + 1)
        leakage = float(top.reshape(len(op.samples), -1).sum(axis=1).max())
        keep = np.nonzero(probs.max(axis=0) >= SERIES_FLOOR)[0]
        series = {space.basis_label(int(i)): [float(v) for v in probs[:, i]] for i in keep}
        return series, leakage

    def run_step(self, state: StateVector, k: int) -> Tuple[StateVector, StepReport]:
        step = self.plan.step(k)
        key = f"q{k}"
        op = self.step_operator(k)
        raw = apply_local(state, op.unitary, ["A", key])
        corrected = apply_local(raw, self.correction(k), ["A"])
        ideal = apply_local(state, ideal_step_unitary(k, self.plan.n, self.dim_A), ["A", key])
        series, leakage = self._series(state, op, key)
        if self.backend == "dynamical":
            check_leakage(leakage, self.config)
        phases = self.step_phases(k)
        axis = state.space.axis(key)
        excited = float(np.take(np.abs(corrected.tensor_view()) ** 2, 1, axis=axis).sum())
        report = StepReport(
            k=k,
            backend=self.backend,
            omega_mhz=step.omega / (2 * math.pi),
            duration_us=step.pulse.duration,
            fidelity=overlap_fidelity(ideal, corrected),
            raw_fidelity=overlap_fidelity(ideal, raw),
            qubit_excitation=excited,
            leakage=leakage,
            correction_phases={**phases.untouched, **phases.transferred},
            times_us=[float(t) for t in op.times],
            populations=series,
            propagation=op.report,
        )
        logger.info("transfer_step_done", k=k, fidelity=report.fidelity, leakage=leakage)
        return corrected, report

    def run(
        self, state: StateVector, steps: Optional[Sequence[int]] = None
    ) -> Tuple[StateVector, List[StepReport]]:
        """Forward transfer; ``steps`` restricts execution to a prefix of the schedule."""
        first = self.plan.steps[0].k
        self.check_support(state, first)
        reports = []
        for step in self.plan.steps:
            if steps is not None and step.k not in steps:
                continue
            state, report = self.run_step(state, step.k)
            reports.append(report)
        residual = excited_population(state, "q") if steps is None else 0.0
        if residual >= RESET_TOLERANCE:
            logger.warning("qubits_not_reset", excited_population=residual, tolerance=RESET_TOLERANCE)
        return state, reports

    def _reverse(self, state: StateVector, mode: InverseMode, compensate: bool) -> StateVector:
        for step in reversed(self.plan.steps):
            k, key = step.k, f"q{step.k}"
            w = self.step_operator(k).unitary
            if mode == "recorded-adjoint":
                state = apply_local(state, self.correction(k).conj().T, ["A"])
                state = apply_local(state, w.conj().T, ["A", key])
            else:
                if compensate:
                    state = apply_local(state, self.precompensation(k), ["A"])
                state = apply_local(state, w, ["A", key])
        return state

    def residual_phases(self, mode: InverseMode, compensate: bool = True) -> Dict[str, float]:
        """Phase of <0|_A <b| R |b>_A |0...0> per basis string b for the reverse map R."""
        n = self.plan.n
        space = register_space(n, self.dim_A)
        out = {}
        for value in range(2**n):
            basis_state = StateVector(space=space, amplitudes=np.eye(space.dim)[space.index([value, 0])])
            back = self._reverse(basis_state, mode, compensate)
            amp = back.amplitudes[space.index([0, value])]
            out[format(value, f"0{n}b")] = float(np.angle(amp)) if abs(amp) > 0 else 0.0
        return out

    def inverse(
        self, state: StateVector, mode: InverseMode = "recorded-adjoint", compensate: bool = True
    ) -> Tuple[StateVector, InverseReport]:
        """Move A's register content back onto the qubits, steps in order k = 0 ... n-1."""
        out = self._reverse(state, mode, compensate)
        residual = self.residual_phases(mode, compensate)
        report = InverseReport(
            mode=mode,
            compensated=compensate or mode == "recorded-adjoint",
            residual_phases=residual,
            max_residual_phase=max((abs(v) for v in residual.values()), default=0.0),
        )
        logger.info("inverse_transfer_done", mode=mode, max_residual_phase=report.max_residual_phase)
        return out, report


def execute_transfer(
    initial: StateVector,
    plan: TransferPlan,
    config: Optional[PropagationConfig] = None,
    backend: Backend = "dynamical",
    simulator: Optional[TransferSimulator] = None,
) -> Tuple[StateVector, List[StepReport]]:
    """Run every step of ``plan`` on ``initial`` (A x n qubits)."""
    sim = simulator or TransferSimulator(plan, config, backend)
    return sim.run(initial)


def inverse_transfer(
    state: StateVector,
    plan: TransferPlan,
    mode: InverseMode = "recorded-adjoint",
    config: Optional[PropagationConfig] = None,
    backend: Backend = "dynamical",
    simulator: Optional[TransferSimulator] = None,
) -> Tuple[StateVector, InverseReport]:
    sim = simulator or TransferSimulator(plan, config, backend)
    return sim.inverse(state, mode)


def register_amplitudes(bits: Dict[str, complex], n: int) -> np.ndarray:
    """Amplitude vector from a ``{bitstring: amplitude}`` mapping, normalized."""
    c = np.zeros(2**n, dtype=complex)
    for b, amp in bits.items():
        if len(b) != n:
            raise DimensionError(f"Bitstring '{b}' does not have {n} bits")
        c[bits_to_int(b)] += amp
    norm = np.linalg.norm(c)
    if norm == 0:
        raise PreconditionError("Register amplitudes are all zero")
    return c / norm
