"""Jaynes-Cummings dressed states and interaction-picture propagation.

One active qubit is resonant with resonator A at a time. Its pair space
(A with ``dim_A`` levels, one qubit) is diagonalized exactly; the drive is
then propagated in the interaction picture of that dressed Hamiltonian with
every counter-rotating term kept.
"""

import math
import time
from typing import TYPE_CHECKING, List, Literal, NamedTuple, Optional, Protocol, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .exceptions import DimensionError, IntegrationError, LeakageError, PreconditionError
from .hilbert import (
    CompositeSpace,
    FockSpace,
    QubitRegister,
    StateVector,
    apply_local,
    ladder_operator,
    single_qubit_operator,
)
from .models import PropagationReport

if TYPE_CHECKING:
    from .drives import DrivePulse

logger = structlog.get_logger(__name__)

Sign = Literal["+", "-", "ground", "edge"]
Direction = Literal["bare_to_dressed", "dressed_to_bare"]
DressingMode = Literal["ideal", "ramp"]

ADIABATIC_RATIO_LIMIT = 0.1
RAMP_SHARPNESS = 3.0


class DeviceParams(BaseModel):
    """Physical constants in angular units (rad/us) and times in us."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    omega_A: float = Field(..., gt=0, description="Resonator A frequency")
    omega_B: float = Field(..., gt=0, description="Resonator B frequency")
    omega_q: Tuple[float, ...] = Field(default=(), description="Idle qubit frequencies")
    g: float = Field(..., gt=0, description="Qubit-resonator coupling")
    g_k: Optional[Tuple[float, ...]] = Field(None, description="Per-qubit couplings")
    chi_AB: float = Field(default=0.0, description="Cross-Kerr rate (signed)")
    alpha: float = Field(default=-2 * math.pi * 200.0, description="Qubit anharmonicity")
    tau_ad: float = Field(default=0.1, gt=0, description="Adiabatic ramp duration")
    delta_start: float = Field(
        default=2 * math.pi * 1000.0, gt=0, description="Ramp start detuning"
    )

    @field_validator("g_k")
    @classmethod
    def _positive_couplings(cls, v: Optional[Tuple[float, ...]]) -> Optional[Tuple[float, ...]]:
        if v is not None and any(g <= 0 for g in v):
            raise ValueError("Per-qubit couplings must be positive")
        return v

    def coupling(self, k: int) -> float:
        if self.g_k is not None and k < len(self.g_k):
            return self.g_k[k]
        return self.g

    @property
    def adiabatic_ratio(self) -> float:
        """Largest of 1/(tau_ad g) and 1/(tau_ad |alpha|)."""
        ratios = [1.0 / (self.tau_ad * self.g)]
        if self.alpha != 0:
            ratios.append(1.0 / (self.tau_ad * abs(self.alpha)))
        else:
            ratios.append(math.inf)
        return max(ratios)

    @property
    def is_adiabatic(self) -> bool:
        return self.adiabatic_ratio <= ADIABATIC_RATIO_LIMIT


class DressedLevel(BaseModel):
    """Eigenstate label of the resonant pair."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    m: int = Field(..., ge=0, description="Excitation count")
    sign: Sign = Field(..., description="Branch")
    energy: float = Field(..., description="Lab-frame energy (rad/us)")

    @property
    def label(self) -> str:
        if self.sign == "ground":
            return "0"
        if self.sign == "edge":
            return f"{self.m},edge"
        return f"{self.m},{self.sign}"


class PropagationConfig(BaseModel):
    """Integrator settings.

    ``rk4`` is meant for interaction-picture generators whose norm is small next
    to their fastest frequency. Generators with large diagonals (lab frame,
    detuning ramps) need the unitary midpoint scheme ``expm``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    step: Optional[float] = Field(None, gt=0, description="Fixed step (us); derived when unset")
    step_scale: float = Field(default=1.0, gt=0, le=1, description="Multiplier on the derived step")
    method: Literal["rk4", "expm"] = Field(default="rk4", description="Integrator scheme")
    norm_tolerance: float = Field(default=1e-9, gt=0, description="Allowed norm drift per us")
    leakage_tolerance: float = Field(default=1e-6, gt=0, description="Allowed top-level population")
    convergence_check: bool = Field(default=False, description="Re-run at half step and compare")
    quadrature: Literal["x", "y"] = Field(default="y", description="Drive quadrature")
    samples: int = Field(default=200, ge=2, description="Population samples per drive window")

    def max_step(self, max_frequency: float) -> float:
        """Largest admissible step, 1/(50 max_frequency): about 300 points per period."""
        if max_frequency <= 0:
            return math.inf
        return 1.0 / (50.0 * max_frequency)

    def resolve_step(self, max_frequency: float, duration: float) -> float:
        limit = self.max_step(max_frequency)
        if self.step is not None:
            if self.step > limit * (1 + 1e-12):
                raise PreconditionError(
                    f"Step {self.step:.3e} us exceeds the resolution limit {limit:.3e} us"
                )
            return self.step
        step = self.step_scale * limit
        return min(step, duration) if duration > 0 else step


class HamiltonianSource(Protocol):
    """Time-dependent Hermitian generator."""

    dim: int
    max_frequency: float

    def __call__(self, t: float) -> np.ndarray: ...


class ConstantHamiltonian:
    """Time-independent generator."""

    def __init__(self, matrix: np.ndarray):
        self.matrix = np.asarray(matrix, dtype=complex)
        self.dim = self.matrix.shape[0]
        if self.dim:
            eig = np.linalg.eigvalsh(self.matrix)
            self.max_frequency = float(max(eig.max() - eig.min(), np.abs(eig).max()))
        else:
            self.max_frequency = 0.0

    def __call__(self, t: float) -> np.ndarray:
        return self.matrix


def pair_space(dim_A: int, register: str = "q") -> CompositeSpace:
    """Resonator A with one qubit, bare index ``2*m + s``."""
    return CompositeSpace.of(FockSpace(dim=dim_A, label="A"), QubitRegister(n=1, label=register))


def dressed_energy(m: int, sign: Sign, params: DeviceParams, k: int = 0) -> float:
    """E_{m,+-} = m omega_A +- sqrt(m) g; ground is 0."""
    if m < 0:
        raise DimensionError(f"Excitation count {m} is negative")
    if m == 0:
        if sign != "ground":
            raise PreconditionError("The m = 0 level has no +/- branch")
        return 0.0
    if sign == "ground":
        raise PreconditionError(f"Level m = {m} needs a +/- sign")
    if sign == "edge":
        return m * params.omega_A
    s = 1.0 if sign == "+" else -1.0
    return m * params.omega_A + s * math.sqrt(m) * params.coupling(k)


def dressed_state(m: int, sign: Sign, space: CompositeSpace) -> StateVector:
    """(|m,0> +- |m-1,1>)/sqrt(2) over a pair space, |0,0> for the ground level."""
    dim_A = space.factor("A").dim
    if m >= dim_A or m < 0:
        raise DimensionError(f"Level m = {m} exceeds the truncation", f"dim_A = {dim_A}")
    amps = np.zeros(space.dim, dtype=complex)
    if m == 0:
        if sign != "ground":
            raise PreconditionError("The m = 0 level has no +/- branch")
        amps[0] = 1.0
    else:
        if sign not in ("+", "-"):
            raise PreconditionError(f"Level m = {m} needs a +/- sign")
        s = 1.0 if sign == "+" else -1.0
        amps[2 * m] = 1 / math.sqrt(2)
        amps[2 * (m - 1) + 1] = s / math.sqrt(2)
    return StateVector(space=space, amplitudes=amps)


def jaynes_cummings_hamiltonian(
    dim_A: int, params: DeviceParams, k: int = 0, detuning: float = 0.0, frame: float = 0.0
) -> np.ndarray:
    """omega_A a^dag a + (omega_A + detuning) sigma+ sigma- + g (a^dag sigma- + a sigma+).

    ``frame`` subtracts ``frame`` per excitation (rotating frame).
    """
    fock = FockSpace(dim=dim_A, label="A")
    a = ladder_operator(fock, "lower")
    num = a.conj().T @ a
    sp = single_qubit_operator("plus")
    sm = single_qubit_operator("minus")
    eye_a = np.eye(dim_A, dtype=complex)
    eye_q = np.eye(2, dtype=complex)
    wa = params.omega_A - frame
    h = wa * np.kron(num, eye_q) + (wa + detuning) * np.kron(eye_a, sp @ sm)
    h += params.coupling(k) * (np.kron(a.conj().T, sm) + np.kron(a, sp))
    return h


class DressedBasis:
    """Dressed eigensystem of the truncated resonant pair.

    Levels are ground, (m,+) and (m,-) for 1 <= m < dim_A, and the edge level
    |dim_A-1, 1> that has no partner inside the truncation.
    """

    def __init__(self, dim_A: int, params: DeviceParams, k: int = 0):
        if dim_A < 2:
            raise DimensionError("The pair space needs dim_A >= 2")
        self.dim_A = dim_A
        self.params = params
        self.k = k
        self.dim = 2 * dim_A
        levels: List[DressedLevel] = [DressedLevel(m=0, sign="ground", energy=0.0)]
        for m in range(1, dim_A):
            for sign in ("+", "-"):
                levels.append(
                    DressedLevel(m=m, sign=sign, energy=dressed_energy(m, sign, params, k))  # type: ignore[arg-type]
                )
        levels.append(DressedLevel(m=dim_A, sign="edge", energy=dim_A * params.omega_A))
        self.levels = levels
        self.energies = np.array([lvl.energy for lvl in levels])
        self._index = {(lvl.m, lvl.sign): j for j, lvl in enumerate(levels)}

        space = pair_space(dim_A)
        vectors = np.zeros((self.dim, self.dim), dtype=complex)
        for j, lvl in enumerate(levels):
            if lvl.sign == "edge":
                vectors[2 * (dim_A - 1) + 1, j] = 1.0
            else:
                vectors[:, j] = dressed_state(lvl.m, lvl.sign, space).amplitudes
        self.vectors = vectors

        # bare (m,0) -> (m,-), bare (m,1) -> (m+1,+)
        perm = np.zeros(self.dim, dtype=int)
        for m in range(dim_A):
            perm[2 * m] = self.index(m, "-") if m > 0 else self.index(0, "ground")
            if m < dim_A - 1:
                perm[2 * m + 1] = self.index(m + 1, "+")
            else:
                perm[2 * m + 1] = self.index(dim_A, "edge")
        self.permutation = perm
        self._perm_matrix = np.zeros((self.dim, self.dim), dtype=complex)
        self._perm_matrix[perm, np.arange(self.dim)] = 1.0

    def index(self, m: int, sign: Sign) -> int:
        try:
            return self._index[(m, sign)]
        except KeyError:
            raise DimensionError(f"No dressed level ({m},{sign}) in dim_A = {self.dim_A}")

    @property
    def relabel(self) -> np.ndarray:
        """Permutation matrix taking bare labels to dressed labels."""
        return self._perm_matrix

    @property
    def dressing_unitary(self) -> np.ndarray:
        """Ideal dressing map in bare coordinates."""
        return self.vectors @ self._perm_matrix

    def drive_matrix(self, quadrature: Literal["x", "y"] = "y") -> np.ndarray:
        """<j1| I x sigma |j2> in the dressed basis with the diagonal removed."""
        sigma = np.kron(np.eye(self.dim_A), single_qubit_operator(quadrature))
        m = self.vectors.conj().T @ sigma @ self.vectors
        np.fill_diagonal(m, 0.0)
        m[np.abs(m) < 1e-14] = 0.0
        return m

    def bare_label(self, bare_index: int) -> str:
        return f"{bare_index // 2},{bare_index % 2}"


class InteractionHamiltonian:
    """H_I(t) = f(t) sum_{j1 != j2} M_{j1 j2} exp(i (E_j1 - E_j2) t) |j1><j2|."""

    def __init__(
        self, pulse: "DrivePulse", basis: DressedBasis, quadrature: Literal["x", "y"] = "y"
    ):
        self.basis = basis
        self.dim = basis.dim
        self.matrix = basis.drive_matrix(quadrature)
        self.energies = basis.energies
        self.amplitudes = np.array([c.amplitude for c in pulse.components], dtype=float)
        self.frequencies = np.array([c.frequency for c in pulse.components], dtype=float)
        coupled = np.abs(self.matrix) > 0
        gaps = np.abs(self.energies[:, None] - self.energies[None, :])[coupled]
        fastest = float(gaps.max()) if gaps.size else 0.0
        if self.frequencies.size:
            fastest = max(fastest, float(self.frequencies.max()))
        self.max_frequency = fastest

    def envelope(self, t: float) -> float:
        return float(self.amplitudes @ np.cos(self.frequencies * t))

    def __call__(self, t: float) -> np.ndarray:
        u = np.exp(1j * self.energies * t)
        return self.envelope(t) * (u[:, None] * self.matrix * u.conj()[None, :])

    def rwa_coupling(self, j1: int, j2: int, tolerance: float = 1e-6) -> complex:
        """Time-averaged matrix element from components resonant with E_j1 - E_j2."""
        gap = self.energies[j1] - self.energies[j2]
        total = 0.0 + 0.0j
        for a, w in zip(self.amplitudes, self.frequencies):
            if abs(abs(gap) - w) <= tolerance * max(1.0, w):
                total += 0.5 * a * self.matrix[j1, j2]
        return complex(total)


def interaction_hamiltonian(
    t: float, pulse: "DrivePulse", basis: DressedBasis, quadrature: Literal["x", "y"] = "y"
) -> np.ndarray:
    return InteractionHamiltonian(pulse, basis, quadrature)(t)


class RampHamiltonian:
    """Bare pair in the frame rotating at omega_A per excitation with a tanh detuning sweep.

    ``direction="in"`` sweeps the qubit from ``delta_start`` to resonance,
    ``"out"`` is its time mirror.
    """

    def __init__(
        self,
        direction: Literal["in", "out"],
        params: DeviceParams,
        dim_A: int,
        k: int = 0,
        sharpness: float = RAMP_SHARPNESS,
    ):
        self.direction = direction
        self.params = params
        self.duration = params.tau_ad
        self.sharpness = sharpness
        self.dim = 2 * dim_A
        self._coupling = jaynes_cummings_hamiltonian(dim_A, params, k, frame=params.omega_A)
        self._excited = np.kron(np.eye(dim_A), single_qubit_operator("plus") @ single_qubit_operator("minus"))
        self.max_frequency = params.delta_start + 2 * params.coupling(k) * math.sqrt(dim_A)

    def detuning(self, t: float) -> float:
        kappa = self.sharpness
        s = t if self.direction == "in" else self.duration - t
        return self.params.delta_start * (1 - math.tanh(kappa * s / self.duration) / math.tanh(kappa))

    def __call__(self, t: float) -> np.ndarray:
        return self._coupling + self.detuning(t) * self._excited


def _unitary_step(h: np.ndarray, dt: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def _integrate(
    hamiltonian: HamiltonianSource,
    y: np.ndarray,
    t0: float,
    t1: float,
    step: float,
    method: str,
) -> Tuple[np.ndarray, int]:
    span = t1 - t0
    if span <= 0:
        return y, 0
    n_steps = max(1, math.ceil(span / step - 1e-9))
    dt = span / n_steps
    h_start = hamiltonian(t0)
    for i in range(n_steps):
        t = t0 + i * dt
        if method == "rk4":
            h_mid = hamiltonian(t + 0.5 * dt)
            h_end = hamiltonian(t + dt)
            k1 = -1j * (h_start @ y)
            k2 = -1j * (h_mid @ (y + 0.5 * dt * k1))
            k3 = -1j * (h_mid @ (y + 0.5 * dt * k2))
            k4 = -1j * (h_end @ (y + dt * k3))
            y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            h_start = h_end
        else:
            y = _unitary_step(hamiltonian(t + 0.5 * dt), dt) @ y
    return y, n_steps


class Trajectory(NamedTuple):
    """Sampled propagation of a block of columns."""

    times: np.ndarray
    columns: np.ndarray  # shape (samples, dim, ncols)
    report: PropagationReport


def evolve_operator(
    hamiltonian: HamiltonianSource,
    duration: float,
    config: PropagationConfig,
    sample_times: Optional[Sequence[float]] = None,
    initial: Optional[np.ndarray] = None,
) -> Trajectory:
    """Propagate ``initial`` (identity by default) and sample it at ``sample_times``."""
    if duration < 0:
        raise PreconditionError("Duration must be non-negative")
    start = time.perf_counter()
    y0 = np.eye(hamiltonian.dim, dtype=complex) if initial is None else np.array(initial, dtype=complex)
    if y0.ndim == 1:
        y0 = y0[:, None]
    times = np.array([0.0, duration] if sample_times is None else sample_times, dtype=float)
    if times[0] != 0.0 or abs(times[-1] - duration) > 1e-12 or np.any(np.diff(times) < 0):
        raise PreconditionError("Sample times must run from 0 to the duration")
    step = config.resolve_step(hamiltonian.max_frequency, duration)

    def run(h_step: float) -> Tuple[np.ndarray, int]:
        y = y0.copy()
        out = [y.copy()]
        total = 0
        for t_a, t_b in zip(times[:-1], times[1:]):
            y, n = _integrate(hamiltonian, y, float(t_a), float(t_b), h_step, config.method)
            total += n
            out.append(y.copy())
        return np.array(out), total

    columns, steps = run(step)
    norms0 = np.linalg.norm(y0, axis=0)
    drift = float(np.max(np.abs(np.linalg.norm(columns[-1], axis=0) - norms0)))

    overlap: Optional[float] = None
    if config.convergence_check:
        half, _ = run(step / 2)
        a, b = columns[-1], half[-1]
        per_col = np.abs(np.sum(a.conj() * b, axis=0)) ** 2 / norms0**4
        overlap = float(per_col.min())

    report = PropagationReport(
        duration_us=duration,
        steps=steps,
        step_us=step,
        method=config.method,
        norm_drift=drift,
        convergence_overlap=overlap,
        wall_clock_s=time.perf_counter() - start,
    )
    tolerance = config.norm_tolerance * max(1.0, duration)
    if drift > tolerance:
        logger.error("norm_drift_exceeded", drift=drift, tolerance=tolerance, method=config.method)
        raise IntegrationError(drift, tolerance, f"{steps} steps of {step:.3e} us")
    logger.debug(
        "propagation_done",
        duration_us=duration,
        steps=steps,
        norm_drift=drift,
        convergence_overlap=overlap,
    )
    return Trajectory(times=times, columns=columns, report=report)


def propagate(
    state: StateVector,
    hamiltonian: HamiltonianSource,
    duration: float,
    config: PropagationConfig,
    watch: Optional[np.ndarray] = None,
) -> Tuple[StateVector, PropagationReport]:
    """Integrate the Schroedinger equation for one state over its whole space.

    ``watch`` is a boolean mask of basis indices whose population counts as
    truncation leakage.
    """
    if hamiltonian.dim != state.space.dim:
        raise DimensionError(
            f"Hamiltonian dimension {hamiltonian.dim} does not match state dimension {state.space.dim}"
        )
    samples = np.linspace(0.0, duration, config.samples) if watch is not None and duration > 0 else None
    traj = evolve_operator(hamiltonian, duration, config, sample_times=samples, initial=state.amplitudes)
    final = traj.columns[-1][:, 0]
    report = traj.report
    if watch is not None:
        leakage = float((np.abs(traj.columns[:, :, 0]) ** 2)[:, watch].sum(axis=1).max())
        check_leakage(leakage, config)
        report = report.model_copy(update={"leakage": leakage})
    return StateVector.normalized(state.space, final), report


def check_leakage(leakage: float, config: PropagationConfig) -> None:
    if leakage > config.leakage_tolerance:
        logger.error("leakage_exceeded", leakage=leakage, tolerance=config.leakage_tolerance)
        raise LeakageError(leakage, config.leakage_tolerance)
    if leakage > 0.1 * config.leakage_tolerance:
        logger.warning("leakage_near_tolerance", leakage=leakage, tolerance=config.leakage_tolerance)


def detuned_frame(
    params: DeviceParams, dim_A: int, k: int = 0, detuning: Optional[float] = None
) -> np.ndarray:
    """Eigenvectors of the pair with the qubit ``detuning`` above A.

    Column ``2*m + s`` is the eigenstate continuous with bare |m, s> as the
    detuning grows; ``detuning`` defaults to the ramp start.
    """
    delta = params.delta_start if detuning is None else detuning
    g = params.coupling(k)
    frame = np.eye(2 * dim_A, dtype=complex)
    for m in range(1, dim_A):
        # manifold {|m,0>, |m-1,1>}, tan(2 phi) = 2 g sqrt(m) / delta
        phi = 0.5 * math.atan2(2 * g * math.sqrt(m), delta)
        lo, hi = 2 * m, 2 * m - 1
        c, s = math.cos(phi), math.sin(phi)
        frame[lo, lo], frame[hi, lo] = c, -s
        frame[lo, hi], frame[hi, hi] = s, c
    return frame


def ramp_operator(
    direction: Literal["in", "out"],
    params: DeviceParams,
    dim_A: int,
    k: int = 0,
    config: Optional[PropagationConfig] = None,
) -> Tuple[np.ndarray, PropagationReport]:
    """Bare-coordinate propagator of one adiabatic ramp.

    Bare labels stand for the idle eigenstates at the start detuning. The
    phase each level picks up along the sweep is removed, so a perfectly
    adiabatic ramp reproduces the ideal dressing exchange.
    """
    config = config or PropagationConfig()
    # the sweep generator has a large diagonal; rk4 drifts on it
    ramp_config = config.model_copy(update={"method": "expm", "step": None})
    source = RampHamiltonian(direction, params, dim_A, k)
    traj = evolve_operator(source, params.tau_ad, ramp_config)
    sweep = traj.columns[-1]
    frame = detuned_frame(params, dim_A, k)
    ideal = DressedBasis(dim_A, params, k).dressing_unitary
    if direction == "in":
        u = sweep @ frame
        phases = np.angle(np.einsum("ij,ij->j", ideal.conj(), u))
        u = u * np.exp(-1j * phases)[None, :]
    else:
        u = frame.conj().T @ sweep
        phases = np.angle(np.diag(u @ ideal))
        u = np.exp(-1j * phases)[:, None] * u
    report = traj.report
    if not params.is_adiabatic:
        message = f"adiabaticity ratio {params.adiabatic_ratio:.3g} above {ADIABATIC_RATIO_LIMIT}"
        logger.warning("ramp_not_adiabatic", ratio=params.adiabatic_ratio, k=k)
        report = report.model_copy(update={"warnings": [*report.warnings, message]})
    return u, report


def dressing_map(
    state: StateVector,
    k: int,
    direction: Direction,
    mode: DressingMode = "ideal",
    params: Optional[DeviceParams] = None,
    config: Optional[PropagationConfig] = None,
    register: str = "q",
) -> StateVector:
    """Exchange bare and dressed labels of the pair (A, qubit k).

    Ideal mode applies the exact basis exchange |m,0> <-> |m,->, |m,1> <-> |m+1,+>.
    Ramp mode propagates the physical detuning sweep instead.
    """
    dim_A = state.space.factor("A").dim
    keys = ["A", f"{register}{k}"]
    if mode == "ideal":
        basis = DressedBasis(dim_A, params or _unit_params(), k)
        op = basis.dressing_unitary
        if direction == "dressed_to_bare":
            op = op.conj().T
        return apply_local(state, op, keys)
    if params is None:
        raise PreconditionError("Ramp dressing needs device parameters")
    ramp, _ = ramp_operator("in" if direction == "bare_to_dressed" else "out", params, dim_A, k, config)
    return apply_local(state, ramp, keys)


def _unit_params() -> DeviceParams:
    return DeviceParams(omega_A=1.0, omega_B=1.0, g=1.0)
