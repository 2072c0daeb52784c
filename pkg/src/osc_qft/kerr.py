"""Cross-Kerr Fourier transform between resonators A and B.

The interaction chi a^dag a b^dag b is diagonal in the joint Fock basis, so
evolution is applied as exact phases. Waiting tau_2 with chi tau_2 = -2 pi/q
(mod 2 pi) turns |m>_A |uniform>_B into |m>_A |F(m)>_B.
"""

import cmath
import math
from typing import List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import eval_genlaguerre, gammaln

from .exceptions import DimensionError, PreconditionError
from .hilbert import (
    CompositeSpace,
    DensityMatrix,
    FockSpace,
    Projection,
    QubitRegister,
    StateVector,
    partial_trace,
    project,
    tensor,
)
from .models import WignerGrid
from .transfer import InverseMode, TransferSimulator

logger = structlog.get_logger(__name__)

Direction = Literal["forward", "inverse"]

TRUNCATION_WARNING = 1e-4
DEFAULT_EXTENT = 4.0
DEFAULT_RESOLUTION = 81


class KerrConfig(BaseModel):
    """Cross-Kerr rate and timing choice."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    chi: float = Field(..., description="chi_AB (rad/us, signed)")
    winding: int = Field(default=0, ge=0, description="Extra 2 pi turns of the phase")
    direction: Direction = Field(default="forward")

    @field_validator("chi")
    @classmethod
    def _nonzero(cls, v: float) -> float:
        if v == 0:
            raise ValueError("chi must be nonzero")
        return v


class QftResult(NamedTuple):
    """Post-selected B state, its probability, and the joint state before projection."""

    b_state: Optional[StateVector]
    probability: float
    joint: StateVector


class DisentangleResult(NamedTuple):
    """B conditioned on the qubit projection and on A returning to vacuum."""

    b_state: Optional[StateVector]
    probability: float
    vacuum_population: float


def _smallest_winding(q: int, chi: float, direction: Direction) -> Optional[int]:
    base = -2 * math.pi / q if direction == "forward" else 2 * math.pi / q
    for k in range(0, q + 3):
        if (base + 2 * k * math.pi) / chi > 0:
            return k
    return None


def qft_duration(q: int, config: KerrConfig) -> float:
    """tau_2 = (-+2 pi/q + 2 k pi)/chi in us."""
    if q < 1:
        raise DimensionError("Transform size q must be >= 1")
    base = -2 * math.pi / q if config.direction == "forward" else 2 * math.pi / q
    tau = (base + 2 * config.winding * math.pi) / config.chi
    if tau <= 0:
        valid = _smallest_winding(q, config.chi, config.direction)
        hint = f"use winding {valid}" if valid is not None else "flip the sign of chi"
        if valid is not None and valid < config.winding:
            hint += " or flip the sign of chi"
        raise PreconditionError(
            f"Winding {config.winding} gives a non-positive Kerr time {tau:.4g} us",
            hint,
        )
    return tau


def _fock_axis(space: CompositeSpace, label: str) -> int:
    factor = space.factor(label)
    if not isinstance(factor, FockSpace):
        raise DimensionError(f"Factor '{label}' is not a resonator")
    return space.factor_position(label)


def kerr_evolve(joint: StateVector, chi: float, t: float) -> StateVector:
    """Multiply |m>_A |n>_B by exp(-i chi t m n); other factors are spectators."""
    space = joint.space
    a_pos, b_pos = _fock_axis(space, "A"), _fock_axis(space, "B")
    dims = space.factor_dims
    shape = [1] * len(dims)
    shape[a_pos] = dims[a_pos]
    m = np.arange(dims[a_pos]).reshape(shape)
    shape = [1] * len(dims)
    shape[b_pos] = dims[b_pos]
    n = np.arange(dims[b_pos]).reshape(shape)
    phases = np.exp(-1j * chi * t * (m * n))
    psi = joint.amplitudes.reshape(dims) * phases
    return StateVector(space=space, amplitudes=psi.reshape(-1))


def prepare_uniform_B(q: int, dim: Optional[int] = None) -> StateVector:
    """(1/sqrt q) sum_{n<q} |n>_B, optionally inside a larger truncation."""
    if q < 1:
        raise DimensionError("Transform size q must be >= 1")
    dim = dim or q
    if dim < q:
        raise DimensionError(f"B truncation {dim} below q = {q}")
    amps = np.zeros(dim, dtype=complex)
    amps[:q] = 1 / math.sqrt(q)
    return StateVector(space=CompositeSpace.of(FockSpace(dim=dim, label="B")), amplitudes=amps)


def dft_oracle(c: Sequence[complex], direction: Direction = "forward") -> np.ndarray:
    """Direct evaluation of sum_m c_m exp(+-i 2 pi m n/q)/sqrt(q)."""
    values = [complex(v) for v in c]
    q = len(values)
    if q < 1:
        raise DimensionError("dft_oracle needs at least one amplitude")
    sign = 1.0 if direction == "forward" else -1.0
    scale = 1 / math.sqrt(q)
    out = []
    for n in range(q):
        acc = 0j
        for m, cm in enumerate(values):
            acc += cm * cmath.exp(sign * 2j * math.pi * m * n / q)
        out.append(acc * scale)
    return np.array(out, dtype=complex)


def uniform_vector(dim: int, q: int) -> np.ndarray:
    vec = np.zeros(dim, dtype=complex)
    vec[:q] = 1 / math.sqrt(q)
    return vec


def project_uniform(joint: StateVector, factor: str = "A", q: Optional[int] = None) -> Projection:
    """Project ``factor`` onto |p> = sum_{m<q} |m>/sqrt(q)."""
    dim = joint.space.factor(factor).dim
    q = q or dim
    if q > dim:
        raise DimensionError(f"Uniform projector over {q} levels exceeds dimension {dim}")
    return project(joint, factor, uniform_vector(dim, q))


def run_qft(state: StateVector, config: KerrConfig, q: Optional[int] = None) -> QftResult:
    """Entangle ``state`` (any space holding A) with a uniform B and post-select A on |p>."""
    dim_a = state.space.factor("A").dim
    q = q or dim_a
    if q > dim_a:
        raise DimensionError(f"q = {q} exceeds the A truncation {dim_a}")
    tau = qft_duration(q, config)
    joint = kerr_evolve(tensor(state, prepare_uniform_B(q)), config.chi, tau)
    projection = project_uniform(joint, "A", q)
    logger.info(
        "qft_done",
        q=q,
        direction=config.direction,
        tau_2_us=tau,
        probability=projection.probability,
    )
    return QftResult(b_state=projection.state, probability=projection.probability, joint=joint)


def _with_register(joint: StateVector, n: int) -> StateVector:
    """Insert a qubit register in |0...0> between A and B."""
    space = joint.space
    if space.labels != ["A", "B"]:
        raise DimensionError(f"Expected factors ['A', 'B'], got {space.labels}")
    dim_a, dim_b = space.factor_dims
    amps = np.zeros((dim_a, 2**n, dim_b), dtype=complex)
    amps[:, 0, :] = joint.amplitudes.reshape(dim_a, dim_b)
    full = CompositeSpace.of(space.factor("A"), QubitRegister(n=n, label="q"), space.factor("B"))
    return StateVector(space=full, amplitudes=amps.reshape(-1))


def physical_disentangle(
    joint: StateVector,
    simulator: TransferSimulator,
    mode: InverseMode = "physical",
) -> DisentangleResult:
    """Reverse the transfer, measure every qubit along X and keep A's vacuum branch."""
    n = simulator.plan.n
    if "q" not in joint.space.labels:
        joint = _with_register(joint, n)
    if joint.space.factor("A").dim != simulator.dim_A:
        raise DimensionError(
            f"A truncation {joint.space.factor('A').dim} differs from the plan's {simulator.dim_A}"
        )
    back, _ = simulator.inverse(joint, mode)
    plus = np.full(2**n, 1 / math.sqrt(2**n), dtype=complex)
    measured = project(back, "q", plus)
    if measured.state is None:
        return DisentangleResult(None, 0.0, 0.0)
    vacuum = np.zeros(simulator.dim_A, dtype=complex)
    vacuum[0] = 1.0
    conditioned = project(measured.state, "A", vacuum)
    logger.info(
        "disentangle_done",
        mode=mode,
        probability=measured.probability,
        vacuum_population=conditioned.probability,
    )
    return DisentangleResult(conditioned.state, measured.probability, conditioned.probability)


def reduced_b_state(joint: StateVector, t: float, chi: float) -> DensityMatrix:
    """B's reduced state after Kerr evolution for ``t`` us."""
    return partial_trace(kerr_evolve(joint, chi, t), ["B"])


def _wigner_terms(dim: int, alpha: np.ndarray) -> List[Tuple[int, int, np.ndarray]]:
    r2 = np.abs(alpha) ** 2
    gauss = np.exp(-2 * r2)
    terms = []
    for m in range(dim):
        for n in range(m + 1):
            d = m - n
            norm = math.exp(0.5 * (gammaln(n + 1) - gammaln(m + 1)))
            w = (2 / math.pi) * (-1) ** n * norm * (2 * np.conj(alpha)) ** d * gauss
            w = w * eval_genlaguerre(n, d, 4 * r2)
            terms.append((m, n, w))
    return terms


def wigner_grid(
    rho: DensityMatrix,
    x_range: Tuple[float, float] = (-DEFAULT_EXTENT, DEFAULT_EXTENT),
    p_range: Tuple[float, float] = (-DEFAULT_EXTENT, DEFAULT_EXTENT),
    resolution: int = DEFAULT_RESOLUTION,
) -> WignerGrid:
    """W(alpha) = (2/pi) Tr[rho D(alpha) P D(alpha)^dag] with alpha = x + i p.

    Uses the Laguerre closed form of each |m><n| contribution. A warning is
    logged and flagged on the grid when the top two Fock levels hold more
    than 1e-4 population.
    """
    if len(rho.space.factors) != 1 or not isinstance(rho.space.factors[0], FockSpace):
        raise DimensionError("wigner_grid needs a single resonator density matrix")
    if resolution < 2:
        raise PreconditionError("Wigner grid needs at least two points per axis")
    dim = rho.space.dim
    pops = rho.populations()
    top = float(pops[-2:].sum())
    truncated = top > TRUNCATION_WARNING
    if truncated:
        logger.warning("wigner_truncation", top_population=top, threshold=TRUNCATION_WARNING)

    x = np.linspace(x_range[0], x_range[1], resolution)
    p = np.linspace(p_range[0], p_range[1], resolution)
    alpha = x[None, :] + 1j * p[:, None]
    w = np.zeros(alpha.shape, dtype=float)
    for m, n, term in _wigner_terms(dim, alpha):
        if m == n:
            w += float(rho.matrix[m, m].real) * term.real
        else:
            w += 2 * np.real(rho.matrix[m, n] * term)
    return WignerGrid(
        x=[float(v) for v in x],
        p=[float(v) for v in p],
        values=[[float(v) for v in row] for row in w],
        top_population=top,
        truncated=truncated,
    )


def embed_density(rho: DensityMatrix, dim: int) -> DensityMatrix:
    """Same single-resonator state in a larger truncation (zero population above)."""
    factor = rho.space.factors[0]
    if dim < factor.dim:
        raise DimensionError(f"Cannot embed dimension {factor.dim} into {dim}")
    matrix = np.zeros((dim, dim), dtype=complex)
    matrix[: factor.dim, : factor.dim] = rho.matrix
    space = CompositeSpace.of(FockSpace(dim=dim, label=factor.label))
    return DensityMatrix(space=space, matrix=matrix)


def wigner_snapshots(
    joint: StateVector,
    chi: float,
    tau_2: float,
    fractions: Sequence[float] = (0.0, 0.5, 1.0),
    pad: int = 2,
) -> List[Tuple[float, WignerGrid]]:
    """Wigner grids of B at the given fractions of the Kerr window.

    The exact Kerr map never leaves the first q levels of B, so B is embedded
    with ``pad`` empty levels before evaluating.
    """
    out = []
    for f in fractions:
        rho = reduced_b_state(joint, f * tau_2, chi)
        out.append((f * tau_2, wigner_grid(embed_density(rho, rho.space.dim + pad))))
    return out
