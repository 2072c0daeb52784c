"""Multi-frequency control fields for the transfer steps.

Step ``k >= 1`` drives one perfect-transfer chain of ``2**k`` dressed levels
per occupied photon number; step ``k = 0`` uses a photon-preserving
three-level chain. Every chain link gets its own comb line.
"""

import math
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .dynamics import DeviceParams, DressedBasis, Sign, dressed_energy
from .exceptions import DimensionError, PreconditionError, SynthesisError

DEFAULT_GUARD_BAND = 10.0


class DriveComponent(BaseModel):
    """One comb line A cos(omega t)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    amplitude: float = Field(..., description="Signed amplitude (rad/us)")
    frequency: float = Field(..., gt=0, description="Angular frequency (rad/us)")
    transition: Tuple[str, str] = Field(..., description="Dressed levels linked by this line")
    m: int = Field(..., ge=0, description="Photon number the chain starts from")
    l: int = Field(..., ge=1, description="Chain link index")

    @property
    def label(self) -> str:
        return f"({self.transition[0]})->({self.transition[1]})"


class OccupiedSet(BaseModel):
    """Photon numbers that may be occupied when step ``k`` starts."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(..., ge=1)
    k: int = Field(..., ge=0)
    photons: Tuple[int, ...] = Field(...)

    @model_validator(mode="after")
    def _check(self) -> "OccupiedSet":
        if self.k >= self.n:
            raise ValueError(f"Step {self.k} out of range for {self.n} qubits")
        allowed = {j * 2 ** (self.k + 1) for j in range(2 ** (self.n - 1 - self.k))}
        if not set(self.photons) <= allowed:
            raise ValueError(f"Photon numbers {sorted(set(self.photons) - allowed)} not reachable before step {self.k}")
        if list(self.photons) != sorted(set(self.photons)):
            raise ValueError("Photon numbers must be sorted and unique")
        return self

    @property
    def stride(self) -> int:
        return 2**self.k

    @property
    def targets(self) -> Tuple[int, ...]:
        return tuple(m + self.stride for m in self.photons)


class DrivePulse(BaseModel):
    """Control field f_k(t) applied for tau_map = pi/Omega (plus an optional timing offset)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    k: int = Field(..., ge=0, description="Active qubit")
    components: Tuple[DriveComponent, ...] = Field(..., min_length=1)
    omega_ref: float = Field(..., gt=0, description="Omega (rad/us)")
    tau_map: float = Field(..., gt=0, description="Nominal window pi/Omega (us)")
    timing_offset: float = Field(default=0.0, description="Timing jitter added to the window (us)")
    guard_band: float = Field(default=0.0, ge=0, description="Minimum line separation (rad/us)")

    @model_validator(mode="after")
    def _check(self) -> "DrivePulse":
        if abs(self.tau_map * self.omega_ref - math.pi) > 1e-12 * math.pi:
            raise ValueError("tau_map must equal pi/Omega")
        if abs(self.timing_offset) >= self.tau_map:
            raise ValueError("Timing offset must be smaller than the nominal window")
        return self

    @property
    def duration(self) -> float:
        return self.tau_map + self.timing_offset

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([c.frequency for c in self.components])

    def with_offset(self, offset: float) -> "DrivePulse":
        return DrivePulse.model_validate({**self.model_dump(), "timing_offset": offset})


class Clearance(NamedTuple):
    """Closest approach of a comb line to a transition it should not drive."""

    distance: float
    component: str
    transition: str


def occupied_photon_numbers(n: int, k: int) -> OccupiedSet:
    """{0, 2^(k+1), ..., (2^(n-k-1) - 1) 2^(k+1)}."""
    if n < 1 or not 0 <= k < n:
        raise DimensionError(f"Step {k} out of range for {n} qubits")
    stride = 2 ** (k + 1)
    return OccupiedSet(n=n, k=k, photons=tuple(j * stride for j in range(2 ** (n - 1 - k))))


def _level(m: int, sign: Sign) -> str:
    return "0" if m == 0 else f"{m},{sign}"


def transfer_frequencies(k: int, m: int, params: DeviceParams) -> List[Tuple[int, float]]:
    """(l, omega_{m,l}) for l = 1 .. 2^k - 1, alternating the dressed branch with parity."""
    if k < 1:
        raise PreconditionError("Step k = 0 uses the photon-preserving drive")
    out = []
    for l in range(1, 2**k):
        if l % 2 == 0:
            w = dressed_energy(m + l + 1, "+", params, k) - dressed_energy(m + l, "-", params, k)
        else:
            w = dressed_energy(m + l + 1, "-", params, k) - dressed_energy(m + l, "+", params, k)
        out.append((l, w))
    return out


def _check_guard_band(components: Sequence[DriveComponent], guard_band: float) -> None:
    ordered = sorted(components, key=lambda c: c.frequency)
    for a, b in zip(ordered[:-1], ordered[1:]):
        separation = b.frequency - a.frequency
        if separation < guard_band:
            raise SynthesisError((a.label, b.label), separation, guard_band)


def _component(amplitude: float, frequency: float, lower: str, upper: str, m: int, l: int) -> DriveComponent:
    if frequency <= 0:
        raise PreconditionError(
            f"Transition {lower} -> {upper} has non-positive frequency {frequency:.4g} rad/us",
            "the resonator frequency is too low for this coupling",
        )
    return DriveComponent(amplitude=amplitude, frequency=frequency, transition=(lower, upper), m=m, l=l)


def synthesize_transfer_drive(
    k: int,
    occupied: OccupiedSet,
    omega: float,
    params: DeviceParams,
    guard_band_factor: float = DEFAULT_GUARD_BAND,
) -> DrivePulse:
    """Comb with amplitudes (-1)^(l-1) 2 Omega sqrt(l (2^k - l)), one chain per occupied m."""
    if k < 1:
        raise PreconditionError("Step k = 0 uses the photon-preserving drive")
    if occupied.k != k:
        raise PreconditionError(f"Occupied set belongs to step {occupied.k}, not {k}")
    components = []
    size = 2**k
    for m in occupied.photons:
        for l, w in transfer_frequencies(k, m, params):
            if l % 2 == 0:
                lower, upper = _level(m + l, "-"), _level(m + l + 1, "+")
            else:
                lower, upper = _level(m + l, "+"), _level(m + l + 1, "-")
            amp = (-1) ** (l - 1) * 2 * omega * math.sqrt(l * (size - l))
            components.append(_component(amp, w, lower, upper, m, l))
    guard = guard_band_factor * omega
    _check_guard_band(components, guard)
    return DrivePulse(
        k=k, components=tuple(components), omega_ref=omega, tau_map=math.pi / omega, guard_band=guard
    )


def synthesize_photon_preserving_drive(
    occupied: OccupiedSet,
    omega: float,
    params: DeviceParams,
    guard_band_factor: float = DEFAULT_GUARD_BAND,
) -> DrivePulse:
    """Two lines per m0 closing the chain (m0+1,+) -> (m0+2,+) -> (m0+1,-)."""
    if occupied.k != 0:
        raise PreconditionError("The photon-preserving drive belongs to step k = 0")
    components = []
    amp = 2 * math.sqrt(2) * omega
    for m0 in occupied.photons:
        top = dressed_energy(m0 + 2, "+", params, 0)
        w_plus = top - dressed_energy(m0 + 1, "+", params, 0)
        w_one = top - dressed_energy(m0 + 1, "-", params, 0)
        components.append(_component(-amp, w_plus, _level(m0 + 1, "+"), _level(m0 + 2, "+"), m0, 1))
        components.append(_component(amp, w_one, _level(m0 + 1, "-"), _level(m0 + 2, "+"), m0, 2))
    guard = guard_band_factor * omega
    _check_guard_band(components, guard)
    return DrivePulse(
        k=0, components=tuple(components), omega_ref=omega, tau_map=math.pi / omega, guard_band=guard
    )


def perfect_chain_couplings(node_count: int, omega: float) -> List[float]:
    """(Omega/2) sqrt(l (N - l)) for l = 1 .. N-1."""
    if node_count < 2:
        raise PreconditionError("A transfer chain needs at least two nodes")
    return [0.5 * omega * math.sqrt(l * (node_count - l)) for l in range(1, node_count)]


def chain_hamiltonian(node_count: int, omega: float) -> np.ndarray:
    couplings = perfect_chain_couplings(node_count, omega)
    return np.diag(couplings, 1) + np.diag(couplings, -1)


def chain_transfer_amplitude(node_count: int, omega: float, t: float) -> complex:
    """<N| exp(-i H t) |1> of the perfect chain."""
    w, v = np.linalg.eigh(chain_hamiltonian(node_count, omega))
    return complex((v[-1, :] * np.exp(-1j * w * t)) @ v[0, :].conj())


def evaluate_pulse(pulse: DrivePulse, t: float) -> float:
    """f_k(t) = sum of A cos(omega t) over the comb."""
    if t < 0 or t > pulse.duration + 1e-12:
        raise PreconditionError(f"Time {t} outside the drive window [0, {pulse.duration}]")
    return float(sum(c.amplitude * math.cos(c.frequency * t) for c in pulse.components))


def pulse_average(pulse: DrivePulse, t0: float, t1: float) -> float:
    """Closed-form mean of f_k over [t0, t1]."""
    if t1 <= t0:
        raise PreconditionError("Averaging window must have positive length")
    total = sum(
        c.amplitude * (math.sin(c.frequency * t1) - math.sin(c.frequency * t0)) / c.frequency
        for c in pulse.components
    )
    return total / (t1 - t0)


def spectator_clearance(pulse: DrivePulse, params: DeviceParams, dim_A: int) -> Clearance:
    """Smallest distance between a comb line and a coupled transition that is not a chain link."""
    basis = DressedBasis(dim_A, params, pulse.k)
    coupling = basis.drive_matrix()
    links = {frozenset(c.transition) for c in pulse.components}
    best = Clearance(math.inf, "", "")
    labels = [lvl.label for lvl in basis.levels]
    for j1 in range(basis.dim):
        for j2 in range(j1 + 1, basis.dim):
            if coupling[j1, j2] == 0:
                continue
            pair = frozenset((labels[j1], labels[j2]))
            if pair in links:
                continue
            gap = abs(basis.energies[j1] - basis.energies[j2])
            for c in pulse.components:
                d = abs(c.frequency - gap)
                if d < best.distance:
                    best = Clearance(d, c.label, f"({labels[j1]})<->({labels[j2]})")
    return best
