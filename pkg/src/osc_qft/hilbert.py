"""Fock-space and qubit tensor algebra.

States and operators are dense complex arrays over an ordered product of
factors. A factor is either a truncated Fock space (one elementary subsystem)
or a qubit register (one elementary subsystem per qubit). Inside a register
qubit ``n-1`` comes first, so the register index of a basis string
``b_{n-1}...b_0`` is its decimal value ``sum(b_k * 2**k)``.
"""

import math
from typing import List, Literal, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .exceptions import DimensionError, PreconditionError

NORM_TOLERANCE = 1e-9
# integrated step maps are unitary only to the propagator tolerance
UNITARITY_TOLERANCE = 1e-6
ZERO_PROBABILITY = 1e-14

PauliKind = Literal["x", "y", "z", "plus", "minus"]

# Excitation basis (|0> ground, |1> excited); sigma_z raises the excited level.
_SIGMA = {
    "plus": np.array([[0, 0], [1, 0]], dtype=complex),
    "minus": np.array([[0, 1], [0, 0]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
}


class FockSpace(BaseModel):
    """Truncated harmonic-oscillator space."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    dim: int = Field(..., ge=1, description="Truncation dimension")
    label: str = Field(default="A", min_length=1, description="Resonator tag")

    @property
    def subsystems(self) -> List[Tuple[str, int]]:
        return [(self.label, self.dim)]


class QubitRegister(BaseModel):
    """Register of ``n`` two-level systems; qubit ``k`` carries bit ``b_k``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(..., ge=1, description="Number of qubits")
    label: str = Field(default="q", min_length=1, description="Register tag")

    @property
    def dim(self) -> int:
        return 2**self.n

    def key(self, k: int) -> str:
        """Return the subsystem key of qubit ``k``."""
        if not 0 <= k < self.n:
            raise DimensionError(f"Qubit index {k} out of range for {self.n} qubits")
        return f"{self.label}{k}"

    @property
    def subsystems(self) -> List[Tuple[str, int]]:
        return [(self.key(k), 2) for k in reversed(range(self.n))]


Factor = Union[FockSpace, QubitRegister]


class CompositeSpace(BaseModel):
    """Ordered tensor product of factors; the order is fixed at construction."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    factors: Tuple[Factor, ...] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _unique_keys(self) -> "CompositeSpace":
        labels = [f.label for f in self.factors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"Factor labels must be unique, got {labels}")
        keys = self.keys
        if len(set(keys)) != len(keys):
            raise ValueError(f"Subsystem keys collide: {keys}")
        return self

    @classmethod
    def of(cls, *factors: Factor) -> "CompositeSpace":
        return cls(factors=tuple(factors))

    @property
    def keys(self) -> List[str]:
        return [key for f in self.factors for key, _ in f.subsystems]

    @property
    def dims(self) -> List[int]:
        return [d for f in self.factors for _, d in f.subsystems]

    @property
    def factor_dims(self) -> List[int]:
        return [f.dim for f in self.factors]

    @property
    def labels(self) -> List[str]:
        return [f.label for f in self.factors]

    @property
    def dim(self) -> int:
        return math.prod(self.factor_dims)

    def axis(self, key: str) -> int:
        """Position of an elementary subsystem in the reshaped amplitude tensor."""
        try:
            return self.keys.index(key)
        except ValueError:
            raise DimensionError(f"Unknown subsystem '{key}'", f"available: {self.keys}")

    def factor(self, label: str) -> Factor:
        for f in self.factors:
            if f.label == label:
                return f
        raise DimensionError(f"Unknown factor '{label}'", f"available: {self.labels}")

    def factor_position(self, label: str) -> int:
        return self.labels.index(self.factor(label).label)

    def without(self, labels: Sequence[str]) -> "CompositeSpace":
        kept = tuple(f for f in self.factors if f.label not in labels)
        if not kept:
            raise DimensionError("Cannot remove every factor of a composite space")
        return CompositeSpace(factors=kept)

    def restricted(self, labels: Sequence[str]) -> "CompositeSpace":
        for label in labels:
            self.factor(label)
        return CompositeSpace(factors=tuple(f for f in self.factors if f.label in labels))

    def index(self, occupations: Sequence[Union[int, str]]) -> int:
        """Mixed-radix index of a product basis state (one occupation per factor)."""
        if len(occupations) != len(self.factors):
            raise DimensionError(
                f"Expected {len(self.factors)} occupations, got {len(occupations)}"
            )
        digits = []
        for factor, occ in zip(self.factors, occupations):
            if isinstance(occ, str):
                if not isinstance(factor, QubitRegister) or len(occ) != factor.n:
                    raise DimensionError(f"Bitstring '{occ}' does not fit factor {factor.label}")
                if set(occ) - {"0", "1"}:
                    raise DimensionError(f"Invalid bitstring '{occ}'")
                occ = bits_to_int(occ)
            if not 0 <= occ < factor.dim:
                raise DimensionError(
                    f"Occupation {occ} out of range for factor {factor.label}",
                    f"dimension {factor.dim}",
                )
            digits.append(int(occ))
        return int(np.ravel_multi_index(tuple(digits), tuple(self.factor_dims)))

    def occupations(self, index: int) -> Tuple[int, ...]:
        if not 0 <= index < self.dim:
            raise DimensionError(f"Index {index} out of range for dimension {self.dim}")
        return tuple(int(i) for i in np.unravel_index(index, tuple(self.factor_dims)))

    def basis_label(self, index: int) -> str:
        """Readable label such as ``A=4|q=011``."""
        parts = []
        for factor, occ in zip(self.factors, self.occupations(index)):
            if isinstance(factor, QubitRegister):
                parts.append(f"{factor.label}={occ:0{factor.n}b}")
            else:
                parts.append(f"{factor.label}={occ}")
        return "|".join(parts)


def bits_to_int(bitstring: str) -> int:
    """Decimal value of ``b_{n-1}...b_0`` (rightmost bit is qubit 0)."""
    return int(bitstring, 2) if bitstring else 0


class StateVector(BaseModel):
    """Normalized complex amplitudes over a composite space."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    space: CompositeSpace
    amplitudes: np.ndarray

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _as_array(cls, v: object) -> np.ndarray:
        arr = np.array(v, dtype=complex).reshape(-1)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check(self) -> "StateVector":
        if self.amplitudes.shape != (self.space.dim,):
            raise DimensionError(
                f"Amplitude vector of length {self.amplitudes.size}"
                f" does not match space dimension {self.space.dim}"
            )
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise PreconditionError("State vector is not normalized", f"norm = {norm:.12f}")
        return self

    @classmethod
    def normalized(cls, space: CompositeSpace, amplitudes: np.ndarray) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise PreconditionError("Cannot normalize a zero vector")
        return cls(space=space, amplitudes=amps / norm)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.space.dims)


class DensityMatrix(BaseModel):
    """Hermitian, unit-trace, positive semidefinite matrix over a composite space."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    space: CompositeSpace
    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def _as_array(cls, v: object) -> np.ndarray:
        arr = np.array(v, dtype=complex)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check(self) -> "DensityMatrix":
        d = self.space.dim
        if self.matrix.shape != (d, d):
            raise DimensionError(f"Matrix shape {self.matrix.shape} does not match dimension {d}")
        if not np.allclose(self.matrix, self.matrix.conj().T, atol=1e-12):
            raise PreconditionError("Density matrix is not Hermitian")
        trace = float(np.trace(self.matrix).real)
        if abs(trace - 1.0) > NORM_TOLERANCE:
            raise PreconditionError("Density matrix trace differs from one", f"trace = {trace:.12f}")
        if np.linalg.eigvalsh(self.matrix).min() < -NORM_TOLERANCE:
            raise PreconditionError("Density matrix has a negative eigenvalue")
        return self

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()


class Projection(NamedTuple):
    """Outcome of a Born-rule projection; ``state`` is None when the outcome is impossible."""

    state: Optional[StateVector]
    probability: float


def basis_state(space: CompositeSpace, occupations: Sequence[Union[int, str]]) -> StateVector:
    """Product basis state with one occupation per factor (ints, or bitstrings for registers)."""
    amps = np.zeros(space.dim, dtype=complex)
    amps[space.index(occupations)] = 1.0
    return StateVector(space=space, amplitudes=amps)


def tensor(*states: StateVector) -> StateVector:
    """Product state over the concatenated factors."""
    if not states:
        raise DimensionError("tensor() needs at least one state")
    factors: Tuple[Factor, ...] = ()
    amps = np.ones(1, dtype=complex)
    for s in states:
        factors += s.space.factors
        amps = np.kron(amps, s.amplitudes)
    return StateVector(space=CompositeSpace(factors=factors), amplitudes=amps)


def ladder_operator(space: FockSpace, kind: Literal["raise", "lower"]) -> np.ndarray:
    """Truncated creation or annihilation operator; lower has sqrt(m) at (m-1, m)."""
    if space.dim < 2:
        raise DimensionError("Ladder operators need a Fock space of dimension >= 2")
    lower = np.diag(np.sqrt(np.arange(1, space.dim, dtype=float)), k=1).astype(complex)
    if kind == "lower":
        return lower
    if kind == "raise":
        return lower.conj().T
    raise PreconditionError(f"Unknown ladder kind '{kind}'")


def number_operator(space: FockSpace) -> np.ndarray:
    return np.diag(np.arange(space.dim, dtype=float)).astype(complex)


def single_qubit_operator(kind: PauliKind) -> np.ndarray:
    try:
        return _SIGMA[kind].copy()
    except KeyError:
        raise PreconditionError(f"Unknown Pauli kind '{kind}'")


def pauli_operator(register: QubitRegister, k: int, kind: PauliKind) -> np.ndarray:
    """Pauli (or ladder) operator on qubit ``k``, identity on the other qubits."""
    register.key(k)
    local = single_qubit_operator(kind)
    op = np.ones((1, 1), dtype=complex)
    for j in reversed(range(register.n)):
        op = np.kron(op, local if j == k else np.eye(2, dtype=complex))
    return op


def apply_local_array(
    space: CompositeSpace,
    amplitudes: np.ndarray,
    operator: np.ndarray,
    keys: Sequence[str],
) -> np.ndarray:
    """Apply ``operator`` to the listed elementary subsystems of a raw amplitude array.

    ``amplitudes`` may carry trailing columns (shape ``(dim, c)``); each column
    is transformed independently.
    """
    axes = [space.axis(k) for k in keys]
    dims = space.dims
    local_dim = math.prod(dims[a] for a in axes)
    if operator.shape != (local_dim, local_dim):
        raise DimensionError(
            f"Operator shape {operator.shape} does not act on {list(keys)}",
            f"expected ({local_dim}, {local_dim})",
        )
    extra = amplitudes.shape[1:]
    psi = np.asarray(amplitudes).reshape(tuple(dims) + extra)
    front = list(range(len(axes)))
    psi = np.moveaxis(psi, axes, front)
    moved_shape = psi.shape
    psi = (operator @ psi.reshape(local_dim, -1)).reshape(moved_shape)
    psi = np.moveaxis(psi, front, axes)
    return psi.reshape((space.dim,) + extra)


def apply_local(state: StateVector, operator: np.ndarray, keys: Sequence[str]) -> StateVector:
    """Apply a unitary to a subset of elementary subsystems (Fock labels or qubit keys).

    Round-off of a numerically integrated unitary is renormalized away; a
    norm change above ``UNITARITY_TOLERANCE`` is an error.
    """
    amps = apply_local_array(state.space, state.amplitudes, operator, keys)
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > UNITARITY_TOLERANCE:
        raise PreconditionError("Operator is not unitary on this state", f"norm after = {norm:.12f}")
    return StateVector(space=state.space, amplitudes=amps / norm)


def _factor_tensor(state: StateVector) -> np.ndarray:
    return state.amplitudes.reshape(state.space.factor_dims)


def partial_trace(
    state: Union[StateVector, DensityMatrix], keep: Sequence[str]
) -> DensityMatrix:
    """Reduced density matrix over the kept factors (in space order)."""
    if not keep:
        raise PreconditionError("partial_trace needs a nonempty set of factors to keep")
    space = state.space
    kept_space = space.restricted(keep)
    kept = [space.factor_position(label) for label in kept_space.labels]
    rest = [i for i in range(len(space.factors)) if i not in kept]
    dims = space.factor_dims
    dk = math.prod(dims[i] for i in kept)
    dr = math.prod(dims[i] for i in rest)
    if isinstance(state, StateVector):
        psi = np.transpose(_factor_tensor(state), kept + rest).reshape(dk, dr)
        rho = psi @ psi.conj().T
    else:
        n = len(dims)
        tens = state.matrix.reshape(dims + dims)
        order = kept + rest + [n + i for i in kept] + [n + i for i in rest]
        tens = np.transpose(tens, order).reshape(dk, dr, dk, dr)
        rho = np.einsum("ijkj->ik", tens)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(space=kept_space, matrix=rho)


def overlap_fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 for states over the same composite space."""
    if a.space != b.space:
        raise DimensionError("Cannot compare states over different spaces")
    value = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(max(value, 0.0), 1.0))


def project(state: StateVector, label: str, vector: np.ndarray) -> Projection:
    """Project factor ``label`` onto ``vector`` and renormalize the remainder."""
    space = state.space
    factor = space.factor(label)
    vec = np.asarray(vector, dtype=complex).reshape(-1)
    if vec.size != factor.dim:
        raise DimensionError(
            f"Projection vector of length {vec.size} does not match factor {label}",
            f"dimension {factor.dim}",
        )
    vec = vec / np.linalg.norm(vec)
    pos = space.factor_position(label)
    psi = np.moveaxis(_factor_tensor(state), pos, 0)
    remainder = np.tensordot(vec.conj(), psi, axes=(0, 0)).reshape(-1)
    probability = float(np.vdot(remainder, remainder).real)
    rest = space.without([label])
    if probability <= ZERO_PROBABILITY:
        return Projection(state=None, probability=0.0)
    return Projection(
        state=StateVector(space=rest, amplitudes=remainder / math.sqrt(probability)),
        probability=probability,
    )


def fock_populations(state: StateVector, label: str) -> np.ndarray:
    """Occupation probabilities of one factor."""
    pos = state.space.factor_position(label)
    probs = np.abs(_factor_tensor(state)) ** 2
    other = tuple(i for i in range(probs.ndim) if i != pos)
    return probs.sum(axis=other) if other else probs


def excited_population(state: StateVector, label: str) -> float:
    """Total excitation of a qubit register, summed over its qubits."""
    register = state.space.factor(label)
    if not isinstance(register, QubitRegister):
        raise DimensionError(f"Factor '{label}' is not a qubit register")
    probs = np.abs(state.tensor_view()) ** 2
    total = 0.0
    for k in range(register.n):
        axis = state.space.axis(register.key(k))
        total += float(np.take(probs, 1, axis=axis).sum())
    return total


def align_phase(amplitudes: np.ndarray) -> np.ndarray:
    """Remove the global phase so the largest-magnitude amplitude is real positive."""
    amps = np.asarray(amplitudes, dtype=complex)
    pivot = amps.reshape(-1)[int(np.argmax(np.abs(amps)))]
    if pivot == 0:
        return amps.copy()
    return amps * np.exp(-1j * np.angle(pivot))
