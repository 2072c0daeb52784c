"""Scenario configuration with file and environment support."""

import json
import math
import re
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .dynamics import DeviceParams, PropagationConfig
from .exceptions import ConfigError
from .kerr import KerrConfig

TWO_PI = 2 * math.pi


class Section(BaseModel):
    """Base for configuration sections."""

    model_config = ConfigDict(extra="forbid")


class DeviceSection(Section):
    """Circuit parameters in lab-frame units."""

    omega_a_mhz: float = Field(default=6000.0, gt=0, description="Resonator A frequency / 2pi (MHz)")
    omega_b_mhz: float = Field(default=7000.0, gt=0, description="Resonator B frequency / 2pi (MHz)")
    coupling_mhz: float = Field(default=200.0, description="Qubit-resonator coupling g / 2pi (MHz)")
    per_qubit_coupling_mhz: Optional[List[float]] = Field(
        default=None, description="Per-qubit couplings, index k = qubit k (MHz)"
    )
    anharmonicity_mhz: float = Field(default=-200.0, description="Qubit anharmonicity / 2pi (MHz)")
    tau_ad_ns: float = Field(default=100.0, description="Adiabatic ramp duration (ns)")
    delta_start_mhz: float = Field(default=1000.0, gt=0, description="Ramp start detuning / 2pi (MHz)")

    @field_validator("coupling_mhz")
    @classmethod
    def validate_coupling(cls, v: float) -> float:
        """Coupling must be positive."""
        if v <= 0:
            raise ValueError("coupling must be positive")
        return v

    @field_validator("tau_ad_ns")
    @classmethod
    def validate_tau_ad(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("ramp duration must be positive")
        return v


class ProtocolSection(Section):
    """Transfer schedule and numerics."""

    n: int = Field(default=3, ge=1, description="Number of qubits")
    omega_mhz: Union[float, List[float]] = Field(
        default=0.2, description="Drive scale Omega / 2pi (MHz), one value or one per step k = n-1 ... 0"
    )
    dressing: Literal["ideal", "ramp"] = Field(default="ideal")
    backend: Literal["ideal", "dynamical"] = Field(default="dynamical")
    disentangle: Literal["ideal", "physical"] = Field(default="ideal")
    fock_pad: int = Field(default=4, ge=0, description="Extra Fock levels above 2^n")
    step_scale: float = Field(default=1.0, gt=0, le=1, description="Multiplier on the derived step")
    step_ns: Optional[float] = Field(default=None, gt=0, description="Fixed integrator step (ns)")
    method: Literal["rk4", "expm"] = Field(default="rk4", description="Integrator scheme")
    quadrature: Literal["x", "y"] = Field(default="y", description="Drive quadrature")
    convergence_check: bool = Field(default=False, description="Re-run each window at half step and compare")
    leakage_tolerance: float = Field(default=1e-6, gt=0, description="Allowed top-level population")
    guard_band: float = Field(default=10.0, gt=0, description="Minimum comb spacing in units of Omega")
    initial: Dict[str, List[float]] = Field(
        default_factory=lambda: {"000": [1.0, 0.0], "111": [1.0, 0.0]},
        description="Register amplitudes as bitstring -> [re, im]",
    )

    @field_validator("omega_mhz")
    @classmethod
    def validate_omega(cls, v: Union[float, List[float]]) -> Union[float, List[float]]:
        values = [v] if isinstance(v, (int, float)) else v
        if not values or any(w <= 0 for w in values):
            raise ValueError("drive scales must be positive")
        return v

    @model_validator(mode="after")
    def validate_shapes(self) -> "ProtocolSection":
        if isinstance(self.omega_mhz, list) and len(self.omega_mhz) != self.n:
            raise ValueError(f"omega_mhz lists {len(self.omega_mhz)} steps, expected n = {self.n}")
        for bits, amp in self.initial.items():
            if len(bits) != self.n or set(bits) - {"0", "1"}:
                raise ValueError(f"initial key '{bits}' is not a {self.n}-bit string")
            if len(amp) not in (1, 2):
                raise ValueError(f"initial amplitude for '{bits}' must be [re] or [re, im]")
        if not any(any(a != 0 for a in amp) for amp in self.initial.values()):
            raise ValueError("initial state has no nonzero amplitude")
        return self


class KerrSection(Section):
    chi_khz: float = Field(default=-50.0, description="Cross-Kerr rate chi / 2pi (kHz, signed)")
    winding: int = Field(default=0, ge=0)
    direction: Literal["forward", "inverse"] = Field(default="forward")

    @field_validator("chi_khz")
    @classmethod
    def validate_chi(cls, v: float) -> float:
        if v == 0:
            raise ValueError("chi must be nonzero")
        return v


class PhaseSection(Section):
    theta_turns: float = Field(default=0.3, description="Phase theta / 2pi")
    trials: int = Field(default=1000, ge=0, description="Sampled photon-number readouts")


class ErrorSweepSection(Section):
    jitter_ratios: List[float] = Field(
        default_factory=lambda: [1e-4, 3e-4, 1e-3, 3e-3, 1e-2], description="delta_t / t0 values"
    )
    energy_products: List[float] = Field(
        default_factory=lambda: [1e-4, 3e-4, 1e-3, 3e-3, 1e-2], description="t0 delta_E values"
    )
    monte_carlo: bool = Field(default=False, description="Run the dynamical jitter check")
    mc_ratios: List[float] = Field(default_factory=lambda: [0.005, 0.01, 0.02])
    repetitions: int = Field(default=4, ge=1)
    budget_n: List[int] = Field(default_factory=lambda: list(range(1, 11)))


class OutputSection(Section):
    root: str = Field(default="runs", description="Directory holding run folders")
    resources_max_n: int = Field(default=10, ge=1)


class ScenarioConfig(BaseSettings):
    """Complete scenario; environment variables use the ``OSC_QFT_`` prefix."""

    model_config = SettingsConfigDict(
        env_prefix="OSC_QFT_",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="forbid",
    )

    device: DeviceSection = Field(default_factory=DeviceSection)
    protocol: ProtocolSection = Field(default_factory=ProtocolSection)
    kerr: KerrSection = Field(default_factory=KerrSection)
    phase: PhaseSection = Field(default_factory=PhaseSection)
    errors: ErrorSweepSection = Field(default_factory=ErrorSweepSection)
    output: OutputSection = Field(default_factory=OutputSection)
    seed: int = Field(default=0, ge=0)
    log_level: str = Field(default="INFO", description="Logging level")

    @classmethod
    def load(cls, path: Optional[Union[str, Path]] = None, **overrides: Any) -> "ScenarioConfig":
        """Load from a TOML or JSON file, environment, and keyword overrides."""
        data: Dict[str, Any] = {}
        if path is not None:
            data = read_config_file(Path(path))
        for key, value in overrides.items():
            section, _, field = key.partition("__")
            if field:
                data.setdefault(section, {})[field] = value
            else:
                data[key] = value
        try:
            return cls(**data)
        except ValidationError as e:
            first = e.errors()[0]
            location = ".".join(str(part) for part in first["loc"])
            raise ConfigError(first["msg"], field=location, details=f"{e.error_count()} error(s)")

    def device_params(self) -> DeviceParams:
        """Angular units (rad/us) and microseconds."""
        d = self.device
        g_k = None
        if d.per_qubit_coupling_mhz is not None:
            # per-qubit list is indexed by k
            g_k = tuple(TWO_PI * g for g in d.per_qubit_coupling_mhz)
        return DeviceParams(
            omega_A=TWO_PI * d.omega_a_mhz,
            omega_B=TWO_PI * d.omega_b_mhz,
            g=TWO_PI * d.coupling_mhz,
            g_k=g_k,
            chi_AB=TWO_PI * self.kerr.chi_khz * 1e-3,
            alpha=TWO_PI * d.anharmonicity_mhz,
            tau_ad=d.tau_ad_ns * 1e-3,
            delta_start=TWO_PI * d.delta_start_mhz,
        )

    def drive_omegas(self) -> List[float]:
        """Omega per step in rad/us, ordered k = n-1 ... 0."""
        w = self.protocol.omega_mhz
        values = [w] * self.protocol.n if isinstance(w, (int, float)) else list(w)
        return [TWO_PI * float(v) for v in values]

    def initial_amplitudes(self) -> np.ndarray:
        n = self.protocol.n
        c = np.zeros(2**n, dtype=complex)
        for bits, amp in self.protocol.initial.items():
            c[int(bits, 2)] += complex(amp[0], amp[1] if len(amp) > 1 else 0.0)
        return c / np.linalg.norm(c)

    def kerr_config(self, direction: Optional[Literal["forward", "inverse"]] = None) -> KerrConfig:
        chi = TWO_PI * self.kerr.chi_khz * 1e-3
        direction = direction or self.kerr.direction
        if direction != self.kerr.direction:
            # the inverse transform runs with the opposite Kerr sign
            chi = -chi
        return KerrConfig(chi=chi, winding=self.kerr.winding, direction=direction)

    def propagation_config(self) -> PropagationConfig:
        p = self.protocol
        return PropagationConfig(
            step=p.step_ns * 1e-3 if p.step_ns is not None else None,
            step_scale=p.step_scale,
            method=p.method,
            quadrature=p.quadrature,
            convergence_check=p.convergence_check,
            leakage_tolerance=p.leakage_tolerance,
        )

    def echo(self) -> Dict[str, Any]:
        """JSON-ready dump that re-parses to an equal config."""
        return self.model_dump(mode="json")


_TOML_POSITION = re.compile(r"line (\d+)")


def read_config_file(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ConfigError(f"Configuration file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".toml":
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            match = _TOML_POSITION.search(str(e))
            raise ConfigError(str(e), line=int(match.group(1)) if match else None)
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(e.msg, line=e.lineno)
        if not isinstance(data, dict):
            raise ConfigError("Top-level JSON value must be an object")
        return data
    raise ConfigError(f"Unsupported configuration format '{path.suffix}'", details="use .toml or .json")
