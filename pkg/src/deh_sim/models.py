import math
from enum import Enum
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

TWO_PI = 2.0 * math.pi


class PauliCoeffs(BaseModel):
    """Coefficients of a 2x2 Hermitian operator in the Pauli basis {I, X, Y, Z}."""

    model_config = ConfigDict(frozen=True)

    c_i: float
    c_x: float
    c_y: float
    c_z: float

    @property
    def bloch(self) -> tuple[float, float, float]:
        """(Tr(OX), Tr(OY), Tr(OZ)) = 2 (c_X, c_Y, c_Z)."""
        return (2.0 * self.c_x, 2.0 * self.c_y, 2.0 * self.c_z)


class QubitParams(BaseModel):
    """Two-level harvester driven by 2A cos(ωt + φ) X (hbar = 1 units)."""

    model_config = ConfigDict(frozen=True)

    gap: float = Field(..., gt=0, description="Energy gap E of the bare Hamiltonian -(E/2)Z")
    amp: float = Field(..., ge=0, description="Coupling amplitude A")
    omega: float = Field(..., gt=0, description="Drive angular frequency")
    phase: float = Field(default=0.0, description="Source phase φ, wrapped into [0, 2π)")

    @field_validator("phase")
    @classmethod
    def wrap_phase(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("Phase must be finite")
        wrapped = math.fmod(v, TWO_PI)
        if wrapped < 0:
            wrapped += TWO_PI
        # fmod of values just below a multiple of 2π can round up to 2π
        return 0.0 if wrapped >= TWO_PI else wrapped

    @property
    def detuning(self) -> float:
        return self.omega - self.gap

    def is_resonant(self, tol: float = 1e-12) -> bool:
        return abs(self.omega - self.gap) <= tol


class TimeSeries(BaseModel):
    """Samples recorded along a trajectory; ``values`` columns align with ``times``."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    values: Dict[str, np.ndarray]
    final_state: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def check_shapes(self):
        if self.times.ndim != 1:
            raise ValueError("times must be one-dimensional")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        for name, column in self.values.items():
            if column.shape[0] != self.times.size:
                raise ValueError(f"Column {name} has {column.shape[0]} samples for {self.times.size} times")
        return self

    def final(self, name: str) -> float:
        return float(self.values[name][-1])

    def vector(self, index: int = -1, prefix: str = "r") -> np.ndarray:
        return np.array([self.values[f"{prefix}_{axis}"][index] for axis in "xyz"])

    def to_table(self, config: Optional[Dict[str, Any]] = None) -> "ResultTable":
        columns = ["t"] + list(self.values)
        data = np.column_stack([self.times] + [self.values[c] for c in self.values])
        return ResultTable(columns=columns, rows=data.tolist(), config=config or {})


class OscillatorParams(BaseModel):
    """Linear oscillator m q'' + k q = F0 cos(ωt + φ) with q(0) = α, q'(0) = β."""

    model_config = ConfigDict(frozen=True)

    mass: float = Field(default=1.0, gt=0)
    spring: float = Field(default=1.0, gt=0)
    force: float = Field(default=1.0, description="Force amplitude F0")
    omega: float = Field(default=1.0, gt=0)
    phase: float = Field(default=0.0)
    q0: float = Field(default=0.0, description="Initial position α")
    v0: float = Field(default=0.0, description="Initial velocity β")

    @property
    def natural_frequency(self) -> float:
        return math.sqrt(self.spring / self.mass)


class DipoleKind(str, Enum):
    """Classical precessing systems sharing the cross-product equation."""
    ELECTRIC = "electric"
    MAGNETIC = "magnetic"
    LLG = "llg"


class DipoleParams(BaseModel):
    """
    Rotating charged sphere (electric or magnetic dipole) or a macrospin.

    The field is F(t) = F0 z + 2A cos(ωt + φ) x. ``coupling`` is α in
    L = α d for the electric sphere, β in μ = β L for the magnetic sphere
    and the gyromagnetic ratio γ for the magnetisation.
    """

    model_config = ConfigDict(frozen=True)

    kind: DipoleKind = DipoleKind.ELECTRIC
    coupling: float = Field(default=1.0)
    static_field: float = Field(default=1.0)
    amp: float = Field(default=0.01, ge=0)
    omega: float = Field(default=1.0, gt=0)
    phase: float = Field(default=0.0)
    inertia: float = Field(default=1.0, gt=0, description="Moment of inertia I")
    damping: float = Field(default=0.0, ge=0, description="Gilbert damping (LLG only)")

    @field_validator("coupling")
    @classmethod
    def coupling_nonzero(cls, v: float) -> float:
        if v == 0:
            raise ValueError("Coupling constant must be non-zero")
        return v


class EnvelopeKind(str, Enum):
    CONSTANT = "const"
    RAMP = "ramp"
    BEAT = "beat"


class Envelope(BaseModel):
    """
    Amplitude envelope A(t) of the source.

    ``ramp`` rises linearly over ramp_fraction * T, holds and falls over the
    final ramp_fraction * T. ``beat`` is the effective two-tone envelope
    A |cos((ω1 - ω2) t / 2)| on the carrier (ω1 + ω2) / 2.
    """

    model_config = ConfigDict(frozen=True)

    kind: EnvelopeKind = EnvelopeKind.CONSTANT
    amp: float = Field(..., ge=0)
    ramp_fraction: float = Field(default=0.0, ge=0, lt=0.5)
    omega1: Optional[float] = Field(default=None, gt=0)
    omega2: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def check_kind_fields(self):
        if self.kind == EnvelopeKind.BEAT and (self.omega1 is None or self.omega2 is None):
            raise ValueError("Beat envelope needs omega1 and omega2")
        return self

    @property
    def half_difference(self) -> float:
        return 0.5 * (self.omega1 - self.omega2) if self.kind == EnvelopeKind.BEAT else 0.0

    def carrier(self, default: float) -> float:
        if self.kind == EnvelopeKind.BEAT:
            return 0.5 * (self.omega1 + self.omega2)
        return default

    def amplitude_at(self, t, duration: float):
        """A(t) for a protocol of planned length ``duration``; accepts arrays."""
        t = np.asarray(t, dtype=float)
        if self.kind == EnvelopeKind.CONSTANT:
            out = np.full_like(t, self.amp)
        elif self.kind == EnvelopeKind.RAMP:
            if self.ramp_fraction == 0.0:
                out = np.where((t >= 0) & (t <= duration), self.amp, 0.0)
            else:
                ramp = self.ramp_fraction * duration
                shape = np.minimum(np.minimum(t / ramp, (duration - t) / ramp), 1.0)
                out = self.amp * np.clip(shape, 0.0, 1.0)
        else:
            out = self.amp * np.abs(np.cos(self.half_difference * t))
        return out if out.ndim else float(out)

    @classmethod
    def parse(cls, text: str, amp: float) -> "Envelope":
        """Parse ``const``, ``ramp:<frac>`` or ``beat:<ω1>,<ω2>``."""
        kind, _, arg = text.strip().partition(":")
        kind = kind.lower()
        if kind in ("const", "constant"):
            return cls(kind=EnvelopeKind.CONSTANT, amp=amp)
        if kind == "ramp":
            return cls(kind=EnvelopeKind.RAMP, amp=amp, ramp_fraction=float(arg))
        if kind == "beat":
            w1, _, w2 = arg.partition(",")
            return cls(kind=EnvelopeKind.BEAT, amp=amp, omega1=float(w1), omega2=float(w2))
        raise ValueError(f"Unknown envelope: {text!r}")

    def label(self) -> str:
        if self.kind == EnvelopeKind.RAMP:
            return f"ramp:{self.ramp_fraction:g}"
        if self.kind == EnvelopeKind.BEAT:
            return f"beat:{self.omega1:g},{self.omega2:g}"
        return "const"


class SystemKind(str, Enum):
    """Dynamics a DEH check can be run against."""
    QUANTUM_FULL = "quantum-full"
    QUANTUM_RWA = "quantum-rwa"
    CLASSICAL_DIPOLE = "classical-dipole"


class DehReport(BaseModel):
    """φ-ensemble outcome of one protocol run, a discretisation of ∂ρ_T/∂φ = ∂ΔE/∂φ = 0."""

    system: SystemKind
    n_phases: int
    stop_time: float
    angle_adopted: float = Field(..., description="∫ 2A(t) dt over [0, T]")
    angle_literal: float = Field(..., description="∫ A(t) dt over [0, T]")
    min_population: float
    max_population: float
    mean_population: float
    std_population: float
    spread: float
    delta_e_min: float
    delta_e_max: float
    delta_e_spread: float
    tolerance: float
    population_threshold: float
    passed: bool


class SensitivityRow(BaseModel):
    time: float
    max_dq_dphi: float
    max_dqdot_dphi: float
    phase_locked: bool
    max_abs_delta_e: Optional[float] = None


class OscillatorRegime(str, Enum):
    RESONANT = "resonant"
    NEAR_RESONANT = "near-resonant"
    OFF_RESONANT = "off-resonant"


class FailureReport(BaseModel):
    """Why a linear oscillator cannot harvest deterministically."""

    regime: OscillatorRegime
    rows: List[SensitivityRow]
    min_sensitivity: float
    locked_times: List[float]
    max_locked_delta_e: Optional[float]
    deh_possible: bool


class VuFamily(BaseModel):
    """Constant potential V_U taking eigenstate i of H0 to eigenstate j in time τ."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    h0: np.ndarray
    source: int
    target: int
    theta: float
    theta_tilde: float
    tau: float = Field(..., gt=0)
    unitary: np.ndarray
    potential: np.ndarray
    source_energy: float
    target_energy: float

    @model_validator(mode="after")
    def check_direction(self):
        if not self.target_energy > self.source_energy:
            raise ValueError("Target level must lie above the source level")
        return self

    @property
    def delta_energy(self) -> float:
        return self.target_energy - self.source_energy


class PhysicalConstants(BaseModel):
    """CODATA values in SI units; hbar is derived from h so that h / hbar is exactly 2π."""

    model_config = ConfigDict(frozen=True)

    c0: float = 2.99792458e8
    eps0: float = 8.8541878128e-12
    mu0: float = 1.25663706212e-6
    h: float = 6.62607015e-34
    debye: float = 3.33564e-30
    electron_volt: float = 1.602176634e-19

    @property
    def hbar(self) -> float:
        return self.h / TWO_PI


class FrequencyConvention(str, Enum):
    """Which frequency multiplies E0 d / π in the power estimate."""
    ORDINARY = "ordinary"  # f = gap / h
    ANGULAR = "angular"  # ω = gap / hbar


class HarvestModel(BaseModel):
    """Plane-wave source and a planar array of two-level dipoles (SI units)."""

    model_config = ConfigDict(frozen=True)

    intensity: float = Field(..., gt=0, description="W/m^2")
    dipole_moment: float = Field(..., gt=0, description="C m")
    gap_energy: float = Field(..., gt=0, description="J")
    areal_density: float = Field(default=0.0, ge=0, description="dipoles per m^2")
    convention: FrequencyConvention = FrequencyConvention.ORDINARY


class PowerEstimate(BaseModel):
    convention: FrequencyConvention
    field_amplitude: float
    frequency: float
    flip_time: float
    power_per_dipole: float
    power_per_area: float


class HarvestReport(BaseModel):
    """Power estimates under both frequency conventions; their ratio is exactly 2π."""

    selected: FrequencyConvention
    estimates: List[PowerEstimate]
    convention_ratio: float
    note: str

    def estimate(self, convention: FrequencyConvention) -> PowerEstimate:
        return next(e for e in self.estimates if e.convention == convention)


class ResultTable(BaseModel):
    """Tabular result of any command, ready for emission."""

    columns: List[str]
    rows: List[List[Any]]
    config: Dict[str, Any] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_row_width(self):
        width = len(self.columns)
        for index, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"Row {index} has {len(row)} values for {width} columns")
        return self


class AxisName(str, Enum):
    AMP = "A"
    PHASE = "phi"
    AMP_DEV = "dA"
    TIME_DEV = "dT"
    FREQ_DEV = "domega"
    RAMP = "ramp"


AXIS_ALIASES = {
    "a": AxisName.AMP, "amp": AxisName.AMP,
    "phi": AxisName.PHASE, "phase": AxisName.PHASE,
    "da": AxisName.AMP_DEV, "deltaa": AxisName.AMP_DEV,
    "dt": AxisName.TIME_DEV, "deltat": AxisName.TIME_DEV,
    "domega": AxisName.FREQ_DEV, "dw": AxisName.FREQ_DEV, "deltaomega": AxisName.FREQ_DEV,
    "ramp": AxisName.RAMP, "ramp_fraction": AxisName.RAMP,
}


class SweepAxis(BaseModel):
    """One grid axis ``name:min:max:count``; the φ axis excludes its upper end."""

    model_config = ConfigDict(frozen=True)

    name: AxisName
    min: float
    max: float
    count: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_bounds(self):
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ValueError(f"Axis {self.name.value} has non-finite bounds")
        if self.max < self.min:
            raise ValueError(f"Axis {self.name.value} has max < min")
        return self

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.min])
        if self.name == AxisName.PHASE:
            return self.min + (self.max - self.min) * np.arange(self.count) / self.count
        return np.linspace(self.min, self.max, self.count)

    @classmethod
    def parse(cls, text: str) -> "SweepAxis":
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"Axis must look like name:min:max:count, got {text!r}")
        key = parts[0].strip().lower()
        if key not in AXIS_ALIASES:
            raise ValueError(f"Unknown axis name: {parts[0]!r}")
        return cls(name=AXIS_ALIASES[key], min=float(parts[1]), max=float(parts[2]), count=int(parts[3]))

    def label(self) -> str:
        return f"{self.name.value}:{self.min!r}:{self.max!r}:{self.count}"


class SweepTable(ResultTable):
    """Sweep result: one row per grid cell, in row-major grid order."""

    axes: List[SweepAxis]

    @model_validator(mode="after")
    def check_cell_count(self):
        expected = math.prod(axis.count for axis in self.axes)
        if len(self.rows) != expected:
            raise ValueError(f"Sweep table has {len(self.rows)} rows for {expected} cells")
        return self


class Command(str, Enum):
    SIMULATE = "simulate"
    SWEEP = "sweep"
    CLASSICAL = "classical"
    ENTROPY = "entropy"
    VU = "vu"
    POWER = "power"


class RunConfig(BaseModel):
    """Everything needed to reproduce one run; keys mirror the long CLI flags."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Command

    # quantum drive
    gap: float = Field(default=1.0, gt=0)
    amp: float = Field(default=0.05, ge=0)
    omega: Optional[float] = Field(default=None, gt=0, description="Defaults to the gap (resonance)")
    phase: float = Field(default=0.0)
    envelope: str = "const"
    t_final: str = "auto"
    system: SystemKind = SystemKind.QUANTUM_FULL

    # numerics
    phi_grid: int = Field(default=64, ge=1)
    phi_mode: Literal["grid", "sampled"] = "grid"
    steps_per_period: int = Field(default=200, ge=16)
    seed: int = Field(default=0, ge=0, lt=2**64)
    jobs: int = Field(default=1, ge=1)

    # sweep
    axis: List[str] = Field(default_factory=list)
    tolerance: float = Field(default=0.01, gt=0)
    min_population: float = Field(default=0.99, ge=0, le=1)

    # classical
    model: Literal["oscillator", "electric", "magnetic", "llg"] = "oscillator"
    mass: float = Field(default=1.0, gt=0)
    spring: float = Field(default=1.0, gt=0)
    force: float = 1.0
    q0: float = 0.0
    v0: float = 0.0
    t_max: float = Field(default=20.0 * math.pi, gt=0)
    t_points: int = Field(default=1000, ge=1)
    coupling: float = 1.0
    static_field: float = 1.0
    damping: float = Field(default=0.0, ge=0)

    # vu
    levels: List[float] = Field(default_factory=lambda: [-1.0, 0.0, 1.0])
    source: int = Field(default=0, ge=0)
    target: int = Field(default=2, ge=0)
    theta: float = 0.0
    theta_tilde: float = 0.0
    tau: float = Field(default=1.0, gt=0)

    # power
    intensity: float = Field(default=1000.0, gt=0)
    dipole_debye: float = Field(default=75.0, gt=0)
    gap_mev: float = Field(default=1.0, gt=0)
    density: float = Field(default=2.5e15, ge=0)
    convention: FrequencyConvention = FrequencyConvention.ORDINARY

    # output
    format: Literal["csv", "json"] = "csv"
    out: Optional[str] = None

    @field_validator("t_final", mode="before")
    @classmethod
    def check_t_final(cls, v: str) -> str:
        v = str(v).strip().lower()
        if v == "auto":
            return v
        value = float(v)
        if not (math.isfinite(value) and value > 0):
            raise ValueError("t_final must be 'auto' or a positive number")
        return repr(value)

    @field_validator("envelope")
    @classmethod
    def check_envelope(cls, v: str) -> str:
        Envelope.parse(v, amp=1.0)
        return v.strip()

    @field_validator("axis")
    @classmethod
    def check_axes(cls, v: List[str]) -> List[str]:
        names = [SweepAxis.parse(text).name for text in v]
        if len(set(names)) != len(names):
            raise ValueError("Each sweep axis may be given once")
        return v

    @field_validator("levels")
    @classmethod
    def check_levels(cls, v: List[float]) -> List[float]:
        if len(v) not in (2, 3):
            raise ValueError(f"H0 needs 2 or 3 levels, got {len(v)}")
        if not all(math.isfinite(level) for level in v):
            raise ValueError("Levels must be finite")
        return v

    @model_validator(mode="after")
    def check_level_indices(self):
        for name in ("source", "target"):
            if getattr(self, name) >= len(self.levels):
                raise ValueError(f"{name} must index one of the {len(self.levels)} levels")
        return self

    @property
    def drive_omega(self) -> float:
        return self.omega if self.omega is not None else self.gap

    def sweep_axes(self) -> List[SweepAxis]:
        return [SweepAxis.parse(text) for text in self.axis]

    def qubit(self, phase: Optional[float] = None) -> QubitParams:
        return QubitParams(gap=self.gap, amp=self.amp, omega=self.drive_omega,
                           phase=self.phase if phase is None else phase)

    def build_envelope(self, amp: Optional[float] = None) -> Envelope:
        return Envelope.parse(self.envelope, amp=self.amp if amp is None else amp)
