"""
Geometric picture of the driven qubit: Rabi vectors, the rotating frame and a
norm-preserving integrator for dr/dt = -r x Ω(t), which the classical
dipoles reuse.

Bloch vectors live in a frame where the ground state |0> is the south pole
(0, 0, -1): r = (<X>, -<Y>, -<Z>). In this frame the Rabi vector of the
co-rotating Hamiltonian is (2A cos θ, 2A sin θ, E) with θ = ωt + φ.
"""

import logging
import math
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.spatial.transform import Rotation

from .exceptions import IntegrationError, InvalidStateError
from .models import QubitParams, TimeSeries

logger = logging.getLogger(__name__)

NORM_DRIFT_TOL = 1e-8
MIN_STEPS_PER_TURN = 16

# π rotation about x taking operator coefficients to the geometric frame
GEOMETRIC_FRAME = np.diag([1.0, -1.0, -1.0])


def rabi_vector(p: QubitParams, t: float, amp: Optional[float] = None) -> np.ndarray:
    """Instantaneous rotation vector Ω(t) of the co-rotating drive."""
    a = p.amp if amp is None else amp
    theta = p.omega * t + p.phase
    return np.array([2.0 * a * math.cos(theta), 2.0 * a * math.sin(theta), p.gap])


def rotating_rabi_vector(p: QubitParams, amp: Optional[float] = None) -> np.ndarray:
    """Time-independent Rabi vector seen from the frame co-rotating at ω; equatorial at resonance."""
    a = p.amp if amp is None else amp
    return np.array([2.0 * a * math.cos(p.phase), 2.0 * a * math.sin(p.phase), p.gap - p.omega])


def rz(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def to_rotating_frame(v, angle: float, frame_rate: float = 0.0) -> np.ndarray:
    """
    Express ``v`` in axes rotated by ``angle`` about z.

    Positions need only R_z(angle)^-1 v. Rotation vectors also pick up
    the frame's own angular velocity, so pass ``frame_rate`` = ω for them.
    """
    out = rz(angle).T @ np.asarray(v, dtype=float)
    out[2] -= frame_rate
    return out


def bloch_vector(rho) -> np.ndarray:
    """Geometric Bloch vector of a 2x2 density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise InvalidStateError(f"Bloch vector needs a 2x2 density matrix, got {rho.shape}")
    s = np.array([
        2.0 * rho[0, 1].real,
        -2.0 * rho[0, 1].imag,
        (rho[0, 0] - rho[1, 1]).real,
    ])
    return GEOMETRIC_FRAME @ s


def state_bloch_vectors(states: np.ndarray) -> np.ndarray:
    """Geometric Bloch vectors for state vectors stacked along the leading axes."""
    a, b = states[..., 0], states[..., 1]
    cross = np.conj(a) * b
    return np.stack([2.0 * cross.real, -2.0 * cross.imag, np.abs(b) ** 2 - np.abs(a) ** 2], axis=-1)


class RotationField(BaseModel):
    """Rotation vector Ω(t) driving dr/dt = Ω x r."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    omega_fn: Callable[[float], np.ndarray]
    label: str = "field"

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self.omega_fn(t), dtype=float)

    @classmethod
    def constant(cls, vector, label: str = "constant") -> "RotationField":
        fixed = np.asarray(vector, dtype=float).copy()
        return cls(omega_fn=lambda t: fixed, label=label)

    @classmethod
    def lab_frame(cls, p: QubitParams, amp_fn: Optional[Callable[[float], float]] = None) -> "RotationField":
        if amp_fn is None:
            return cls(omega_fn=lambda t: rabi_vector(p, t), label="rabi")
        return cls(omega_fn=lambda t: rabi_vector(p, t, amp=amp_fn(t)), label="rabi")


def default_steps(duration: float, rate: float, steps_per_period: int = 200) -> int:
    """Steps giving ``steps_per_period`` samples per turn at angular ``rate``."""
    turns = duration * rate / (2.0 * math.pi)
    return max(MIN_STEPS_PER_TURN, math.ceil(steps_per_period * turns))


def integrate_cross(r0, field: RotationField, duration: float, steps: int) -> TimeSeries:
    """
    Integrate dr/dt = -r x Ω(t) on [0, duration].

    Each step rotates r exactly about Ω(t_mid) by |Ω(t_mid)| dt, so |r| is
    preserved up to roundoff.
    """
    if duration <= 0:
        raise ValueError(f"Integration time must be positive: {duration}")
    r = np.asarray(r0, dtype=float)
    if r.shape != (3,) or not np.all(np.isfinite(r)):
        raise ValueError(f"Initial vector must be a finite 3-vector, got {r0!r}")

    dt = duration / steps
    times = np.linspace(0.0, duration, steps + 1)
    midpoints = times[:-1] + 0.5 * dt
    rotvecs = np.array([field(t) for t in midpoints])

    max_rate = float(np.max(np.linalg.norm(rotvecs, axis=1)))
    if steps < MIN_STEPS_PER_TURN * duration * max_rate / (2.0 * math.pi):
        raise IntegrationError(
            f"{steps} steps are too few for rotation rate {max_rate:.4g} over {duration:.4g}; "
            f"need at least {MIN_STEPS_PER_TURN} per turn"
        )

    matrices = Rotation.from_rotvec(rotvecs * dt).as_matrix()
    trajectory = np.empty((steps + 1, 3))
    trajectory[0] = r
    for k in range(steps):
        r = matrices[k] @ r
        trajectory[k + 1] = r

    norm0 = float(np.linalg.norm(trajectory[0]))
    drift = float(np.max(np.abs(np.linalg.norm(trajectory, axis=1) - norm0)))
    if drift > NORM_DRIFT_TOL * max(norm0, 1.0):
        raise IntegrationError(f"Norm drift {drift:.3e} exceeds {NORM_DRIFT_TOL:.0e}")
    logger.debug(f"integrate_cross[{field.label}]: {steps} steps, max|Ω| = {max_rate:.6g}, drift = {drift:.2e}")

    return TimeSeries(
        times=times,
        values={"r_x": trajectory[:, 0], "r_y": trajectory[:, 1], "r_z": trajectory[:, 2]},
        final_state=trajectory[-1].copy(),
    )
