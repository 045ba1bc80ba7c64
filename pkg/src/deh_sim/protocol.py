"""
Deterministic harvesting protocols: envelope stopping times, the φ-ensemble
check and the constant-potential family that moves any eigenstate of H0 to
a higher one in fixed time.
"""

import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect

from .classical import dipole_scale, integrate_dipole, precession_rate
from .bloch import default_steps
from .exceptions import EnergyDirectionError, NoSolutionError, UnitarityError
from .harvest import delta_energy
from .models import (
    DehReport,
    DipoleParams,
    Envelope,
    EnvelopeKind,
    QubitParams,
    SystemKind,
    VuFamily,
)
from .qdyn import GROUND, evolve_ensemble, pure_density
from .smallmat import as_matrix, ensure_hermitian, exp_i, hermitian_eig, unitary_log

logger = logging.getLogger(__name__)

FLIP_ANGLE = math.pi
STOP_RTOL = 1e-10
MAX_STOP_TIME = 1e12
RECONSTRUCTION_TOL = 1e-9
TRANSFER_TOL = 1e-12


def _abs_cos_integral(x: float) -> float:
    """∫_0^x |cos u| du for x >= 0."""
    n, y = divmod(x, math.pi)
    partial = math.sin(y) if y <= 0.5 * math.pi else 2.0 - math.sin(y)
    return 2.0 * n + partial


def rotation_angle(env: Envelope, duration: float, planned: Optional[float] = None) -> tuple[float, float]:
    """
    Accumulated angle of a protocol stopped at ``duration``.

    Returns (∫2A(t) dt, ∫A(t) dt); the first is the rotation angle of the
    co-rotating frame, the second is reported alongside it. A ramp is shaped
    over ``planned`` (default: ``duration``).
    """
    if duration < 0:
        raise ValueError(f"Duration must be non-negative: {duration}")
    if env.kind == EnvelopeKind.CONSTANT:
        literal = env.amp * duration
    elif env.kind == EnvelopeKind.RAMP and (planned is None or planned == duration):
        literal = env.amp * duration * (1.0 - env.ramp_fraction)
    elif env.kind == EnvelopeKind.RAMP:
        rise = env.ramp_fraction * planned
        kinks = [t for t in (rise, planned - rise, planned) if 0.0 < t < duration]
        literal, _ = quad(lambda t: env.amplitude_at(t, planned), 0.0, duration, points=kinks or None, limit=200)
    else:
        delta = abs(env.half_difference)
        literal = env.amp * (duration if delta == 0 else _abs_cos_integral(delta * duration) / delta)
    return 2.0 * literal, literal


def stopping_time(env: Envelope, angle: float = FLIP_ANGLE) -> float:
    """Smallest T with ∫_0^T 2A(t) dt = ``angle``; exact π/(2A) for constant envelopes."""
    if env.amp <= 0:
        raise NoSolutionError("Envelope amplitude is zero; the rotation angle never accumulates")
    if env.kind == EnvelopeKind.CONSTANT:
        return angle / (2.0 * env.amp)

    def residual(duration: float) -> float:
        return rotation_angle(env, duration)[0] - angle

    upper = angle / (2.0 * env.amp)
    while residual(upper) < 0:
        upper *= 2.0
        if upper > MAX_STOP_TIME:
            raise NoSolutionError(f"Envelope {env.label()} does not reach angle {angle:.6g} before {MAX_STOP_TIME:.0e}")
    lower = 0.5 * upper if residual(0.5 * upper) < 0 else 0.0
    stop = bisect(residual, lower, upper, xtol=1e-300, rtol=STOP_RTOL, maxiter=500)
    logger.debug(f"stopping_time[{env.label()}]: T = {stop:.12g}")
    return float(stop)


def amplitude_fn(env: Envelope, duration: float) -> Callable[[float], float]:
    """A(t) of ``env`` for a protocol planned to last ``duration``."""
    if env.kind == EnvelopeKind.CONSTANT:
        return lambda t: env.amp
    return lambda t: float(env.amplitude_at(t, duration))


def _quantum_ensemble(system: SystemKind, env: Envelope, phases: np.ndarray, stop: float, planned: float,
                      gap: float, steps_per_period: int):
    carrier = env.carrier(gap)
    if abs(carrier - gap) > 1e-12:
        logger.warning(f"Carrier {carrier:.6g} is detuned from the gap {gap:.6g}")
    p = QubitParams(gap=gap, amp=env.amp, omega=carrier, phase=0.0)
    amp = None if env.kind == EnvelopeKind.CONSTANT else amplitude_fn(env, planned)
    finals = evolve_ensemble(p, phases, stop, steps_per_period, kind=system, amp_fn=amp)
    h0 = np.diag([-0.5 * gap, 0.5 * gap]).astype(complex)
    rho0 = pure_density(GROUND)
    populations = np.abs(finals[:, 1]) ** 2
    energies = np.array([delta_energy(rho0, pure_density(psi), h0) for psi in finals])
    return populations, energies


def dipole_envelope(env: Envelope, p: DipoleParams) -> Envelope:
    """Envelope whose adopted angle ∫2A(t) dt equals the dipole's rotating-frame angle ∫|c|A(t) dt."""
    return env.model_copy(update={"amp": 0.5 * abs(dipole_scale(p)) * env.amp})


def dipole_flip_time(p: DipoleParams, env: Optional[Envelope] = None) -> float:
    """Time for the co-rotating half of the drive to turn L through π; π/(|c| A) for a constant drive."""
    env = env or Envelope(amp=p.amp)
    return stopping_time(dipole_envelope(env, p))


def _dipole_ensemble(env: Envelope, phases: np.ndarray, stop: float, planned: float,
                     dipole: DipoleParams, steps_per_period: int):
    if abs(dipole.omega - precession_rate(dipole)) > 1e-12:
        logger.warning(f"Drive {dipole.omega:.6g} is detuned from precession rate {precession_rate(dipole):.6g}")
    static = dipole_scale(dipole) * dipole.static_field
    # static-field energy is L . Ω_static; start in its minimum
    start = np.array([0.0, 0.0, -math.copysign(1.0, static)])
    amp = None if env.kind == EnvelopeKind.CONSTANT else amplitude_fn(env, planned)
    steps = default_steps(stop, max(dipole.omega, abs(static)), steps_per_period)

    populations = np.empty(phases.size)
    energies = np.empty(phases.size)
    for index, phi in enumerate(phases):
        params = dipole.model_copy(update={"phase": float(phi), "amp": env.amp})
        final = integrate_dipole(params, start, stop, steps, amp_fn=amp).final_state
        populations[index] = 0.5 * (1.0 - float(final @ start))
        energies[index] = static * (final[2] - start[2])
    return populations, energies


def deh_check(system: SystemKind, env: Envelope, phi_grid: Sequence[float], tolerance: float = 0.01,
              *, gap: float = 1.0, steps_per_period: int = 200, min_population: float = 0.99,
              stop_time: Optional[float] = None, dipole: Optional[DipoleParams] = None) -> DehReport:
    """
    Run one protocol for every source phase and test that the outcome does not depend on it.

    Passes when the spread of final excited populations is within
    ``tolerance`` and the smallest population reaches ``min_population``.
    ``stop_time`` overrides the solved stopping time while keeping the
    envelope shaped for the solved one.
    """
    phases = np.asarray(phi_grid, dtype=float)
    if phases.size == 0:
        raise ValueError("Phase grid must be non-empty")

    if system == SystemKind.CLASSICAL_DIPOLE:
        dipole = dipole or DipoleParams(amp=env.amp)
        effective = dipole_envelope(env, dipole)
    else:
        effective = env
    planned = stopping_time(effective)
    stop = planned if stop_time is None else stop_time

    runners = {
        SystemKind.QUANTUM_FULL: lambda: _quantum_ensemble(system, env, phases, stop, planned, gap, steps_per_period),
        SystemKind.QUANTUM_RWA: lambda: _quantum_ensemble(system, env, phases, stop, planned, gap, steps_per_period),
        SystemKind.CLASSICAL_DIPOLE: lambda: _dipole_ensemble(env, phases, stop, planned, dipole, steps_per_period),
    }
    populations, energies = runners[system]()

    adopted, literal = rotation_angle(effective, stop, planned)
    spread = float(np.max(populations) - np.min(populations))
    passed = spread <= tolerance and float(np.min(populations)) >= min_population
    logger.info(
        f"deh_check[{system.value}, {env.label()}]: T = {stop:.6g}, "
        f"min population {float(np.min(populations)):.6f}, spread {spread:.3e}, pass = {passed}"
    )
    return DehReport(
        system=system,
        n_phases=int(phases.size),
        stop_time=stop,
        angle_adopted=adopted,
        angle_literal=literal,
        min_population=float(np.min(populations)),
        max_population=float(np.max(populations)),
        mean_population=float(np.mean(populations)),
        std_population=float(np.std(populations)),
        spread=spread,
        delta_e_min=float(np.min(energies)),
        delta_e_max=float(np.max(energies)),
        delta_e_spread=float(np.max(energies) - np.min(energies)),
        tolerance=tolerance,
        population_threshold=min_population,
        passed=passed,
    )


def vu_family(h0, source: int, target: int, theta: float, theta_tilde: float, tau: float) -> VuFamily:
    """
    Constant potential V with exp(i(H0 + V)τ) = U, where

        U = e^{iθ}|j><i| + e^{iθ̃}|i><j| + Σ_{k≠i,j} |k><k|

    over the eigenbasis of H0. Levels are indexed from 0 in ascending energy.
    """
    h0 = ensure_hermitian(as_matrix(h0))
    if tau <= 0:
        raise ValueError(f"Duration tau must be positive: {tau}")
    energies, basis = hermitian_eig(h0)
    dim = energies.size
    for name, index in (("source", source), ("target", target)):
        if not 0 <= index < dim:
            raise ValueError(f"{name} level {index} out of range for dimension {dim}")
    if not energies[target] > energies[source]:
        raise EnergyDirectionError(
            f"Target level {target} (E = {energies[target]:.6g}) does not lie above "
            f"source level {source} (E = {energies[source]:.6g})"
        )

    ket_i, ket_j = basis[:, source], basis[:, target]
    u = np.exp(1j * theta) * np.outer(ket_j, ket_i.conj()) + np.exp(1j * theta_tilde) * np.outer(ket_i, ket_j.conj())
    for k in range(dim):
        if k not in (source, target):
            u += np.outer(basis[:, k], basis[:, k].conj())

    potential = unitary_log(u) / tau - h0
    potential = 0.5 * (potential + potential.conj().T)

    defect = float(np.max(np.abs(exp_i((h0 + potential) * tau) - u)))
    if defect > RECONSTRUCTION_TOL:
        raise UnitarityError(f"exp(i(H0 + V)τ) misses U by {defect:.3e}")
    moved = u @ np.outer(ket_i, ket_i.conj()) @ u.conj().T
    transfer = float(np.max(np.abs(moved - np.outer(ket_j, ket_j.conj()))))
    if transfer > TRANSFER_TOL:
        raise UnitarityError(f"U|i><i|U† misses |j><j| by {transfer:.3e}")

    return VuFamily(
        h0=h0,
        source=source,
        target=target,
        theta=theta,
        theta_tilde=theta_tilde,
        tau=tau,
        unitary=u,
        potential=potential,
        source_energy=float(energies[source]),
        target_energy=float(energies[target]),
    )
