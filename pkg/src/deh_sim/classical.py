"""
Classical counterparts of the quantum harvester.

The forced linear oscillator m q'' + k q = F0 cos(ωt + φ) has closed forms
on and off resonance; its φ-sensitivity never vanishes at a φ-independent
stopping time while energy is gained, so it cannot harvest deterministically.
Rotating dipoles and a zero-damping macrospin obey the same cross-product
equation as the Bloch vector and reuse ``bloch.integrate_cross``.
"""

import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .bloch import RotationField, integrate_cross
from .exceptions import IntegrationError, UnsupportedConfigurationError
from .models import (
    DipoleKind,
    DipoleParams,
    FailureReport,
    OscillatorParams,
    OscillatorRegime,
    SensitivityRow,
    TimeSeries,
)

logger = logging.getLogger(__name__)

RESONANCE_TOL = 1e-12
NEAR_RESONANCE_TOL = 1e-6
FD_STEP = 1e-6
LOCK_TOL = 1e-9
ENERGY_TOL = 1e-9
ODE_RTOL = 1e-12
ODE_ATOL = 1e-12


def regime(p: OscillatorParams) -> OscillatorRegime:
    gap = abs(p.omega - p.natural_frequency)
    if gap <= RESONANCE_TOL:
        return OscillatorRegime.RESONANT
    if gap <= NEAR_RESONANCE_TOL:
        return OscillatorRegime.NEAR_RESONANT
    return OscillatorRegime.OFF_RESONANT


def _resonant(p: OscillatorParams, t, phase):
    w = p.omega
    drift = p.force / (2.0 * p.mass * w)
    sin_term = p.v0 / w - p.force / (2.0 * p.mass * w * w) * np.sin(phase)
    q = p.q0 * np.cos(w * t) + sin_term * np.sin(w * t) + drift * t * np.sin(w * t + phase)
    qdot = (
        -p.q0 * w * np.sin(w * t)
        + sin_term * w * np.cos(w * t)
        + drift * (np.sin(w * t + phase) + w * t * np.cos(w * t + phase))
    )
    return q, qdot


def _resonant_sensitivity(p: OscillatorParams, t, phase):
    w = p.omega
    drift = p.force / (2.0 * p.mass * w)
    dq = -p.force / (2.0 * p.mass * w * w) * np.cos(phase) * np.sin(w * t) + drift * t * np.cos(w * t + phase)
    dqdot = (
        -drift * np.cos(phase) * np.cos(w * t)
        + drift * (np.cos(w * t + phase) - w * t * np.sin(w * t + phase))
    )
    return dq, dqdot


def _response(p: OscillatorParams) -> float:
    """Steady-state amplitude C = F0 / (m (ω0² - ω²))."""
    return p.force / (p.mass * (p.natural_frequency ** 2 - p.omega ** 2))


def _offresonant(p: OscillatorParams, t, phase):
    w, w0, c = p.omega, p.natural_frequency, _response(p)
    a = p.q0 - c * np.cos(phase)
    b = p.v0 + c * w * np.sin(phase)
    q = a * np.cos(w0 * t) + b / w0 * np.sin(w0 * t) + c * np.cos(w * t + phase)
    qdot = -a * w0 * np.sin(w0 * t) + b * np.cos(w0 * t) - c * w * np.sin(w * t + phase)
    return q, qdot


def _offresonant_sensitivity(p: OscillatorParams, t, phase):
    w, w0, c = p.omega, p.natural_frequency, _response(p)
    dq = c * np.sin(phase) * np.cos(w0 * t) + c * w * np.cos(phase) / w0 * np.sin(w0 * t) - c * np.sin(w * t + phase)
    dqdot = (
        -c * np.sin(phase) * w0 * np.sin(w0 * t)
        + c * w * np.cos(phase) * np.cos(w0 * t)
        - c * w * np.cos(w * t + phase)
    )
    return dq, dqdot


def integrate_oscillator(p: OscillatorParams, t, phase: Optional[float] = None):
    """Direct DOP853 integration of m q'' + k q = F0 cos(ωt + φ) sampled at ``t``."""
    phase = p.phase if phase is None else phase
    times = np.atleast_1d(np.asarray(t, dtype=float))
    order = np.argsort(times)
    t_end = float(times[order[-1]])
    if t_end < 0:
        raise ValueError("Oscillator times must be non-negative")

    def rhs(s, y):
        return [y[1], (p.force * math.cos(p.omega * s + phase) - p.spring * y[0]) / p.mass]

    if t_end == 0.0:
        if np.ndim(t) == 0:
            return p.q0, p.v0
        return np.full(times.shape, p.q0), np.full(times.shape, p.v0)

    solution = solve_ivp(
        rhs, (0.0, t_end), [p.q0, p.v0], method="DOP853",
        t_eval=times[order], rtol=ODE_RTOL, atol=ODE_ATOL,
    )
    if not solution.success:
        raise IntegrationError(f"Oscillator integration failed: {solution.message}")
    q = np.empty_like(times)
    qdot = np.empty_like(times)
    q[order], qdot[order] = solution.y[0], solution.y[1]
    if np.ndim(t) == 0:
        return float(q[0]), float(qdot[0])
    return q, qdot


def _scalar(value, like):
    return float(value) if np.ndim(like) == 0 else value


def trajectory(p: OscillatorParams, t):
    """(q, q') at ``t`` through whichever evaluation suits the detuning."""
    kind = regime(p)
    if kind == OscillatorRegime.RESONANT:
        q, qdot = _resonant(p, np.asarray(t, dtype=float), p.phase)
    elif kind == OscillatorRegime.OFF_RESONANT:
        q, qdot = _offresonant(p, np.asarray(t, dtype=float), p.phase)
    else:
        logger.warning(
            f"|ω - ω0| = {abs(p.omega - p.natural_frequency):.2e} is ill-conditioned "
            "for the off-resonant closed form; integrating numerically"
        )
        return integrate_oscillator(p, t)
    return _scalar(q, t), _scalar(qdot, t)


def resonant_trajectory(p: OscillatorParams, t):
    """q(t) = α cos ωt + [β/ω - F0 sin φ/(2mω²)] sin ωt + F0 t sin(ωt + φ)/(2mω), and q'(t)."""
    if regime(p) != OscillatorRegime.RESONANT:
        logger.debug("resonant_trajectory called off resonance; routing by detuning")
    return trajectory(p, t)


def offresonant_trajectory(p: OscillatorParams, t):
    """Free oscillation at ω0 plus the steady response C cos(ωt + φ), and q'(t)."""
    if regime(p) == OscillatorRegime.RESONANT:
        logger.debug("offresonant_trajectory called at resonance; routing to the resonant form")
    return trajectory(p, t)


def phase_sensitivity(p: OscillatorParams, t, phase: Optional[float] = None):
    """Analytic (∂q/∂φ, ∂q'/∂φ); finite differences of the numerical solution near resonance."""
    phase = p.phase if phase is None else phase
    kind = regime(p)
    t_arr = np.asarray(t, dtype=float)
    if kind == OscillatorRegime.RESONANT:
        dq, dqdot = _resonant_sensitivity(p, t_arr, phase)
    elif kind == OscillatorRegime.OFF_RESONANT:
        dq, dqdot = _offresonant_sensitivity(p, t_arr, phase)
    else:
        q_plus, v_plus = integrate_oscillator(p, t_arr, phase + FD_STEP)
        q_minus, v_minus = integrate_oscillator(p, t_arr, phase - FD_STEP)
        dq = (np.asarray(q_plus) - np.asarray(q_minus)) / (2.0 * FD_STEP)
        dqdot = (np.asarray(v_plus) - np.asarray(v_minus)) / (2.0 * FD_STEP)
    return _scalar(dq, t), _scalar(dqdot, t)


def mechanical_energy(p: OscillatorParams, q, qdot):
    return 0.5 * p.spring * np.square(q) + 0.5 * p.mass * np.square(qdot)


def deh_failure_certificate(p: OscillatorParams, t_grid: Sequence[float], phi_grid: Sequence[float],
                            lock_tol: float = LOCK_TOL, energy_tol: float = ENERGY_TOL) -> FailureReport:
    """
    Scan stopping times for one where the final state no longer depends on φ.

    A time is phase-locked when max over φ of max(|∂q/∂φ|, |∂q'/∂φ|/ω) is at
    most ``lock_tol``. At such times the energy change is computed for every φ;
    deterministic harvesting would need a locked time with non-zero ΔE.
    """
    times = np.asarray(t_grid, dtype=float)
    phases = np.asarray(phi_grid, dtype=float)
    if times.size == 0 or phases.size == 0:
        raise ValueError("Stopping-time and phase grids must be non-empty")

    kind = regime(p)
    if kind == OscillatorRegime.NEAR_RESONANT:
        logger.warning("Near-resonant oscillator: sensitivities from finite differences of numerical solutions")
        columns = [phase_sensitivity(p, times, phase=phi) for phi in phases]
        dq = np.stack([np.atleast_1d(c[0]) for c in columns], axis=1)
        dqdot = np.stack([np.atleast_1d(c[1]) for c in columns], axis=1)
    else:
        sensitivity = _resonant_sensitivity if kind == OscillatorRegime.RESONANT else _offresonant_sensitivity
        dq, dqdot = sensitivity(p, times[:, None], phases[None, :])

    max_dq = np.max(np.abs(dq), axis=1)
    max_dqdot = np.max(np.abs(dqdot), axis=1)
    combined = np.maximum(max_dq, max_dqdot / p.omega)

    energy0 = float(mechanical_energy(p, p.q0, p.v0))
    rows = []
    locked_times = []
    locked_energies = []
    for index, time in enumerate(times):
        locked = bool(combined[index] <= lock_tol)
        delta = None
        if locked:
            energies = [
                float(mechanical_energy(p, *trajectory(p.model_copy(update={"phase": float(phi)}), float(time))))
                for phi in phases
            ]
            delta = float(np.max(np.abs(np.array(energies) - energy0)))
            locked_times.append(float(time))
            locked_energies.append(delta)
        rows.append(SensitivityRow(
            time=float(time),
            max_dq_dphi=float(max_dq[index]),
            max_dqdot_dphi=float(max_dqdot[index]),
            phase_locked=locked,
            max_abs_delta_e=delta,
        ))

    max_locked = max(locked_energies) if locked_energies else None
    possible = any(delta > energy_tol for delta in locked_energies)
    logger.info(
        f"Oscillator certificate ({kind.value}): {len(locked_times)} phase-locked times of {times.size}, "
        f"min sensitivity {float(np.min(combined)):.3e}, DEH possible: {possible}"
    )
    return FailureReport(
        regime=kind,
        rows=rows,
        min_sensitivity=float(np.min(combined)),
        locked_times=locked_times,
        max_locked_delta_e=max_locked,
        deh_possible=possible,
    )


def dipole_scale(p: DipoleParams) -> float:
    """Factor c in Ω = c F: -1/α (electric), -β (magnetic), γ (macrospin)."""
    if p.kind == DipoleKind.ELECTRIC:
        return -1.0 / p.coupling
    if p.kind == DipoleKind.MAGNETIC:
        return -p.coupling
    return p.coupling


def dipole_rotation_vector(p: DipoleParams, t: float, amp: Optional[float] = None) -> np.ndarray:
    """Ω(t) for the field F0 z + 2A cos(ωt + φ) x."""
    a = p.amp if amp is None else amp
    scale = dipole_scale(p)
    return scale * np.array([2.0 * a * math.cos(p.omega * t + p.phase), 0.0, p.static_field])


def precession_rate(p: DipoleParams) -> float:
    """Free precession rate |c F0|; the drive is resonant when ω equals it."""
    return abs(dipole_scale(p) * p.static_field)


def dipole_drive_rate(p: DipoleParams) -> float:
    """Rotation rate of the co-rotating half of the drive, |c| A."""
    return abs(dipole_scale(p)) * p.amp


def integrate_dipole(p: DipoleParams, l0, duration: float, steps: int, certify: bool = True,
                     amp_fn: Optional[Callable[[float], float]] = None) -> TimeSeries:
    """
    Precess L (or m) under dL/dt = Ω(t) x L, optionally with a drive envelope ``amp_fn``.

    Damping only applies to the macrospin and is never certified; with
    ``certify=False`` damped runs go through ``integrate_llg_damped``.
    """
    if p.damping > 0:
        if certify:
            raise UnsupportedConfigurationError(
                f"Damping {p.damping} dissipates energy; deterministic harvesting is only certified at zero damping"
            )
        if p.kind != DipoleKind.LLG:
            raise UnsupportedConfigurationError(f"Damping applies to the llg model only, not {p.kind.value}")
        return integrate_llg_damped(p, l0, duration, steps)
    if amp_fn is None:
        field = RotationField(omega_fn=lambda t: dipole_rotation_vector(p, t), label=p.kind.value)
    else:
        field = RotationField(omega_fn=lambda t: dipole_rotation_vector(p, t, amp=amp_fn(t)), label=p.kind.value)
    return integrate_cross(l0, field, duration, steps)


def integrate_llg_damped(p: DipoleParams, m0, duration: float, steps: int) -> TimeSeries:
    """
    Landau-Lifshitz form of the damped macrospin equation,

        dm/dt = [Ω x m + a m̂ x (Ω x m)] / (1 + a²),  Ω = γ B(t),

    integrated with DOP853; |m| is conserved only to the solver tolerance.
    """
    if p.kind != DipoleKind.LLG:
        raise UnsupportedConfigurationError(f"Damped integration applies to the llg model only, not {p.kind.value}")
    m0 = np.asarray(m0, dtype=float)
    a = p.damping

    def rhs(t, m):
        torque = np.cross(dipole_rotation_vector(p, t), m)
        unit = m / np.linalg.norm(m)
        return (torque + a * np.cross(unit, torque)) / (1.0 + a * a)

    times = np.linspace(0.0, duration, steps + 1)
    solution = solve_ivp(rhs, (0.0, duration), m0, method="DOP853", t_eval=times, rtol=1e-10, atol=1e-12)
    if not solution.success:
        raise IntegrationError(f"Damped macrospin integration failed: {solution.message}")
    return TimeSeries(
        times=times,
        values={"r_x": solution.y[0], "r_y": solution.y[1], "r_z": solution.y[2]},
        final_state=solution.y[:, -1].copy(),
    )
