"""
Two-level dynamics of a harvester with bare Hamiltonian -(E/2)Z driven by a
source of random phase φ.

|0> is the ground state. Propagation uses midpoint-sampled piecewise
constant exponentials, so every step is exactly unitary.
"""

import logging
import math
from typing import Callable, Optional

import numpy as np

from .bloch import state_bloch_vectors
from .exceptions import HermiticityError, IntegrationError, InvalidStateError, ResonanceError
from .models import QubitParams, SystemKind, TimeSeries
from .smallmat import (
    HERMITIAN_TOL,
    UNITARY_TOL,
    X,
    Y,
    Z,
    ensure_hermitian,
    hermiticity_defect,
    mat_exp_i_stack,
    unitarity_defect,
)
from .utils import phase_grid

logger = logging.getLogger(__name__)

RESONANCE_TOL = 1e-12
NORM_TOL = 1e-9
NORM_DRIFT_TOL = 1e-6
DENSITY_TOL = 1e-10

GROUND = np.array([1.0, 0.0], dtype=complex)
EXCITED = np.array([0.0, 1.0], dtype=complex)

Hamiltonian = Callable[[float], np.ndarray]
AmplitudeFn = Callable[[float], float]


def h_full(p: QubitParams, t: float, amp: Optional[float] = None) -> np.ndarray:
    """Linearly polarised drive: -(E/2)Z + 2A cos(ωt + φ)X."""
    a = p.amp if amp is None else amp
    return -0.5 * p.gap * Z + 2.0 * a * math.cos(p.omega * t + p.phase) * X


def h_rwa(p: QubitParams, t: float, amp: Optional[float] = None) -> np.ndarray:
    """
    Co-rotating drive: -(E/2)Z + A cos θ X - A sin θ Y, θ = ωt + φ.

    Off-diagonal element <0|H|1> = A e^{iθ}.
    """
    a = p.amp if amp is None else amp
    theta = p.omega * t + p.phase
    return -0.5 * p.gap * Z + a * (math.cos(theta) * X - math.sin(theta) * Y)


def h_rotating(p: QubitParams, t: float = 0.0, amp: Optional[float] = None) -> np.ndarray:
    """Co-rotating drive seen from the frame turning at ω; constant for constant A."""
    a = p.amp if amp is None else amp
    return 0.5 * (p.omega - p.gap) * Z + a * (math.cos(p.phase) * X - math.sin(p.phase) * Y)


_BUILDERS = {
    SystemKind.QUANTUM_FULL: h_full,
    SystemKind.QUANTUM_RWA: h_rwa,
}


def hamiltonian(p: QubitParams, kind: SystemKind = SystemKind.QUANTUM_FULL,
                amp_fn: Optional[AmplitudeFn] = None) -> Hamiltonian:
    """Bind a builder to ``p`` and an optional amplitude envelope."""
    try:
        builder = _BUILDERS[kind]
    except KeyError:
        raise ValueError(f"No quantum Hamiltonian for system kind {kind.value}") from None
    if amp_fn is None:
        return lambda t: builder(p, t)
    return lambda t: builder(p, t, amp=amp_fn(t))


def closed_form_propagator(p: QubitParams, t: float) -> np.ndarray:
    """
    Resonant co-rotating propagator with its global phase removed:

        U = cos(At) diag(1, e^{-iωt}) - i sin(At) [[0, e^{iφ}], [e^{-i(ωt+φ)}, 0]]

    so that U|0> = cos(At)|0> - i sin(At) e^{-i(ωt+φ)}|1>.
    """
    if not p.is_resonant(RESONANCE_TOL):
        raise ResonanceError(
            f"Closed-form propagator needs ω = E within {RESONANCE_TOL:.0e} "
            f"(ω - E = {p.detuning:.3e}); use propagate() for detuned drives"
        )
    c, s = math.cos(p.amp * t), math.sin(p.amp * t)
    wt = p.omega * t
    return np.array([
        [c, -1j * s * np.exp(1j * p.phase)],
        [-1j * s * np.exp(-1j * (wt + p.phase)), c * np.exp(-1j * wt)],
    ])


def _check_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (2,):
        raise InvalidStateError(f"Expected a two-component state vector, got shape {psi.shape}")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > NORM_TOL:
        raise InvalidStateError(f"State vector is not normalised: |psi| = {norm:.12f}")
    return psi


def _step_count(t_final: float, omega: float, steps_per_period: int) -> int:
    if steps_per_period < 16:
        raise ValueError(f"steps_per_period must be at least 16, got {steps_per_period}")
    if not t_final > 0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    nominal_dt = (2.0 * math.pi / omega) / steps_per_period
    return max(1, math.ceil(t_final / nominal_dt - 1e-9))


def propagate(psi0, h: Hamiltonian, t_final: float, steps_per_period: int = 200,
              omega: float = 1.0) -> TimeSeries:
    """
    Integrate i dψ/dt = H(t)ψ with steps of at most (2π/ω)/steps_per_period.

    The step is shrunk slightly so that the last sample lands on ``t_final``.
    Records p_excited and the geometric Bloch components at every step.
    """
    psi = _check_state(psi0)
    n = _step_count(t_final, omega, steps_per_period)
    dt = t_final / n
    times = np.linspace(0.0, t_final, n + 1)

    h_stack = np.array([h(t) for t in times[:-1] + 0.5 * dt])
    ensure_hermitian(h_stack[0])
    hermitian = hermiticity_defect(h_stack)
    if hermitian > HERMITIAN_TOL:
        raise HermiticityError(f"Hamiltonian is not Hermitian at every step: defect {hermitian:.3e}")
    steps = mat_exp_i_stack(h_stack, dt)
    defect = unitarity_defect(steps)
    if defect > UNITARY_TOL:
        raise IntegrationError(f"Step propagator is not unitary: worst defect {defect:.3e} over {n} steps")

    states = np.empty((n + 1, 2), dtype=complex)
    states[0] = psi
    for k in range(n):
        psi = steps[k] @ psi
        states[k + 1] = psi

    drift = abs(float(np.linalg.norm(psi)) - 1.0)
    if drift > NORM_DRIFT_TOL:
        raise IntegrationError(f"Norm drift {drift:.3e} after {n} steps; reduce the step size")
    logger.debug(f"propagate: {n} steps of {dt:.4g}, norm drift {drift:.2e}")

    r = state_bloch_vectors(states)
    return TimeSeries(
        times=times,
        values={
            "p_excited": np.abs(states[:, 1]) ** 2,
            "r_x": r[:, 0],
            "r_y": r[:, 1],
            "r_z": r[:, 2],
        },
        final_state=psi,
    )


def _hamiltonian_stack(kind: SystemKind, p: QubitParams, phases: np.ndarray, t: float, amp: float) -> np.ndarray:
    """h_full or h_rwa for every phase in ``phases`` at time ``t``, shape (N, 2, 2)."""
    theta = p.omega * t + phases
    h = np.zeros((phases.size, 2, 2), dtype=complex)
    h[:, 0, 0] = -0.5 * p.gap
    h[:, 1, 1] = 0.5 * p.gap
    if kind == SystemKind.QUANTUM_FULL:
        off = 2.0 * amp * np.cos(theta)
        h[:, 0, 1] = off
        h[:, 1, 0] = off
    elif kind == SystemKind.QUANTUM_RWA:
        h[:, 0, 1] = amp * np.exp(1j * theta)
        h[:, 1, 0] = amp * np.exp(-1j * theta)
    else:
        raise ValueError(f"No quantum Hamiltonian for system kind {kind.value}")
    return h


def _evolve(p: QubitParams, phases, t_final: float, steps_per_period: int, kind: SystemKind,
            amp_fn: Optional[AmplitudeFn], psi0, record: bool):
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    psi = np.tile(_check_state(psi0), (phases.size, 1))
    n = _step_count(t_final, p.omega, steps_per_period)
    dt = t_final / n
    times = np.linspace(0.0, t_final, n + 1)

    states = None
    if record:
        states = np.empty((n + 1, phases.size, 2), dtype=complex)
        states[0] = psi
    worst = 0.0
    for k in range(n):
        t_mid = times[k] + 0.5 * dt
        amp = p.amp if amp_fn is None else amp_fn(t_mid)
        u = mat_exp_i_stack(_hamiltonian_stack(kind, p, phases, t_mid, amp), dt)
        worst = max(worst, unitarity_defect(u))
        psi = np.einsum("nij,nj->ni", u, psi)
        if record:
            states[k + 1] = psi

    if worst > UNITARY_TOL:
        raise IntegrationError(f"Step propagator is not unitary: worst defect {worst:.3e} over {n} steps")
    drift = float(np.max(np.abs(np.linalg.norm(psi, axis=1) - 1.0)))
    if drift > NORM_DRIFT_TOL:
        raise IntegrationError(f"Norm drift {drift:.3e} after {n} steps; reduce the step size")
    logger.debug(f"ensemble: {phases.size} phases x {n} steps, norm drift {drift:.2e}")
    return times, (states if record else psi)


def ensemble_trajectory(p: QubitParams, phases, t_final: float, steps_per_period: int = 200,
                        kind: SystemKind = SystemKind.QUANTUM_FULL,
                        amp_fn: Optional[AmplitudeFn] = None,
                        psi0=GROUND) -> tuple[np.ndarray, np.ndarray]:
    """
    Evolve one state per source phase on a shared time grid.

    Returns the times, shape (n + 1,), and the states, shape (n + 1, N, 2).
    ``p.phase`` is ignored in favour of ``phases``.
    """
    return _evolve(p, phases, t_final, steps_per_period, kind, amp_fn, psi0, record=True)


def evolve_ensemble(p: QubitParams, phases, t_final: float, steps_per_period: int = 200,
                    kind: SystemKind = SystemKind.QUANTUM_FULL,
                    amp_fn: Optional[AmplitudeFn] = None,
                    psi0=GROUND) -> np.ndarray:
    """Final states, shape (N, 2), one per phase; same stepping as ``propagate``."""
    _, final = _evolve(p, phases, t_final, steps_per_period, kind, amp_fn, psi0, record=False)
    return final


def pure_density(psi) -> np.ndarray:
    psi = _check_state(psi)
    return np.outer(psi, psi.conj())


def ensemble_density(states: np.ndarray) -> np.ndarray:
    """Uniform mixture of the states stacked along axis -2."""
    return np.einsum("...ni,...nj->...ij", states, states.conj()) / states.shape[-2]


def check_density(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"Density matrix must be square, got shape {rho.shape}")
    hermitian_defect = float(np.max(np.abs(rho - rho.conj().T)))
    if hermitian_defect > 1e-12:
        raise InvalidStateError(f"Density matrix is not Hermitian: defect {hermitian_defect:.3e}")
    trace = complex(np.trace(rho))
    if abs(trace - 1.0) > DENSITY_TOL:
        raise InvalidStateError(f"Density matrix trace is {trace.real:.12f}, expected 1")
    lowest = float(np.linalg.eigvalsh(rho)[0])
    if lowest < -DENSITY_TOL:
        raise InvalidStateError(f"Density matrix has negative eigenvalue {lowest:.3e}")
    return rho


def phi_averaged_state(p: QubitParams, t: float, mode: str = "closed", n_phases: int = 64) -> np.ndarray:
    """
    Phase-averaged state of the resonant co-rotating protocol started in |0>.

    ``closed`` returns cos²(At)|0><0| + sin²(At)|1><1|; ``grid`` averages the
    closed-form propagator over ``n_phases`` uniform phases.
    """
    if not p.is_resonant(RESONANCE_TOL):
        raise ResonanceError(f"Phase-averaged closed form needs ω = E (ω - E = {p.detuning:.3e})")
    if mode == "closed":
        c2 = math.cos(p.amp * t) ** 2
        return np.diag([c2, 1.0 - c2]).astype(complex)
    if mode == "grid":
        states = np.array([
            closed_form_propagator(p.model_copy(update={"phase": phi}), t) @ GROUND
            for phi in phase_grid(n_phases)
        ])
        return ensemble_density(states)
    raise ValueError(f"Unknown averaging mode: {mode!r}")


def von_neumann_entropy(rho) -> float:
    """Entropy in bits, with 0 log 0 = 0."""
    values = np.linalg.eigvalsh(check_density(rho))
    values = values[values > 0.0]
    return float(max(0.0, -np.sum(values * np.log2(values))))


def excited_population(psi) -> float:
    return float(abs(_check_state(psi)[1]) ** 2)


def trace_distance(rho, sigma) -> float:
    """½ Σ|λ_k| over the eigenvalues of ρ - σ."""
    diff = np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))

