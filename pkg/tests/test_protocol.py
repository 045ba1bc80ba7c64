import math

import numpy as np
import pytest
from scipy.integrate import quad

from deh_sim.exceptions import BranchCutError, EnergyDirectionError, NoSolutionError
from deh_sim.models import Envelope, EnvelopeKind, QubitParams, SystemKind
from deh_sim.protocol import amplitude_fn, deh_check, rotation_angle, stopping_time, vu_family
from deh_sim.qdyn import GROUND, h_rotating, propagate
from deh_sim.smallmat import Z, exp_i
from deh_sim.utils import phase_grid

QUTRIT = np.diag([-1.0, 0.0, 1.0])

ENVELOPES = [
    Envelope(amp=0.05),
    Envelope(kind=EnvelopeKind.RAMP, amp=0.05, ramp_fraction=0.2),
    Envelope(kind=EnvelopeKind.BEAT, amp=0.05, omega1=1.05, omega2=0.95),
]


def test_constant_stopping_time_is_exact():
    assert stopping_time(Envelope(amp=0.05)) == math.pi / 0.1


def test_ramp_stopping_time():
    env = Envelope(kind=EnvelopeKind.RAMP, amp=0.05, ramp_fraction=0.2)
    assert stopping_time(env) == pytest.approx(math.pi / (2 * 0.05 * 0.8), rel=1e-9)


def test_beat_stopping_time_matches_quadrature():
    env = Envelope(kind=EnvelopeKind.BEAT, amp=0.05, omega1=1.05, omega2=0.95)
    stop = stopping_time(env)
    zero = 0.5 * math.pi / 0.05
    angle, _ = quad(lambda t: 2 * env.amplitude_at(t, stop), 0.0, stop, points=[zero] if zero < stop else None)
    assert angle == pytest.approx(math.pi, abs=1e-8)


def test_zero_amplitude_has_no_stopping_time():
    with pytest.raises(NoSolutionError):
        stopping_time(Envelope(amp=0.0))


@pytest.mark.parametrize("env", ENVELOPES, ids=lambda e: e.label())
def test_rotation_angle_at_stopping_time(env):
    adopted, literal = rotation_angle(env, stopping_time(env))
    assert adopted == pytest.approx(math.pi, abs=1e-9)
    assert literal == pytest.approx(0.5 * adopted, rel=1e-12)


def test_ramp_with_zero_fraction_is_constant_on_the_window():
    env = Envelope(kind=EnvelopeKind.RAMP, amp=0.05, ramp_fraction=0.0)
    assert env.amplitude_at(3.0, 10.0) == 0.05
    assert env.amplitude_at(11.0, 10.0) == 0.0


@pytest.mark.parametrize("env", ENVELOPES, ids=lambda e: e.label())
def test_rotating_frame_dynamics_complete_the_flip(env):
    stop = stopping_time(env)
    p = QubitParams(gap=1.0, amp=env.amp, omega=1.0, phase=1.1)
    a = amplitude_fn(env, stop)
    series = propagate(GROUND, lambda t: h_rotating(p, t, amp=a(t)), stop, steps_per_period=200)
    assert series.final("p_excited") >= 1 - 1e-6


def test_rwa_check_is_exactly_phase_independent(phases64):
    report = deh_check(SystemKind.QUANTUM_RWA, Envelope(amp=0.05), phases64)
    assert report.passed
    assert report.spread <= 1e-9
    assert report.delta_e_min == pytest.approx(1.0, abs=1e-6)


def test_full_check_passes_at_weak_coupling(phases64):
    report = deh_check(SystemKind.QUANTUM_FULL, Envelope(amp=0.05), phases64, tolerance=0.01)
    assert report.passed
    assert report.min_population >= 0.994
    assert report.std_population <= 0.003
    assert report.n_phases == 64
    assert report.angle_adopted == pytest.approx(math.pi)


def test_full_check_fails_at_strong_coupling(phases64):
    report = deh_check(SystemKind.QUANTUM_FULL, Envelope(amp=0.5), phases64)
    assert not report.passed


@pytest.mark.parametrize("fraction", [0.1, 0.2])
def test_ramped_envelopes_stay_robust(fraction, phases64):
    env = Envelope(kind=EnvelopeKind.RAMP, amp=0.05, ramp_fraction=fraction)
    report = deh_check(SystemKind.QUANTUM_FULL, env, phases64)
    assert report.min_population >= 0.99


def test_check_ignores_phase_order():
    phases = phase_grid(16)
    forward = deh_check(SystemKind.QUANTUM_FULL, Envelope(amp=0.05), phases)
    backward = deh_check(SystemKind.QUANTUM_FULL, Envelope(amp=0.05), phases[::-1])
    assert forward.passed == backward.passed
    assert forward.min_population == pytest.approx(backward.min_population, abs=1e-14)
    assert forward.max_population == pytest.approx(backward.max_population, abs=1e-14)


def test_classical_dipole_check_harvests():
    report = deh_check(SystemKind.CLASSICAL_DIPOLE, Envelope(amp=0.01), phase_grid(16))
    assert report.passed
    assert report.min_population >= 0.995
    assert report.delta_e_min > 0


def test_empty_phase_grid_is_refused():
    with pytest.raises(ValueError):
        deh_check(SystemKind.QUANTUM_RWA, Envelope(amp=0.05), [])


def _check_family(family, source, target):
    u = family.unitary
    v = family.potential
    np.testing.assert_allclose(v, v.conj().T, atol=1e-12)
    np.testing.assert_allclose(exp_i((family.h0 + v) * family.tau), u, atol=1e-9)
    assert abs(u[target, source]) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_qutrit_transfer_from_lowest_to_highest():
    family = vu_family(QUTRIT, 0, 2, 0.0, 0.0, 1.0)
    _check_family(family, 0, 2)
    assert family.delta_energy == pytest.approx(2.0)


def test_transfer_for_any_phases(rng):
    for _ in range(20):
        theta, theta_tilde = rng.uniform(-np.pi, np.pi, size=2)
        try:
            family = vu_family(QUTRIT, 0, 2, theta, theta_tilde, float(rng.uniform(0.5, 3.0)))
        except BranchCutError:
            continue
        _check_family(family, 0, 2)
        moved = family.unitary @ np.diag([1.0, 0.0, 0.0]) @ family.unitary.conj().T
        np.testing.assert_allclose(moved, np.diag([0.0, 0.0, 1.0]), atol=1e-12)


def test_qubit_transfer_potential_is_hermitian():
    family = vu_family(-0.5 * Z, 0, 1, math.pi / 2, math.pi / 2, 2.0)
    _check_family(family, 0, 1)


def test_transfer_must_go_upward():
    with pytest.raises(EnergyDirectionError):
        vu_family(QUTRIT, 2, 0, 0.0, 0.0, 1.0)


def test_transfer_rejects_bad_levels():
    with pytest.raises(ValueError):
        vu_family(QUTRIT, 0, 3, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        vu_family(QUTRIT, 0, 2, 0.0, 0.0, 0.0)
