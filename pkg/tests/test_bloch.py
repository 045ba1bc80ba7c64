import math

import numpy as np
import pytest

from deh_sim.bloch import (
    RotationField,
    bloch_vector,
    default_steps,
    integrate_cross,
    rabi_vector,
    rotating_rabi_vector,
    to_rotating_frame,
)
from deh_sim.exceptions import IntegrationError
from deh_sim.models import QubitParams, SystemKind
from deh_sim.qdyn import GROUND, hamiltonian, propagate

SOUTH = np.array([0.0, 0.0, -1.0])


def test_bloch_vectors_of_basis_states():
    np.testing.assert_allclose(bloch_vector(np.diag([1.0, 0.0])), [0, 0, -1], atol=1e-15)
    np.testing.assert_allclose(bloch_vector(np.diag([0.0, 1.0])), [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(bloch_vector(0.5 * np.ones((2, 2))), [1, 0, 0], atol=1e-15)


def test_rabi_vector_at_start(resonant):
    np.testing.assert_allclose(rabi_vector(resonant, 0.0), [0.1, 0.0, 1.0], atol=1e-15)


def test_rabi_vector_norm(resonant, rng):
    for t in rng.uniform(0, 100, size=10):
        norm = np.linalg.norm(rabi_vector(resonant, t))
        assert norm == pytest.approx(math.sqrt(4 * resonant.amp ** 2 + resonant.gap ** 2), rel=1e-14)


def test_rotating_frame_freezes_resonant_drive(rng):
    for phi, t in zip(rng.uniform(0, 2 * np.pi, size=5), rng.uniform(0, 100, size=5)):
        p = QubitParams(gap=1.0, amp=0.05, omega=1.0, phase=phi)
        seen = to_rotating_frame(rabi_vector(p, t), p.omega * t, frame_rate=p.omega)
        np.testing.assert_allclose(seen, [0.1 * math.cos(phi), 0.1 * math.sin(phi), 0.0], atol=1e-12)
        np.testing.assert_allclose(seen, rotating_rabi_vector(p), atol=1e-12)


def test_rotating_frame_keeps_poles_and_identity():
    np.testing.assert_allclose(to_rotating_frame(SOUTH, 1.3), SOUTH, atol=1e-15)
    v = np.array([0.3, -0.2, 0.5])
    np.testing.assert_allclose(to_rotating_frame(v, 0.0), v, atol=1e-15)


def test_constant_field_flips_south_pole():
    amp = 0.05
    field = RotationField.constant([2 * amp, 0.0, 0.0])
    duration = math.pi / (2 * amp)
    series = integrate_cross(SOUTH, field, duration, 2000)
    np.testing.assert_allclose(series.final_state, [0, 0, 1], atol=1e-9)

    dt = duration / 2000
    initial_rate = (series.vector(1) - series.vector(0)) / dt
    np.testing.assert_allclose(initial_rate, [0.0, 2 * amp, 0.0], atol=2e-4)
    np.testing.assert_allclose(np.cross(-SOUTH, field(0.0)), np.cross(field(0.0), SOUTH))


def test_lab_frame_flip_for_every_phase(phases64):
    for phi in phases64:
        p = QubitParams(gap=1.0, amp=0.05, omega=1.0, phase=phi)
        duration = math.pi / (2 * p.amp)
        series = integrate_cross(SOUTH, RotationField.lab_frame(p), duration, default_steps(duration, 1.0))
        assert series.final("r_z") == pytest.approx(1.0, abs=1e-6)
        norms = np.linalg.norm(np.column_stack([series.values[k] for k in ("r_x", "r_y", "r_z")]), axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-10


def test_lab_and_rotating_frames_agree():
    p = QubitParams(gap=1.0, amp=0.25, omega=1.0, phase=0.4)
    duration = 2 * math.pi
    steps = 80000
    lab = integrate_cross(SOUTH, RotationField.lab_frame(p), duration, steps)
    rotating = integrate_cross(SOUTH, RotationField.constant(rotating_rabi_vector(p)), duration, steps)
    for index in range(0, steps + 1, 8000):
        t = lab.times[index]
        np.testing.assert_allclose(to_rotating_frame(lab.vector(index), p.omega * t), rotating.vector(index), atol=1e-8)


def test_statevector_and_bloch_pictures_agree(resonant):
    p = resonant.model_copy(update={"phase": 2.2})
    duration = math.pi / (2 * p.amp)
    series = propagate(GROUND, hamiltonian(p, SystemKind.QUANTUM_RWA), duration)
    geometric = integrate_cross(SOUTH, RotationField.lab_frame(p), duration, series.times.size - 1)
    for axis in ("r_x", "r_y", "r_z"):
        np.testing.assert_allclose(series.values[axis], geometric.values[axis], atol=1e-9)


def test_too_few_steps_are_refused():
    with pytest.raises(IntegrationError):
        integrate_cross(SOUTH, RotationField.constant([100.0, 0.0, 0.0]), 1.0, 16)


def test_default_steps_scale_with_turns():
    assert default_steps(2 * math.pi, 1.0, 200) == 200
    assert default_steps(1e-3, 1.0, 200) == 16
