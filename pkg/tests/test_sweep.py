import numpy as np
import pytest
from pydantic import ValidationError

from deh_sim.exceptions import ConfigError
from deh_sim.models import AxisName, RunConfig, SweepAxis
from deh_sim.output import render_csv
from deh_sim.qdyn import GROUND, hamiltonian, propagate
from deh_sim.sweep import RESULT_COLUMNS, evaluate_cell, ensemble_phases, resolve_axes, run_sweep


def _config(**overrides):
    return RunConfig(command="sweep", **overrides)


def test_axis_parsing():
    axis = SweepAxis.parse("A:0.005:0.3:60")
    assert axis.name == AxisName.AMP
    assert axis.values()[0] == 0.005 and axis.values()[-1] == 0.3
    phi = SweepAxis.parse("phi:0:6.283185307179586:4")
    np.testing.assert_allclose(phi.values(), [0, np.pi / 2, np.pi, 3 * np.pi / 2])


@pytest.mark.parametrize("text", ["bogus:0:1:3", "A:0:1", "A:0:inf:3", "A:0:1:0", "A:1:0:3"])
def test_bad_axes_are_refused(text):
    with pytest.raises(ValidationError):
        _config(axis=[text])


def test_repeated_axis_is_refused():
    with pytest.raises(ValidationError):
        _config(axis=["A:0.1:0.2:2", "amp:0.1:0.2:2"])


@pytest.mark.parametrize("text", ["ramp:0:0.6:3", "A:0:0.1:3", "dT:-1:1:3"])
def test_out_of_range_axes_are_config_errors(text):
    with pytest.raises(ConfigError):
        resolve_axes(_config(axis=[text]))


@pytest.mark.parametrize("envelope", ["beat:1.05,0.95", "ramp:0.1"])
def test_ramp_axis_conflicts_with_a_shaped_envelope(envelope):
    with pytest.raises(ConfigError) as excinfo:
        run_sweep(_config(envelope=envelope, axis=["ramp:0:0.1:2"], phi_grid=4))
    assert excinfo.value.key == "axis"


def test_classical_system_cannot_be_swept():
    with pytest.raises(ConfigError):
        resolve_axes(_config(system="classical-dipole"))


def test_single_phase_cell_matches_simulation():
    cfg = _config(amp=0.05)
    row = evaluate_cell(cfg, {AxisName.PHASE: 1.0}, ensemble_phases(cfg))
    p = cfg.qubit(phase=1.0)
    series = propagate(GROUND, hamiltonian(p), np.pi / 0.1, cfg.steps_per_period)
    assert row[0] == row[2] == pytest.approx(series.final("p_excited"), abs=1e-12)
    assert row[3] == 0.0


def test_table_shape_and_order():
    cfg = _config(axis=["A:0.1:0.2:3", "phi:0:6.283185307179586:4"], phi_grid=4)
    table = run_sweep(cfg)
    assert table.columns == ["A", "phi"] + RESULT_COLUMNS
    assert len(table.rows) == 12
    assert [row[0] for row in table.rows[:4]] == [0.1] * 4
    assert table.rows[1][1] == pytest.approx(np.pi / 2)
    for row in table.rows:
        assert row[2] <= row[3] <= row[4]


@pytest.mark.parametrize("axis, bound", [("dA:0.96:1.04:5", 0.99), ("dT:0.96:1.04:5", 0.985)])
def test_small_deviations_keep_the_flip(axis, bound):
    table = run_sweep(_config(amp=0.05, axis=[axis], phi_grid=16))
    assert min(row[1] for row in table.rows) >= bound


@pytest.mark.parametrize("amp, low, high", [(0.05, 0.95, 1.05), (0.01, 0.98, 1.02)])
def test_frequency_response_peaks_on_resonance(amp, low, high):
    table = run_sweep(_config(amp=amp, axis=[f"domega:{low}:{high}:11"], phi_grid=8))
    means = [row[2] for row in table.rows]
    assert table.rows[int(np.argmax(means))][0] == pytest.approx(1.0)
    assert all(a < b for a, b in zip(means[:5], means[1:6]))
    assert all(a > b for a, b in zip(means[5:], means[6:]))


def test_ramp_axis_stays_robust():
    table = run_sweep(_config(amp=0.05, axis=["ramp:0:0.2:3"], phi_grid=16))
    assert min(row[1] for row in table.rows) >= 0.99


def test_sampled_phases_are_reproducible():
    first = ensemble_phases(_config(phi_mode="sampled", seed=7, phi_grid=5))
    second = ensemble_phases(_config(phi_mode="sampled", seed=7, phi_grid=5))
    np.testing.assert_array_equal(first, second)
    assert np.all((first >= 0) & (first < 2 * np.pi))


def test_parallel_sweep_is_byte_identical():
    axes = ["A:0.1:0.2:2", "dT:0.98:1.02:2"]
    serial = run_sweep(_config(axis=axes, phi_grid=4, jobs=1))
    parallel = run_sweep(_config(axis=axes, phi_grid=4, jobs=2))
    assert serial.rows == parallel.rows
    assert render_csv(serial, 12) == render_csv(parallel, 12)
