"""
Robustness sweeps: final excited population over a grid of amplitudes,
phases and multiplicative deviations of amplitude, stopping time and
frequency, evaluated under the full linearly polarised Hamiltonian.
"""

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List

import numpy as np

from .exceptions import ConfigError
from .models import AxisName, Envelope, EnvelopeKind, QubitParams, RunConfig, SweepAxis, SweepTable, SystemKind
from .protocol import amplitude_fn, stopping_time
from .qdyn import evolve_ensemble
from .utils import phase_grid, sampled_phases

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["min_pop", "mean_pop", "max_pop", "spread", "mean_delta_e"]


def resolve_axes(cfg: RunConfig) -> List[SweepAxis]:
    try:
        axes = cfg.sweep_axes()
    except ValueError as e:
        raise ConfigError(f"Invalid sweep axis: {e}", key="axis") from e
    if cfg.system == SystemKind.CLASSICAL_DIPOLE:
        raise ConfigError("Sweeps run the quantum dynamics only", key="system")
    for axis in axes:
        if axis.name == AxisName.RAMP and not (0.0 <= axis.min and axis.max < 0.5):
            raise ConfigError(f"Ramp fractions must lie in [0, 0.5): {axis.label()}", key="axis")
        if axis.name == AxisName.RAMP and cfg.build_envelope().kind != EnvelopeKind.CONSTANT:
            raise ConfigError(
                f"A ramp axis replaces the envelope; drop --envelope {cfg.envelope} or the {axis.label()} axis",
                key="axis",
            )
        if axis.name in (AxisName.AMP, AxisName.TIME_DEV, AxisName.FREQ_DEV) and axis.min <= 0:
            raise ConfigError(f"Axis {axis.name.value} must stay positive: {axis.label()}", key="axis")
        if axis.name == AxisName.AMP_DEV and axis.min < 0:
            raise ConfigError(f"Amplitude deviation must be non-negative: {axis.label()}", key="axis")
    return axes


def ensemble_phases(cfg: RunConfig) -> np.ndarray:
    if cfg.phi_mode == "sampled":
        return sampled_phases(cfg.phi_grid, cfg.seed)
    return phase_grid(cfg.phi_grid)


def _nominal_envelope(cfg: RunConfig, cell: Dict[AxisName, float]) -> Envelope:
    amp = cell.get(AxisName.AMP, cfg.amp)
    if AxisName.RAMP in cell:
        return Envelope(kind=EnvelopeKind.RAMP, amp=amp, ramp_fraction=cell[AxisName.RAMP])
    return cfg.build_envelope(amp=amp)


def evaluate_cell(cfg: RunConfig, cell: Dict[AxisName, float], phases: np.ndarray) -> List[float]:
    """
    Population statistics of one grid cell.

    The protocol is planned for the nominal envelope; the deviations then
    scale the delivered amplitude, the carrier frequency and the time at
    which the protocol actually stops.
    """
    nominal = _nominal_envelope(cfg, cell)
    planned = stopping_time(nominal) if cfg.t_final == "auto" else float(cfg.t_final)
    delivered = nominal.model_copy(update={"amp": nominal.amp * cell.get(AxisName.AMP_DEV, 1.0)})
    omega = nominal.carrier(cfg.drive_omega) * cell.get(AxisName.FREQ_DEV, 1.0)
    stop = planned * cell.get(AxisName.TIME_DEV, 1.0)

    if AxisName.PHASE in cell:
        phases = np.array([cell[AxisName.PHASE]])
    p = QubitParams(gap=cfg.gap, amp=delivered.amp, omega=omega, phase=0.0)
    amp = None if delivered.kind == EnvelopeKind.CONSTANT else amplitude_fn(delivered, planned)
    finals = evolve_ensemble(p, phases, stop, cfg.steps_per_period, kind=cfg.system, amp_fn=amp)

    populations = np.abs(finals[:, 1]) ** 2
    # start in |0>, so ΔE = E |<1|ψ_T>|²
    return [
        float(np.min(populations)),
        float(np.mean(populations)),
        float(np.max(populations)),
        float(np.max(populations) - np.min(populations)),
        float(cfg.gap * np.mean(populations)),
    ]


def _evaluate(job):
    cfg, cell, phases = job
    return evaluate_cell(cfg, cell, phases)


def run_sweep(cfg: RunConfig) -> SweepTable:
    """
    Evaluate every cell of the axis grid in row-major order.

    With ``cfg.jobs`` > 1 cells fan out to a process pool; rows are
    collected by grid index so the table is the same either way.
    """
    axes = resolve_axes(cfg)
    phases = ensemble_phases(cfg)
    names = [axis.name for axis in axes]
    grid = list(itertools.product(*(axis.values() for axis in axes)))
    jobs = [(cfg, dict(zip(names, map(float, values))), phases) for values in grid]
    logger.info(f"Sweep over {' x '.join(a.label() for a in axes) or 'a single cell'}: {len(jobs)} cells, {cfg.jobs} worker(s)")

    results: List[List[float]] = [None] * len(jobs)
    step = max(1, len(jobs) // 10)
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunk = max(1, math.ceil(len(jobs) / (4 * cfg.jobs)))
            for index, row in enumerate(pool.map(_evaluate, jobs, chunksize=chunk)):
                results[index] = row
                if (index + 1) % step == 0:
                    logger.info(f"Sweep progress: {index + 1}/{len(jobs)} cells")
    else:
        for index, job in enumerate(jobs):
            results[index] = _evaluate(job)
            if (index + 1) % step == 0:
                logger.info(f"Sweep progress: {index + 1}/{len(jobs)} cells")

    rows = [list(map(float, values)) + row for values, row in zip(grid, results)]
    return SweepTable(
        columns=[axis.name.value for axis in axes] + RESULT_COLUMNS,
        rows=rows,
        axes=axes,
        config=cfg.model_dump(mode="json"),
    )
