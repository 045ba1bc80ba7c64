import logging
import math
import time
import traceback

import numpy as np

from .bloch import default_steps
from .classical import deh_failure_certificate, integrate_dipole, precession_rate
from .exceptions import ConfigError, DehError
from .harvest import harvest_report, model_from_lab_units
from .models import (
    Command,
    DipoleKind,
    DipoleParams,
    EnvelopeKind,
    OscillatorParams,
    ResultTable,
    RunConfig,
    SystemKind,
)
from .protocol import amplitude_fn, dipole_flip_time, stopping_time, vu_family
from .qdyn import (
    GROUND,
    RESONANCE_TOL,
    ensemble_density,
    ensemble_trajectory,
    hamiltonian,
    phi_averaged_state,
    propagate,
    von_neumann_entropy,
)
from .sweep import ensemble_phases, run_sweep
from .utils import log_duration, phase_grid

logger = logging.getLogger(__name__)

VECTOR_NAMES = {
    DipoleKind.ELECTRIC: "L",
    DipoleKind.MAGNETIC: "L",
    DipoleKind.LLG: "m",
}


class SimulationRouter:
    """
    Dispatches a resolved run configuration to the handler for its command.

    Every handler returns a ResultTable carrying the config echo, so any
    emitted file is enough to rerun the experiment.
    """

    def __init__(self):
        self.command_handlers = {
            Command.SIMULATE: self._handle_simulate,
            Command.SWEEP: self._handle_sweep,
            Command.CLASSICAL: self._handle_classical,
            Command.ENTROPY: self._handle_entropy,
            Command.VU: self._handle_vu,
            Command.POWER: self._handle_power,
        }
        self.run_count = 0

    def route(self, cfg: RunConfig) -> ResultTable:
        start_time = time.perf_counter()
        self.run_count += 1
        logger.info(f"Routing run {self.run_count}: {cfg.command.value}")

        if cfg.command not in self.command_handlers:
            raise ConfigError(f"Unsupported command: {cfg.command}", key="command")

        try:
            table = self.command_handlers[cfg.command](cfg)
        except DehError as e:
            logger.error(f"{cfg.command.value} failed: {e}")
            logger.debug(traceback.format_exc())
            raise

        table.config.setdefault("command", cfg.command.value)
        logger.info(f"{cfg.command.value} produced {len(table.rows)} rows in {time.perf_counter() - start_time:.3f}s")
        return table

    @staticmethod
    def _stop_time(cfg: RunConfig, envelope) -> float:
        return stopping_time(envelope) if cfg.t_final == "auto" else float(cfg.t_final)

    @log_duration("simulate")
    def _handle_simulate(self, cfg: RunConfig) -> ResultTable:
        if cfg.system == SystemKind.CLASSICAL_DIPOLE:
            raise ConfigError("simulate runs quantum dynamics; use the classical command for dipoles", key="system")
        env = cfg.build_envelope()
        stop = self._stop_time(cfg, env)
        p = cfg.qubit().model_copy(update={"omega": env.carrier(cfg.drive_omega)})
        amp = None if env.kind == EnvelopeKind.CONSTANT else amplitude_fn(env, stopping_time(env))
        series = propagate(GROUND, hamiltonian(p, cfg.system, amp), stop, cfg.steps_per_period, omega=p.omega)
        logger.info(f"simulate: T = {stop:.12g}, final excited population {series.final('p_excited'):.12f}")
        table = series.to_table(cfg.model_dump(mode="json"))
        table.config["t_stop"] = stop
        return table

    @log_duration("sweep")
    def _handle_sweep(self, cfg: RunConfig) -> ResultTable:
        return run_sweep(cfg)

    @log_duration("classical")
    def _handle_classical(self, cfg: RunConfig) -> ResultTable:
        if cfg.model == "oscillator":
            return self._oscillator_certificate(cfg)
        return self._dipole_trajectory(cfg)

    def _oscillator_certificate(self, cfg: RunConfig) -> ResultTable:
        p = OscillatorParams(
            mass=cfg.mass, spring=cfg.spring, force=cfg.force,
            omega=cfg.drive_omega, phase=cfg.phase, q0=cfg.q0, v0=cfg.v0,
        )
        t_grid = cfg.t_max * np.arange(1, cfg.t_points + 1) / cfg.t_points
        report = deh_failure_certificate(p, t_grid, phase_grid(cfg.phi_grid))
        rows = [
            [
                row.time,
                row.max_dq_dphi,
                row.max_dqdot_dphi,
                int(row.phase_locked),
                math.nan if row.max_abs_delta_e is None else row.max_abs_delta_e,
            ]
            for row in report.rows
        ]
        config = cfg.model_dump(mode="json")
        config.update(regime=report.regime.value, deh_possible=report.deh_possible,
                      min_sensitivity=report.min_sensitivity)
        return ResultTable(
            columns=["T", "max_dq_dphi", "max_dqdot_dphi", "phase_locked", "max_abs_delta_e"],
            rows=rows,
            config=config,
            notes=[f"regime {report.regime.value}; deterministic harvesting possible: {report.deh_possible}"],
        )

    def _dipole_trajectory(self, cfg: RunConfig) -> ResultTable:
        kind = DipoleKind(cfg.model)
        base = DipoleParams(kind=kind, coupling=cfg.coupling, static_field=cfg.static_field,
                            amp=cfg.amp, omega=1.0, phase=cfg.phase, damping=cfg.damping)
        omega = cfg.omega if cfg.omega is not None else precession_rate(base)
        if omega <= 0:
            raise ConfigError("Static field is zero; give --omega explicitly", key="omega")
        p = base.model_copy(update={"omega": omega})
        env = cfg.build_envelope()
        stop = dipole_flip_time(p, env) if cfg.t_final == "auto" else float(cfg.t_final)
        steps = default_steps(stop, max(omega, precession_rate(p)), cfg.steps_per_period)
        amp = None if env.kind == EnvelopeKind.CONSTANT else amplitude_fn(env, dipole_flip_time(p, env))
        series = integrate_dipole(p, [0.0, 0.0, -1.0], stop, steps, certify=p.damping == 0, amp_fn=amp)

        name = VECTOR_NAMES[kind]
        config = cfg.model_dump(mode="json")
        config.update(t_stop=stop, steps=steps)
        return ResultTable(
            columns=["t", f"{name}_x", f"{name}_y", f"{name}_z"],
            rows=np.column_stack([series.times, series.values["r_x"], series.values["r_y"], series.values["r_z"]]).tolist(),
            config=config,
            notes=[] if p.damping == 0 else [f"damping {p.damping}: trajectory is not certified for harvesting"],
        )

    @log_duration("entropy")
    def _handle_entropy(self, cfg: RunConfig) -> ResultTable:
        env = cfg.build_envelope()
        p = cfg.qubit().model_copy(update={"omega": env.carrier(cfg.drive_omega)})
        stop = self._stop_time(cfg, env)
        config = cfg.model_dump(mode="json")
        config["t_stop"] = stop

        if cfg.system == SystemKind.QUANTUM_RWA and p.is_resonant(RESONANCE_TOL) and env.kind == EnvelopeKind.CONSTANT:
            times = np.linspace(0.0, stop, cfg.t_points)
            states = [phi_averaged_state(p, t) for t in times]
            config["averaging"] = "closed-form"
        elif cfg.system == SystemKind.CLASSICAL_DIPOLE:
            raise ConfigError("Entropy traces are defined for the quantum harvester only", key="system")
        else:
            amp = None if env.kind == EnvelopeKind.CONSTANT else amplitude_fn(env, stopping_time(env))
            grid_times, trajectory = ensemble_trajectory(
                p, ensemble_phases(cfg), stop, cfg.steps_per_period, kind=cfg.system, amp_fn=amp,
            )
            picks = np.unique(np.linspace(0, grid_times.size - 1, min(cfg.t_points, grid_times.size)).round().astype(int))
            times = grid_times[picks]
            states = [ensemble_density(trajectory[k]) for k in picks]
            config["averaging"] = f"{cfg.phi_mode} over {cfg.phi_grid} phases"

        rows = [[float(t), von_neumann_entropy(rho), float(rho[1, 1].real)] for t, rho in zip(times, states)]
        return ResultTable(columns=["t", "S_bits", "p_excited"], rows=rows, config=config)

    @log_duration("vu")
    def _handle_vu(self, cfg: RunConfig) -> ResultTable:
        family = vu_family(np.diag(cfg.levels), cfg.source, cfg.target, cfg.theta, cfg.theta_tilde, cfg.tau)
        dim = family.h0.shape[0]
        rows = [
            [i, j, family.potential[i, j].real, family.potential[i, j].imag,
             family.unitary[i, j].real, family.unitary[i, j].imag]
            for i in range(dim) for j in range(dim)
        ]
        config = cfg.model_dump(mode="json")
        config.update(source_energy=family.source_energy, target_energy=family.target_energy,
                      delta_energy=family.delta_energy)
        return ResultTable(
            columns=["row", "col", "re_V", "im_V", "re_U", "im_U"],
            rows=rows,
            config=config,
            notes=[f"transfer {cfg.source} -> {cfg.target} harvests {family.delta_energy:.12g}"],
        )

    @log_duration("power")
    def _handle_power(self, cfg: RunConfig) -> ResultTable:
        model = model_from_lab_units(cfg.intensity, cfg.dipole_debye, cfg.gap_mev, cfg.density, cfg.convention)
        report = harvest_report(model)
        rows = [
            [e.convention.value, e.field_amplitude, e.frequency, e.flip_time, e.power_per_dipole, e.power_per_area]
            for e in report.estimates
        ]
        config = cfg.model_dump(mode="json")
        config.update(convention_ratio=report.convention_ratio)
        return ResultTable(
            columns=["convention", "field_amplitude", "frequency", "flip_time", "power_per_dipole", "power_per_area"],
            rows=rows,
            config=config,
            notes=[report.note],
        )
