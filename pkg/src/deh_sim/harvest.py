"""
Energy bookkeeping and the plane-wave power estimate for an array of
two-level dipoles. Only this module works in SI units.
"""

import logging
import math

import numpy as np

from .exceptions import HermiticityError
from .models import FrequencyConvention, HarvestModel, HarvestReport, PhysicalConstants, PowerEstimate
from .smallmat import ensure_hermitian

logger = logging.getLogger(__name__)

CONSTANTS = PhysicalConstants()
IMAG_TOL = 1e-12


def field_amplitude(intensity: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Peak field E0 of a plane wave with I = ½ c0 ε0 E0²."""
    if intensity < 0:
        raise ValueError(f"Intensity must be non-negative: {intensity}")
    return math.sqrt(2.0 * intensity / (constants.c0 * constants.eps0))


def intensity_of(field: float, constants: PhysicalConstants = CONSTANTS) -> float:
    return 0.5 * constants.c0 * constants.eps0 * field * field


def drive_frequency(model: HarvestModel, constants: PhysicalConstants = CONSTANTS) -> float:
    """gap / h (ordinary) or 2π gap / h = gap / hbar (angular)."""
    f = model.gap_energy / constants.h
    if model.convention == FrequencyConvention.ORDINARY:
        return f
    return 2.0 * math.pi * f


def flip_time_seconds(model: HarvestModel, constants: PhysicalConstants = CONSTANTS) -> float:
    """T = π hbar / (E0 d), the resonant flip time of one dipole."""
    return math.pi * constants.hbar / (field_amplitude(model.intensity, constants) * model.dipole_moment)


def power_per_dipole(model: HarvestModel, constants: PhysicalConstants = CONSTANTS) -> float:
    """E0 d f / π with f taken in the model's frequency convention."""
    e0 = field_amplitude(model.intensity, constants)
    return e0 * model.dipole_moment * drive_frequency(model, constants) / math.pi


def power_per_area(model: HarvestModel, constants: PhysicalConstants = CONSTANTS) -> float:
    return power_per_dipole(model, constants) * model.areal_density


def estimate(model: HarvestModel, constants: PhysicalConstants = CONSTANTS) -> PowerEstimate:
    return PowerEstimate(
        convention=model.convention,
        field_amplitude=field_amplitude(model.intensity, constants),
        frequency=drive_frequency(model, constants),
        flip_time=flip_time_seconds(model, constants),
        power_per_dipole=power_per_dipole(model, constants),
        power_per_area=power_per_area(model, constants),
    )


def harvest_report(model: HarvestModel, constants: PhysicalConstants = CONSTANTS) -> HarvestReport:
    """Both conventions side by side; the angular one is 2π larger."""
    estimates = [
        estimate(model.model_copy(update={"convention": convention}), constants)
        for convention in (FrequencyConvention.ORDINARY, FrequencyConvention.ANGULAR)
    ]
    ratio = estimates[1].power_per_dipole / estimates[0].power_per_dipole
    note = (
        f"E0 d ω / π with ω = gap/hbar is {ratio:.6f} times E0 d f / π with f = gap/h; "
        f"selected convention: {model.convention.value}"
    )
    logger.info(note)
    return HarvestReport(selected=model.convention, estimates=estimates, convention_ratio=ratio, note=note)


def delta_energy(rho0, rho_t, h0) -> float:
    """Tr(H0 ρT) - Tr(H0 ρ0)."""
    h0 = ensure_hermitian(h0)
    change = np.trace(h0 @ np.asarray(rho_t, dtype=complex)) - np.trace(h0 @ np.asarray(rho0, dtype=complex))
    if abs(change.imag) > IMAG_TOL:
        raise HermiticityError(f"Energy change has imaginary part {change.imag:.3e}; check the density matrices")
    return float(change.real)


def model_from_lab_units(intensity: float, dipole_debye: float, gap_mev: float, density: float,
                         convention: FrequencyConvention = FrequencyConvention.ORDINARY,
                         constants: PhysicalConstants = CONSTANTS) -> HarvestModel:
    """Build a model from W/m², debye, meV and dipoles per m²."""
    return HarvestModel(
        intensity=intensity,
        dipole_moment=dipole_debye * constants.debye,
        gap_energy=gap_mev * 1e-3 * constants.electron_volt,
        areal_density=density,
        convention=convention,
    )
