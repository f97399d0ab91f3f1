"""Three-level (Lambda) EIT medium: susceptibility, transmissivity, slow light."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateInputError, GridMismatchError, SingularityError
from .spectral import (
    TWO_PI,
    ComplexSpectrum,
    FrequencyGrid,
    TemporalSignal,
    forward_transform,
    inverse_transform,
)


@dataclass(frozen=True)
class SusceptibilityParams:
    """Medium parameters in internal units (rad/us, cm, nm).

    ``chi_scale`` is the overall proportionality constant of the susceptibility;
    it carries the atomic density and dipole moment and has units of rad/us so
    that ``chi`` itself is dimensionless.
    """

    rabi: float
    gamma_bc: float
    doppler_width: float
    one_photon_detuning: float = 0.0
    two_photon_detuning: float = 0.0
    chi_scale: float = 0.0
    length: float = 1.0
    carrier_wavelength: float = 795.0

    def __post_init__(self):
        if not self.gamma_bc > 0:
            raise ValueError(f"gamma_bc must be > 0, got {self.gamma_bc}")
        if not self.doppler_width > 0:
            raise ValueError(f"doppler_width must be > 0, got {self.doppler_width}")
        if self.chi_scale < 0:
            raise ValueError(f"chi_scale must be >= 0, got {self.chi_scale}")
        if not self.length > 0:
            raise ValueError(f"length must be > 0, got {self.length}")
        if self.rabi < 0:
            raise ValueError(f"rabi must be >= 0, got {self.rabi}")
        if not self.carrier_wavelength > 0:
            raise ValueError("carrier_wavelength must be > 0")

    @property
    def wavenumber(self) -> float:
        """Carrier wavenumber k0 in 1/cm."""
        return TWO_PI / (self.carrier_wavelength * 1e-7)

    @property
    def optical_depth(self) -> float:
        """Intensity optical depth of the bare (control-off) line at its centre."""
        return self.wavenumber * self.length * self.chi_scale / self.doppler_width

    def with_(self, **changes) -> "SusceptibilityParams":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Transmissivity:
    spectrum: ComplexSpectrum

    @property
    def grid(self) -> FrequencyGrid:
        return self.spectrum.grid

    @property
    def values(self) -> np.ndarray:
        return self.spectrum.values


def chi_at(params: SusceptibilityParams, omega, two_photon_detuning=None, one_photon_detuning=None) -> np.ndarray:
    """Susceptibility at arbitrary sideband frequencies ``omega`` (rad/us).

    A sideband at ``omega`` shifts both detunings by ``omega``.
    """
    omega = np.asarray(omega, dtype=float)
    d2_0 = params.two_photon_detuning if two_photon_detuning is None else two_photon_detuning
    dp_0 = params.one_photon_detuning if one_photon_detuning is None else one_photon_detuning
    z = 1j * params.gamma_bc + (d2_0 + omega)
    denom = params.rabi**2 - z * (dp_0 + omega + 1j * params.doppler_width)
    bad = np.abs(denom) < 1e-15
    if np.any(bad):
        w_bad = np.atleast_1d(omega)[np.atleast_1d(bad)][0]
        raise SingularityError(f"susceptibility denominator vanishes at omega = {w_bad!r} rad/us")
    return params.chi_scale * z / denom


def susceptibility(params: SusceptibilityParams, grid: FrequencyGrid) -> ComplexSpectrum:
    return ComplexSpectrum(grid, chi_at(params, grid.values))


def transmission_at(params: SusceptibilityParams, omega, **kw) -> np.ndarray:
    """Complex amplitude transmissivity ``exp(i k0 chi L / 2)`` at arbitrary ``omega``."""
    chi = chi_at(params, omega, **kw)
    return np.exp(0.5j * params.wavenumber * params.length * chi)


def transmissivity(params: SusceptibilityParams, grid: FrequencyGrid) -> Transmissivity:
    return Transmissivity(ComplexSpectrum(grid, transmission_at(params, grid.values)))


def propagate_pulse(pulse: TemporalSignal, medium: Transmissivity) -> TemporalSignal:
    """Filter a classical field envelope through the medium."""
    if not pulse.grid.dual().matches(medium.grid):
        raise GridMismatchError("pulse grid is not dual to the transmissivity grid")
    spec = forward_transform(pulse, medium.grid)
    return inverse_transform(spec * medium.spectrum, pulse.grid)


def center_of_mass(signal: TemporalSignal) -> float:
    """Intensity-weighted mean time in us."""
    inten = np.abs(signal.values) ** 2
    total = inten.sum()
    if not total > 0:
        raise DegenerateInputError("signal has zero energy")
    return float(np.sum(signal.t * inten) / total)


def group_delay(pulse_in: TemporalSignal, pulse_out: TemporalSignal) -> float:
    """Centre-of-mass delay of ``pulse_out`` relative to ``pulse_in``, in ns."""
    return 1e3 * (center_of_mass(pulse_out) - center_of_mass(pulse_in))


def gaussian_pulse(grid: FrequencyGrid, fwhm_ns: float = 600.0, center_ns: float = 0.0) -> TemporalSignal:
    """Gaussian field envelope whose *intensity* FWHM is ``fwhm_ns``."""
    tg = grid.dual()
    sigma = fwhm_ns * 1e-3 / (2.0 * np.sqrt(np.log(2.0)))
    t = tg.values - center_ns * 1e-3
    return TemporalSignal(tg, np.exp(-(t**2) / (2.0 * sigma**2)))
