"""Continuous-wave squeezed vacuum transmitted through the EIT cell."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, NonPhysicalError
from .excess_noise import NoiseSpectrum, zero_noise
from .medium import SusceptibilityParams, Transmissivity, transmissivity
from .opa import SHOT_NOISE, BogoliubovSpectra, NoisePair, to_db
from .spectral import TWO_PI, reverse_values

DEFAULT_BAND_MHZ = (0.2, 2.0)


def _check(a, b):
    if not a.matches(b):
        raise GridMismatchError("spectra live on different frequency grids")


def transmitted_variance_general(
    spectra: BogoliubovSpectra, efficiency: float, T: Transmissivity, theta: float
) -> np.ndarray:
    """Phase-resolved transmitted variance keeping the complex phase of ``T``."""
    _check(spectra.grid, T.grid)
    t = T.values
    t_m = reverse_values(t)
    s2 = np.abs(spectra.s_spec.values) ** 2
    cs = spectra.c_spec.values * spectra.s_spec.reversed().values
    cross = cs * t * t_m * np.exp(2j * theta)
    bracket = s2 * (np.abs(t) ** 2 + np.abs(t_m) ** 2) + cross + np.conj(cross)
    return SHOT_NOISE + 0.5 * efficiency * bracket.real


def transmitted_extrema(measured: NoisePair, T: Transmissivity, noise: NoiseSpectrum | None = None) -> NoisePair:
    """Max/min transmitted noise from the measured source spectra and ``|T|`` only.

    ``V'+- = 1/2 + (V+ + V- - 1)(|T(w)|^2 + |T(-w)|^2)/4 +- (V+ - V-)|T(w)||T(-w)|/2 + V_noise``
    """
    _check(measured.grid, T.grid)
    vp, vm = measured.v_plus, measured.v_minus
    if np.any(vp < vm) or np.any(vp + vm < 1.0 - 1e-12):
        raise NonPhysicalError("measured noise pair is not physical")
    a = np.abs(T.values)
    a_m = reverse_values(a)
    thermal = 0.25 * (vp + vm - 1.0) * (a**2 + a_m**2)
    corr = 0.5 * (vp - vm) * a * a_m
    extra = 0.0 if noise is None else noise.values
    if noise is not None:
        _check(measured.grid, noise.grid)
    return NoisePair(measured.grid, SHOT_NOISE + thermal + corr + extra, SHOT_NOISE + thermal - corr + extra)


@dataclass(frozen=True)
class DetuningScan:
    detunings: np.ndarray  # rad/us
    best_db: np.ndarray
    best_frequency: np.ndarray  # rad/us, where the minimum of V'- sits

    @property
    def optimum(self) -> float:
        return float(self.detunings[int(np.argmin(self.best_db))])


def band_mask(grid, band_mhz=DEFAULT_BAND_MHZ) -> np.ndarray:
    f = grid.values / TWO_PI
    return (f >= band_mhz[0]) & (f <= band_mhz[1])


def optimal_detuning_scan(
    measured: NoisePair,
    medium: SusceptibilityParams,
    noise: NoiseSpectrum | None,
    detunings,
    band_mhz=DEFAULT_BAND_MHZ,
) -> DetuningScan:
    """Best transmitted squeezing in the analysis band versus two-photon detuning."""
    detunings = np.atleast_1d(np.asarray(detunings, dtype=float))
    grid = measured.grid
    noise = zero_noise(grid) if noise is None else noise
    mask = band_mask(grid, band_mhz)
    if not mask.any():
        raise ValueError(f"analysis band {band_mhz} MHz contains no grid points")
    w_band = grid.values[mask]
    best_db = np.empty(detunings.size)
    best_w = np.empty(detunings.size)
    for i, d in enumerate(detunings):
        T = transmissivity(medium.with_(two_photon_detuning=float(d)), grid)
        vm = transmitted_extrema(measured, T, noise).v_minus[mask]
        k = int(np.argmin(vm))
        best_db[i] = to_db(vm[k])
        best_w[i] = w_band[k]
    return DetuningScan(detunings, best_db, best_w)
