"""Phase-insensitive excess noise emitted by the driven atoms.

The spectrum is additive on top of the vacuum level 1/2 and is either read
from a table (shot-noise subtracted homodyne measurement without signal) or
modelled by a single Lorentzian whose amplitude tracks the ground-state
population-exchange rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .io import read_csv
from .spectral import TWO_PI, FrequencyGrid


@dataclass(frozen=True)
class LorentzianNoise:
    """``amplitude * width^2 / ((w - center)^2 + width^2)``; rates in rad/us."""

    amplitude: float = 0.0
    width: float = TWO_PI * 0.5
    center: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if not self.width > 0:
            raise ValueError(f"width must be > 0, got {self.width}")


@dataclass(frozen=True, eq=False)
class NoiseSpectrum:
    grid: FrequencyGrid
    values: np.ndarray
    source: str = "parametric"
    params: LorentzianNoise | None = field(default=None)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_points,):
            raise ValueError("noise spectrum length does not match grid")
        if np.any(vals < 0):
            raise ValueError("excess noise must be nonnegative")
        object.__setattr__(self, "values", vals)


def zero_noise(grid: FrequencyGrid) -> NoiseSpectrum:
    return NoiseSpectrum(grid, np.zeros(grid.n_points), "parametric", LorentzianNoise(0.0))


def evaluate_parametric(params: LorentzianNoise, grid: FrequencyGrid) -> NoiseSpectrum:
    w = grid.values
    vals = params.amplitude * params.width**2 / ((w - params.center) ** 2 + params.width**2)
    return NoiseSpectrum(grid, vals, "parametric", params)


def resample_table(freq_mhz, noise, grid: FrequencyGrid) -> NoiseSpectrum:
    """Linearly interpolate a tabulated spectrum onto ``grid``, zero outside the table.

    Tables that only cover nonnegative frequencies are read as functions of the
    detection (electronic) frequency and applied to both sidebands ``+-w``.
    """
    f = np.asarray(freq_mhz, dtype=float)
    v = np.asarray(noise, dtype=float)
    if f.shape != v.shape or f.ndim != 1:
        raise DataFormatError("frequency and noise columns must be 1-D and equally long")
    if f.size == 0:
        return NoiseSpectrum(grid, np.zeros(grid.n_points), "tabulated")
    if np.any(~np.isfinite(f)) or np.any(~np.isfinite(v)):
        raise DataFormatError("noise table contains non-finite entries")
    if np.any(np.diff(f) <= 0):
        raise DataFormatError("noise table frequencies must be strictly increasing")
    if np.any(v < 0):
        raise ValueError("noise table contains negative entries")
    f_grid = grid.values / TWO_PI
    if f[0] >= 0:
        f_grid = np.abs(f_grid)
    vals = np.interp(f_grid, f, v, left=0.0, right=0.0)
    return NoiseSpectrum(grid, vals, "tabulated")


def load_noise_spectrum(path: str | Path, grid: FrequencyGrid) -> NoiseSpectrum:
    """Read a ``frequency_MHz, v_noise_shotnoise_units`` CSV (header optional)."""
    _, data = read_csv(path)
    return resample_table(data[:, 0], data[:, 1], grid)
