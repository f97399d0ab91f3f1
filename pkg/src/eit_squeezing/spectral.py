"""Uniform frequency/time grids and the Fourier convention used package-wide.

Frequencies are sideband angular frequencies in rad/us, times are in us.
The time-domain synthesis kernel is ``exp(-i w t)``::

    f(t) = 1/sqrt(2 pi) * int f(w) exp(-i w t) dw
    f(w) = 1/sqrt(2 pi) * int f(t) exp(+i w t) dt

Both integrals are evaluated as Riemann sums on dual grids
(``dt * dw * n = 2 pi``), which makes the pair exactly unitary up to the
sampling constants and keeps Parseval's identity at machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import GridMismatchError

TWO_PI = 2.0 * np.pi
SQRT_2PI = np.sqrt(TWO_PI)

DEFAULT_POINTS = 2**14
DEFAULT_SPAN_MHZ = 50.0


@dataclass(frozen=True)
class FrequencyGrid:
    """Symmetric grid ``values[k] = (k - n/2) * spacing``; contains 0 exactly."""

    n_points: int = DEFAULT_POINTS
    spacing: float = TWO_PI * 2 * DEFAULT_SPAN_MHZ / DEFAULT_POINTS

    def __post_init__(self):
        n = int(self.n_points)
        if n < 2 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 2, got {self.n_points}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")

    @classmethod
    def from_span(cls, n_points: int, span_mhz: float) -> "FrequencyGrid":
        """Grid covering roughly ``+-span_mhz`` sideband frequencies."""
        return cls(n_points, TWO_PI * 2.0 * span_mhz / n_points)

    @property
    def values(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.n_points // 2) * self.spacing

    @property
    def zero_index(self) -> int:
        return self.n_points // 2

    def dual(self) -> "TemporalGrid":
        """The centred time grid with ``dt = 2 pi / (n dw)``."""
        dt = TWO_PI / (self.n_points * self.spacing)
        return TemporalGrid(self.n_points, dt, -(self.n_points // 2) * dt)

    def matches(self, other: "FrequencyGrid") -> bool:
        return self.n_points == other.n_points and np.isclose(
            self.spacing, other.spacing, rtol=1e-12, atol=0.0
        )


@dataclass(frozen=True)
class TemporalGrid:
    n_points: int
    spacing: float
    origin: float

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")

    @property
    def values(self) -> np.ndarray:
        return self.origin + np.arange(self.n_points) * self.spacing

    def dual(self) -> FrequencyGrid:
        return FrequencyGrid(self.n_points, TWO_PI / (self.n_points * self.spacing))

    def matches(self, other: "TemporalGrid") -> bool:
        return (
            self.n_points == other.n_points
            and np.isclose(self.spacing, other.spacing, rtol=1e-12, atol=0.0)
            and np.isclose(self.origin, other.origin, rtol=1e-12, atol=1e-12 * self.spacing)
        )


@dataclass(frozen=True, eq=False)
class ComplexSpectrum:
    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n_points,):
            raise GridMismatchError(
                f"spectrum has {vals.shape} values for a {self.grid.n_points}-point grid"
            )
        object.__setattr__(self, "values", vals)

    @property
    def omega(self) -> np.ndarray:
        return self.grid.values

    def reversed(self) -> "ComplexSpectrum":
        """``f(-w)`` on the same grid (the unpaired Nyquist point maps to itself)."""
        return ComplexSpectrum(self.grid, reverse_values(self.values))

    def __mul__(self, other):
        if isinstance(other, ComplexSpectrum):
            _check_freq(self.grid, other.grid)
            return ComplexSpectrum(self.grid, self.values * other.values)
        return ComplexSpectrum(self.grid, self.values * other)

    __rmul__ = __mul__

    def __add__(self, other: "ComplexSpectrum") -> "ComplexSpectrum":
        _check_freq(self.grid, other.grid)
        return ComplexSpectrum(self.grid, self.values + other.values)


@dataclass(frozen=True, eq=False)
class TemporalSignal:
    grid: TemporalGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n_points,):
            raise GridMismatchError(
                f"signal has {vals.shape} values for a {self.grid.n_points}-point grid"
            )
        object.__setattr__(self, "values", vals)

    @property
    def t(self) -> np.ndarray:
        return self.grid.values

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.spacing)


def reverse_values(values: np.ndarray) -> np.ndarray:
    """Map samples on a symmetric grid to their ``-w`` partners (circular wrap)."""
    return np.roll(values[..., ::-1], 1, axis=-1)


def _check_freq(a: FrequencyGrid, b: FrequencyGrid) -> None:
    if not a.matches(b):
        raise GridMismatchError(f"frequency grids differ: {a} vs {b}")


def forward_transform(signal: TemporalSignal, grid: FrequencyGrid | None = None) -> ComplexSpectrum:
    """``f(w) = 1/sqrt(2 pi) int f(t) exp(+i w t) dt`` on the dual frequency grid."""
    tg = signal.grid
    fg = tg.dual()
    if grid is not None:
        _check_freq(grid, fg)
        fg = grid
    n = tg.n_points
    w = fg.values
    # sum_n f_n exp(2 pi i k n / N) == N * ifft(f)[k]; fftshift centres k on w = 0
    core = np.fft.fftshift(np.fft.ifft(signal.values)) * n
    vals = core * np.exp(1j * w * tg.origin) * tg.spacing / SQRT_2PI
    return ComplexSpectrum(fg, vals)


def inverse_transform(spectrum: ComplexSpectrum, grid: TemporalGrid | None = None) -> TemporalSignal:
    """``f(t) = 1/sqrt(2 pi) int f(w) exp(-i w t) dw`` on the (centred) dual time grid."""
    fg = spectrum.grid
    tg = fg.dual() if grid is None else grid
    if not tg.dual().matches(fg):
        raise GridMismatchError(f"time grid {tg} is not dual to {fg}")
    shifted = spectrum.values * np.exp(-1j * fg.values * tg.origin)
    vals = np.fft.fft(np.fft.ifftshift(shifted)) * fg.spacing / SQRT_2PI
    return TemporalSignal(tg, vals)


def delta_spectrum(grid: FrequencyGrid) -> ComplexSpectrum:
    """Discrete unit for :func:`convolve`: the transform of ``f(t) = 1``."""
    vals = np.zeros(grid.n_points, dtype=complex)
    vals[grid.zero_index] = SQRT_2PI / grid.spacing
    return ComplexSpectrum(grid, vals)


def convolve(a: ComplexSpectrum, b: ComplexSpectrum) -> ComplexSpectrum:
    """``(1/sqrt(2 pi)) int a(w - w') b(w') dw'`` (circular on the grid).

    Evaluated as the forward transform of the product of inverse transforms.
    """
    _check_freq(a.grid, b.grid)
    ta = inverse_transform(a)
    tb = inverse_transform(b)
    return forward_transform(TemporalSignal(ta.grid, ta.values * tb.values), a.grid)


def integrate(values: np.ndarray, grid: FrequencyGrid | TemporalGrid) -> complex | float:
    """Trapezoid rule over a uniform grid."""
    return trapezoid(values, dx=grid.spacing)
