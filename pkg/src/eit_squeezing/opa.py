"""Sub-threshold degenerate OPA: Bogoliubov coefficients and quadrature noise.

Quadratures are ``q = (a e^{i theta} + a^dag e^{-i theta}) / sqrt(2)`` so the
vacuum variance is 1/2; ``theta = 0`` is the squeezed quadrature of the OPA.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPhysicalError
from .spectral import ComplexSpectrum, FrequencyGrid

SHOT_NOISE = 0.5


@dataclass(frozen=True)
class OpaParams:
    """``cavity_hwhm`` is gamma (rad/us); the cavity bandwidth is 2 gamma."""

    cavity_hwhm: float
    pump_ratio: float
    efficiency: float = 1.0

    def __post_init__(self):
        if not self.cavity_hwhm > 0:
            raise ValueError(f"cavity_hwhm must be > 0, got {self.cavity_hwhm}")
        if self.pump_ratio < 0:
            raise ValueError(f"pump_ratio must be >= 0, got {self.pump_ratio}")
        if self.pump_ratio >= 1:
            raise NonPhysicalError(f"pump_ratio {self.pump_ratio} is at or above threshold")
        if not 0 <= self.efficiency <= 1:
            raise ValueError(f"efficiency must lie in [0, 1], got {self.efficiency}")


@dataclass(frozen=True, eq=False)
class BogoliubovSpectra:
    c_spec: ComplexSpectrum
    s_spec: ComplexSpectrum

    @property
    def grid(self) -> FrequencyGrid:
        return self.c_spec.grid


@dataclass(frozen=True, eq=False)
class NoisePair:
    """Antisqueezed/squeezed variance spectra in shot-noise units (vacuum = 1/2)."""

    grid: FrequencyGrid
    v_plus: np.ndarray
    v_minus: np.ndarray

    def __post_init__(self):
        for name in ("v_plus", "v_minus"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.n_points,):
                raise ValueError(f"{name} has shape {arr.shape}, grid has {self.grid.n_points} points")
            object.__setattr__(self, name, arr)

    def db(self) -> tuple[np.ndarray, np.ndarray]:
        return to_db(self.v_plus), to_db(self.v_minus)


def to_db(variance):
    return 10.0 * np.log10(np.asarray(variance) / SHOT_NOISE)


def from_db(db):
    return SHOT_NOISE * 10.0 ** (np.asarray(db) / 10.0)


def bogoliubov_at(params: OpaParams, omega) -> tuple[np.ndarray, np.ndarray]:
    """``C(omega)``, ``S(omega)`` at arbitrary sideband frequencies."""
    if params.pump_ratio >= 1:
        raise NonPhysicalError("pump_ratio must be below threshold")
    g = params.cavity_hwhm
    p = params.pump_ratio
    u = g - 1j * np.asarray(omega, dtype=float)
    denom = u**2 - g**2 * p
    c = 1.0 - 2.0 * g * u / denom
    s = 2.0 * g**2 * np.sqrt(p) / denom
    return c, s


def bogoliubov(params: OpaParams, grid: FrequencyGrid) -> BogoliubovSpectra:
    c, s = bogoliubov_at(params, grid.values)
    return BogoliubovSpectra(ComplexSpectrum(grid, c), ComplexSpectrum(grid, s))


def _cs_minus(spectra: BogoliubovSpectra) -> np.ndarray:
    """``C(w) S(-w)``, which is real for this model."""
    return spectra.c_spec.values * spectra.s_spec.reversed().values


def quadrature_variance(spectra: BogoliubovSpectra, efficiency: float, theta: float) -> np.ndarray:
    """``V_theta(w) = 1/2 + eta [|S|^2 + C(w) S(-w) cos 2 theta]``."""
    if not 0 <= efficiency <= 1:
        raise ValueError("efficiency must lie in [0, 1]")
    s2 = np.abs(spectra.s_spec.values) ** 2
    cs = _cs_minus(spectra).real
    return SHOT_NOISE + efficiency * (s2 + cs * np.cos(2.0 * theta))


def quadrature_variance_general(params: OpaParams, grid: FrequencyGrid, theta: float) -> np.ndarray:
    """Variance from the normally/anti-normally ordered correlators, no simplification.

    Uses ``<a a^dag> = |C(w)|^2``, ``<a^dag(-w) a(-w)> = |S(-w)|^2`` and
    ``<a(w) a(-w)> = C(w) S(-w)`` with the loss ``eta`` mixed in as vacuum.
    Kept as an independent route to :func:`quadrature_variance`.
    """
    eta = params.efficiency
    c_p, s_p = bogoliubov_at(params, grid.values)
    c_m, s_m = bogoliubov_at(params, -grid.values)
    anti = eta * np.abs(c_p) ** 2 + (1.0 - eta)
    normal = eta * np.abs(s_m) ** 2
    pair = eta * c_p * s_m * np.exp(2j * theta)
    return 0.5 * (anti + normal + pair + np.conj(pair)).real


def noise_pair(params: OpaParams, grid: FrequencyGrid) -> NoisePair:
    """Closed-form antisqueezed (``theta = pi/2``) and squeezed (``theta = 0``) spectra."""
    x = grid.values / params.cavity_hwhm
    sp = np.sqrt(params.pump_ratio)
    amp = params.efficiency * 2.0 * sp
    v_plus = SHOT_NOISE + amp / (x**2 + (1.0 - sp) ** 2)
    v_minus = SHOT_NOISE - amp / (x**2 + (1.0 + sp) ** 2)
    return NoisePair(grid, v_plus, v_minus)


def recover_cs_products(measured: NoisePair) -> tuple[np.ndarray, np.ndarray]:
    """Return ``eta |S|^2`` and ``eta |C(w) S(-w)|`` from measured extremal spectra.

    The second product is returned as a magnitude; its sign only fixes which
    local-oscillator phase is called squeezed.
    """
    vp, vm = measured.v_plus, measured.v_minus
    if np.any(vp < vm):
        raise NonPhysicalError("measured spectra have V+ < V-")
    total = vp + vm - 1.0
    if np.any(total < -1e-12):
        k = int(np.argmin(total))
        raise NonPhysicalError(
            f"V+ + V- < 1 at omega = {measured.grid.values[k]:.6g} rad/us (below vacuum on average)"
        )
    return 0.5 * total, 0.5 * (vp - vm)
