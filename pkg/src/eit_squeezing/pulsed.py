"""Pulsed squeezed vacuum: chopper gating, EIT filtering and temporal-mode projection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, GridMismatchError, NonPhysicalError
from .excess_noise import NoiseSpectrum
from .medium import Transmissivity, propagate_pulse
from .opa import SHOT_NOISE, NoisePair
from .spectral import (
    ComplexSpectrum,
    FrequencyGrid,
    TemporalSignal,
    convolve,
    forward_transform,
    integrate,
    reverse_values,
)
from .tomography import FockDensityMatrix, build_squeezed_thermal

DEFAULT_CHOPPER_FWHM_NS = 600.0


@dataclass(frozen=True, eq=False)
class TemporalMode:
    """Real, unit-norm weight ``W(t)`` applied to the homodyne photocurrent."""

    profile: TemporalSignal

    def __post_init__(self):
        norm = self.profile.energy()
        if abs(norm - 1.0) > 1e-10:
            raise NonPhysicalError(f"temporal mode has norm {norm!r}, expected 1")

    @property
    def spectrum(self) -> ComplexSpectrum:
        return forward_transform(self.profile)


@dataclass(frozen=True, eq=False)
class ChopperWindow:
    """Amplitude transmission ``tau(t)`` of the chopper, real and within [0, 1]."""

    profile: TemporalSignal

    def __post_init__(self):
        v = self.profile.values
        if np.max(np.abs(v.imag)) > 0 or v.real.min() < 0 or v.real.max() > 1:
            raise ValueError("chopper transmission must be real and within [0, 1]")


@dataclass(frozen=True, eq=False)
class ModeFilter:
    f_spec: ComplexSpectrum
    vacuum_weight: np.ndarray  # G(w) = sqrt(1 - |F|^2)

    @property
    def grid(self) -> FrequencyGrid:
        return self.f_spec.grid


def raised_cosine_chopper(
    grid: FrequencyGrid,
    fwhm_ns: float = DEFAULT_CHOPPER_FWHM_NS,
    edge_ns: float | None = None,
    center_ns: float = 0.0,
) -> ChopperWindow:
    """Flat-topped gate with ``cos^2`` edges; half transmission at ``+-fwhm/2``.

    ``edge_ns`` is the 0-to-1 rise time and defaults to the FWHM (a pure Hann gate).
    """
    edge = fwhm_ns if edge_ns is None else edge_ns
    if fwhm_ns <= 0 or edge <= 0 or edge > 2 * fwhm_ns:
        raise ValueError("need fwhm > 0 and 0 < edge <= 2 fwhm")
    tg = grid.dual()
    u = np.abs(tg.values * 1e3 - center_ns)
    flat = 0.5 * (fwhm_ns - edge)
    x = np.clip((u - flat) / edge, 0.0, 1.0)
    gate = np.where(x < 1.0, np.cos(0.5 * np.pi * x) ** 2, 0.0)
    return ChopperWindow(TemporalSignal(tg, gate))


def build_mode_from_classical(transmitted: TemporalSignal) -> TemporalMode:
    """``W(t) = sqrt(|E(t)|^2)`` scaled to unit norm."""
    energy = transmitted.energy()
    if not energy > 0:
        raise DegenerateInputError("transmitted pulse has zero energy")
    return TemporalMode(TemporalSignal(transmitted.grid, np.abs(transmitted.values) / np.sqrt(energy)))


def classical_mode(T: Transmissivity, chopper: ChopperWindow) -> TemporalMode:
    """Mode matched to a chopped classical beam after the cell."""
    return build_mode_from_classical(propagate_pulse(chopper.profile, T))


def mode_filter(T: Transmissivity, mode: TemporalMode, chopper: ChopperWindow, efficiency: float = 1.0) -> ModeFilter:
    """``F(w) = sqrt(eta / 2 pi) int T(w') W(-w') tau(w' - w) dw'``.

    Written as ``F(w) = sqrt(eta) (tau * h)(-w)`` with ``h(v) = T(-v) W(v)`` and
    evaluated by transform-domain convolution.  Pass ``efficiency=1`` when the
    noise spectra fed to :func:`pulsed_variance` are already detected ones.
    """
    if not 0.0 <= efficiency <= 1.0:
        raise ValueError("efficiency must lie in [0, 1]")
    grid = T.grid
    for g in (mode.profile.grid, chopper.profile.grid):
        if not g.dual().matches(grid):
            raise GridMismatchError("mode/chopper time grid is not dual to the transmissivity grid")
    w_spec = forward_transform(mode.profile, grid)
    tau_spec = forward_transform(chopper.profile, grid)
    h = ComplexSpectrum(grid, reverse_values(T.values) * w_spec.values)
    f = np.sqrt(efficiency) * reverse_values(convolve(tau_spec, h).values)
    mag2 = np.abs(f) ** 2
    if mag2.max() > (1.0 + 1e-9) ** 2:
        raise NonPhysicalError(f"|F| reaches {np.sqrt(mag2.max()):.6g} > 1: inconsistent normalisation")
    return ModeFilter(ComplexSpectrum(grid, f), np.sqrt(np.clip(1.0 - mag2, 0.0, None)))


def _integrals(measured: NoisePair, filt: ModeFilter):
    if not measured.grid.matches(filt.grid):
        raise GridMismatchError("noise pair and mode filter live on different grids")
    f = filt.f_spec.values
    ff = f * reverse_values(f)
    vp, vm = measured.v_plus, measured.v_minus
    thermal = 0.5 * integrate(np.abs(f) ** 2 * (vp + vm - 1.0), filt.grid).real
    corr = 0.5 * integrate(ff * (vp - vm), filt.grid)
    return thermal, corr


def pulsed_variance(measured: NoisePair, filt: ModeFilter, pulsed_noise: float = 0.0, theta=0.0):
    """Quadrature variance of the filtered temporal mode at LO phase ``theta``.

    ``V = 1/2 + Vn + 1/2 int |F|^2 (V+ + V- - 1) - 1/2 int |F F(-w)| (V+ - V-) cos(2 theta + phi)``
    with ``phi = arg F(w)F(-w)``; ``theta = 0`` is the squeezed quadrature of the source.
    """
    thermal, corr = _integrals(measured, filt)
    theta = np.asarray(theta, dtype=float)
    return SHOT_NOISE + pulsed_noise + thermal - np.real(np.exp(2j * theta) * corr)


@dataclass(frozen=True)
class PulsedExtrema:
    v_max: float
    v_min: float
    theta_min: float  # LO phase of the minimum, in [0, pi)

    @property
    def theta_max(self) -> float:
        return (self.theta_min + np.pi / 2) % np.pi


def pulsed_extrema(measured: NoisePair, filt: ModeFilter, pulsed_noise: float = 0.0) -> PulsedExtrema:
    thermal, corr = _integrals(measured, filt)
    base = SHOT_NOISE + pulsed_noise + thermal
    return PulsedExtrema(base + abs(corr), base - abs(corr), float((-np.angle(corr) / 2) % np.pi))


def pulsed_excess_noise(noise: NoiseSpectrum, mode: TemporalMode) -> float:
    """``int |W(w)|^2 V_noise(w) dw`` for the mode spectrum."""
    w_spec = forward_transform(mode.profile, noise.grid)
    weight = np.abs(w_spec.values) ** 2
    norm = integrate(weight, noise.grid)
    if abs(norm - 1.0) > 1e-6:
        raise NonPhysicalError(f"mode spectrum has norm {norm:.8f}; the mode is not normalised or not contained in the grid")
    return float(integrate(weight * noise.values, noise.grid))


def predicted_state(v_max: float, v_min: float, theta_min: float = 0.0, cutoff: int = 12) -> FockDensityMatrix:
    """Squeezed thermal state with the given extremal variances.

    The minimum-variance quadrature sits at LO phase ``theta_min``.
    """
    if v_max < v_min or v_max * v_min < 0.25 - 1e-9 or v_min <= 0:
        raise NonPhysicalError(f"variances ({v_max}, {v_min}) violate the uncertainty relation")
    nbar = max(np.sqrt(v_max * v_min) - 0.5, 0.0)
    r = 0.25 * np.log(v_max / v_min)
    return build_squeezed_thermal(nbar, r, orientation=theta_min + np.pi / 2, cutoff=cutoff)
