"""Least-squares calibration of the EIT medium and the OPA from classical data.

EIT: transmission spectra and pulse delays at several control powers are fitted
jointly with shared ``(gamma_bc, W, chi0, Delta_p, kappa)`` and a control Rabi
frequency ``Omega = kappa sqrt(P)``.  The transmission axis is the probe
(sideband) offset from two-photon resonance, so a scan moves both detunings,
as sweeping the probe laser does.

OPA: ``(gamma, p, eta)`` from squeezed/antisqueezed spectra in dB.

Both use :func:`scipy.optimize.least_squares` (trust-region reflective) with an
explicit central-difference Jacobian in a transformed space where every rate
is a logarithm, so positivity needs no constraints.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit, logit

from .errors import ConvergenceError, DataFormatError, DegenerateInputError, NonPhysicalError
from .io import read_csv, read_json, write_csv, write_json
from .medium import (
    SusceptibilityParams,
    gaussian_pulse,
    group_delay,
    propagate_pulse,
    transmission_at,
    transmissivity,
)
from .opa import OpaParams, to_db
from .spectral import TWO_PI, FrequencyGrid

DELAY_SIGMA_NS = 2.0
SPECTRAL_NOISE = 0.01
OPA_SIGMA_DB = 0.05
DELAY_GRID = FrequencyGrid.from_span(2**12, 25.6)

EIT_NAMES = ("gamma_bc", "doppler_width", "chi_scale", "one_photon_detuning", "kappa")


# --------------------------------------------------------------------------
# Data
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PowerRecord:
    """Classical measurements at one control power.

    ``detuning`` is the probe offset from two-photon resonance (rad/us) and
    ``transmission`` the intensity transmission normalised off resonance.
    """

    power_mw: float
    detuning: np.ndarray
    transmission: np.ndarray
    delay_ns: float | None = None
    delay_err_ns: float = DELAY_SIGMA_NS
    pulse_time_ns: np.ndarray | None = None
    pulse_intensity: np.ndarray | None = None

    def __post_init__(self):
        if not self.power_mw > 0:
            raise ValueError("control power must be > 0")
        d = np.asarray(self.detuning, dtype=float)
        t = np.asarray(self.transmission, dtype=float)
        if d.shape != t.shape or d.ndim != 1:
            raise DataFormatError("detuning and transmission columns must match")
        object.__setattr__(self, "detuning", d)
        object.__setattr__(self, "transmission", t)
        if not self.delay_err_ns > 0:
            raise ValueError("delay uncertainty must be > 0")


@dataclass(frozen=True)
class ClassicalDataset:
    records: tuple[PowerRecord, ...]
    pulse_fwhm_ns: float = 600.0
    length: float = 7.5
    carrier_wavelength: float = 795.0

    def __post_init__(self):
        if not self.records:
            raise DegenerateInputError("dataset needs at least one control power")
        object.__setattr__(self, "records", tuple(self.records))

    @property
    def powers(self) -> np.ndarray:
        return np.array([r.power_mw for r in self.records])


def synthesize_classical(
    medium: SusceptibilityParams,
    kappa: float,
    powers_mw=(3.0, 5.0, 7.0),
    rng: np.random.Generator | None = None,
    spectral_noise: float = SPECTRAL_NOISE,
    delay_jitter_ns: float = DELAY_SIGMA_NS,
    detunings=None,
    pulse_fwhm_ns: float = 600.0,
    grid: FrequencyGrid = DELAY_GRID,
) -> ClassicalDataset:
    """Classical dataset generated from known parameters.

    Noise is multiplicative Gaussian on ``|T|^2`` and additive Gaussian on the
    delays.  The default probe axis has a dense core around the transparency
    window and a coarse wing across the Doppler line.
    """
    detunings = default_probe_axis() if detunings is None else np.asarray(detunings, dtype=float)
    records = []
    pulse_in = gaussian_pulse(grid, pulse_fwhm_ns)
    for p in powers_mw:
        m = medium.with_(rabi=kappa * np.sqrt(p))
        trans = np.abs(transmission_at(m, detunings)) ** 2
        out = propagate_pulse(pulse_in, transmissivity(m, grid))
        delay = group_delay(pulse_in, out)
        if rng is not None:
            trans = trans * (1.0 + spectral_noise * rng.normal(size=trans.size))
            delay = delay + delay_jitter_ns * rng.normal()
        records.append(
            PowerRecord(
                float(p), detunings, trans, float(delay), DELAY_SIGMA_NS,
                out.t * 1e3, np.abs(out.values) ** 2,
            )
        )
    return ClassicalDataset(tuple(records), pulse_fwhm_ns, medium.length, medium.carrier_wavelength)


def default_probe_axis() -> np.ndarray:
    core = np.linspace(-3.0, 3.0, 121)
    wing = np.linspace(-1000.0, 1000.0, 201)
    return TWO_PI * np.unique(np.concatenate([core, wing]))


def save_classical(dataset: ClassicalDataset, directory: str | Path) -> Path:
    """Write per-power CSVs and an ``index.json``; returns the index path."""
    directory = Path(directory)
    entries = []
    for rec in dataset.records:
        tag = f"{rec.power_mw:g}mW"
        spec = write_csv(directory / f"spectrum_{tag}.csv", ["detuning_MHz", "transmission"],
                         [rec.detuning / TWO_PI, rec.transmission])
        entry = {"power_mw": rec.power_mw, "spectrum": spec.name, "delay_ns": rec.delay_ns,
                 "delay_err_ns": rec.delay_err_ns}
        if rec.pulse_time_ns is not None:
            pulse = write_csv(directory / f"pulse_{tag}.csv", ["time_ns", "intensity"],
                              [rec.pulse_time_ns, rec.pulse_intensity])
            entry["pulse"] = pulse.name
        entries.append(entry)
    index = {"pulse_fwhm_ns": dataset.pulse_fwhm_ns, "length_cm": dataset.length,
             "carrier_wavelength_nm": dataset.carrier_wavelength, "records": entries}
    return write_json(directory / "index.json", index)


def load_classical(index_path: str | Path) -> ClassicalDataset:
    """Read a dataset written by :func:`save_classical` (or hand-made in the same layout).

    A record without ``delay_ns`` takes its delay from the pulse record's
    intensity centre of mass, taking the input pulse as centred at t = 0.
    """
    index_path = Path(index_path)
    index = read_json(index_path)
    try:
        entries = index["records"]
        records = []
        for e in entries:
            _, spec = read_csv(index_path.parent / e["spectrum"])
            t_ns = inten = None
            if e.get("pulse"):
                _, pulse = read_csv(index_path.parent / e["pulse"])
                t_ns, inten = pulse[:, 0], pulse[:, 1]
            delay = e.get("delay_ns")
            if delay is None:
                if t_ns is None:
                    raise DataFormatError(f"record at {e['power_mw']} mW has neither delay nor pulse")
                delay = _pulse_centroid_ns(t_ns, inten)
            records.append(PowerRecord(float(e["power_mw"]), TWO_PI * spec[:, 0], spec[:, 1], float(delay),
                                       float(e.get("delay_err_ns", DELAY_SIGMA_NS)), t_ns, inten))
        return ClassicalDataset(tuple(records), float(index.get("pulse_fwhm_ns", 600.0)),
                                float(index.get("length_cm", 7.5)), float(index.get("carrier_wavelength_nm", 795.0)))
    except KeyError as exc:
        raise DataFormatError(f"{index_path}: missing field {exc}") from None


def _pulse_centroid_ns(t_ns, intensity) -> float:
    if np.any(np.diff(t_ns) <= 0):
        raise DataFormatError("pulse time column must increase")
    w = np.asarray(intensity, dtype=float)
    if not w.sum() > 0:
        raise DegenerateInputError("pulse record has zero energy")
    return float(np.sum(t_ns * w) / w.sum())


# --------------------------------------------------------------------------
# Generic solver wrapper
# --------------------------------------------------------------------------


@dataclass
class SolverReport:
    x: np.ndarray
    cost: float
    history: list  # objective after each accepted step, starting with the initial point
    nfev: int
    njev: int
    converged: bool
    message: str


def central_jacobian(fun, x, rel_step=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((fun(xp) - fun(xm)) / (2.0 * h))
    return np.stack(cols, axis=1)


def damped_least_squares(fun, x0, xtol=1e-10, max_iter=500) -> SolverReport:
    """Trust-region least squares with central-difference Jacobians.

    The objective ``0.5 * |r|^2`` is recorded at every accepted step; the
    trust-region method only accepts steps that lower it.
    """
    history = []
    current = [np.inf]

    def tracked(x):
        r = fun(x)
        c = 0.5 * float(r @ r)
        if c < current[0]:
            current[0] = c
            history.append(c)
        return r

    sol = least_squares(
        tracked,
        np.asarray(x0, dtype=float),
        jac=lambda x: central_jacobian(fun, x),
        method="trf",
        xtol=xtol,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_iter,
        x_scale="jac",
    )
    converged = sol.status > 0
    return SolverReport(sol.x, float(sol.cost), history, int(sol.nfev), int(sol.njev or 0), converged, sol.message)


# --------------------------------------------------------------------------
# EIT fit
# --------------------------------------------------------------------------


@dataclass
class FitResult:
    gamma_bc: float
    doppler_width: float
    chi_scale: float
    one_photon_detuning: float
    kappa: float
    powers_mw: list
    residual_norm: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    length: float = 7.5
    carrier_wavelength: float = 795.0

    @property
    def rabi(self) -> np.ndarray:
        return self.kappa * np.sqrt(np.asarray(self.powers_mw, dtype=float))

    def medium(self, power_mw: float, two_photon_detuning: float = 0.0) -> SusceptibilityParams:
        return SusceptibilityParams(
            rabi=self.kappa * np.sqrt(power_mw),
            gamma_bc=self.gamma_bc,
            doppler_width=self.doppler_width,
            one_photon_detuning=self.one_photon_detuning,
            two_photon_detuning=two_photon_detuning,
            chi_scale=self.chi_scale,
            length=self.length,
            carrier_wavelength=self.carrier_wavelength,
        )

    def to_json(self) -> dict:
        out = asdict(self)
        out["rabi"] = self.rabi.tolist()
        out["units"] = "rates in rad/us, length in cm, wavelength in nm"
        return out


@dataclass(frozen=True)
class EitGuess:
    gamma_bc: float
    doppler_width: float
    chi_scale: float
    one_photon_detuning: float
    kappa: float

    def __post_init__(self):
        for name in ("gamma_bc", "doppler_width", "chi_scale", "kappa"):
            if not getattr(self, name) > 0:
                raise ValueError(f"initial {name} must be positive")

    @classmethod
    def from_medium(cls, medium: SusceptibilityParams, kappa: float) -> "EitGuess":
        return cls(medium.gamma_bc, medium.doppler_width, medium.chi_scale, medium.one_photon_detuning, kappa)


def _eit_pack(g: EitGuess) -> np.ndarray:
    # Delta_p is scaled by W so that all components are O(1)
    return np.array([np.log(g.gamma_bc), np.log(g.doppler_width), np.log(g.chi_scale),
                     g.one_photon_detuning / g.doppler_width, np.log(g.kappa)])


def _eit_unpack(x, w_ref) -> EitGuess:
    return EitGuess(np.exp(x[0]), np.exp(x[1]), np.exp(x[2]), x[3] * w_ref, np.exp(x[4]))


def eit_residuals(
    dataset: ClassicalDataset,
    params: EitGuess,
    delay_weight: float = 1.0,
    grid: FrequencyGrid = DELAY_GRID,
) -> tuple[np.ndarray, np.ndarray]:
    """Weighted spectral and delay residual blocks."""
    spec_res = []
    delay_res = []
    pulse_in = gaussian_pulse(grid, dataset.pulse_fwhm_ns)
    for rec in dataset.records:
        m = SusceptibilityParams(
            rabi=params.kappa * np.sqrt(rec.power_mw), gamma_bc=params.gamma_bc,
            doppler_width=params.doppler_width, one_photon_detuning=params.one_photon_detuning,
            chi_scale=params.chi_scale, length=dataset.length, carrier_wavelength=dataset.carrier_wavelength,
        )
        model = np.abs(transmission_at(m, rec.detuning)) ** 2
        sigma = SPECTRAL_NOISE * np.maximum(np.abs(rec.transmission), 1e-3)
        spec_res.append((model - rec.transmission) / sigma)
        if rec.delay_ns is not None:
            d = group_delay(pulse_in, propagate_pulse(pulse_in, transmissivity(m, grid)))
            delay_res.append(delay_weight * (d - rec.delay_ns) / rec.delay_err_ns)
    return np.concatenate(spec_res), np.asarray(delay_res, dtype=float)


def fit_eit(
    dataset: ClassicalDataset,
    guess: EitGuess,
    weighting: str = "noise",
    xtol: float = 1e-10,
    max_iter: int = 500,
    grid: FrequencyGrid = DELAY_GRID,
) -> FitResult:
    """Joint fit of transmission spectra and delays across control powers.

    ``weighting="noise"`` weights every residual by its own uncertainty;
    ``"equalize"`` additionally rescales the delay block so both blocks start
    with equal norms.
    """
    n_points = sum(r.detuning.size for r in dataset.records) + sum(r.delay_ns is not None for r in dataset.records)
    if n_points < 5:
        warnings.warn(f"only {n_points} data points for 5 parameters: the fit is rank deficient", RuntimeWarning, stacklevel=2)
    w_ref = guess.doppler_width
    weight = 1.0
    if weighting == "equalize":
        s, d = eit_residuals(dataset, guess, 1.0, grid)
        if d.size and np.linalg.norm(d) > 0:
            weight = np.linalg.norm(s) / np.linalg.norm(d)
    elif weighting != "noise":
        raise ValueError(f"unknown weighting {weighting!r}")

    def fun(x):
        s, d = eit_residuals(dataset, _eit_unpack(x, w_ref), weight, grid)
        return np.concatenate([s, d])

    rep = damped_least_squares(fun, _eit_pack(guess), xtol=xtol, max_iter=max_iter)
    best = _eit_unpack(rep.x, w_ref)
    result = FitResult(
        best.gamma_bc, best.doppler_width, best.chi_scale, best.one_photon_detuning, best.kappa,
        [float(p) for p in dataset.powers], float(np.sqrt(2 * rep.cost)), rep.nfev, rep.converged,
        rep.history, dataset.length, dataset.carrier_wavelength,
    )
    if not rep.converged:
        raise ConvergenceError(f"EIT fit did not converge: {rep.message}", best=result)
    return result


# --------------------------------------------------------------------------
# OPA fit
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NoiseSamples:
    """Measured source spectra at discrete detection frequencies (MHz), in dB."""

    frequency_mhz: np.ndarray
    v_plus_db: np.ndarray
    v_minus_db: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frequency_mhz, dtype=float)
        vp = np.asarray(self.v_plus_db, dtype=float)
        vm = np.asarray(self.v_minus_db, dtype=float)
        if not (f.shape == vp.shape == vm.shape) or f.ndim != 1:
            raise DataFormatError("frequency, V+ and V- columns must match")
        if np.any(vp < vm):
            raise NonPhysicalError("samples with V+ < V-")
        object.__setattr__(self, "frequency_mhz", f)
        object.__setattr__(self, "v_plus_db", vp)
        object.__setattr__(self, "v_minus_db", vm)


def opa_model_db(params: OpaParams, frequency_mhz) -> tuple[np.ndarray, np.ndarray]:
    x = TWO_PI * np.asarray(frequency_mhz, dtype=float) / params.cavity_hwhm
    sp = np.sqrt(params.pump_ratio)
    amp = params.efficiency * 2.0 * sp
    return to_db(0.5 + amp / (x**2 + (1 - sp) ** 2)), to_db(0.5 - amp / (x**2 + (1 + sp) ** 2))


def synthesize_opa_samples(params: OpaParams, frequency_mhz, rng=None, sigma_db: float = OPA_SIGMA_DB) -> NoiseSamples:
    vp, vm = opa_model_db(params, frequency_mhz)
    if rng is not None:
        vp = vp + sigma_db * rng.normal(size=vp.size)
        vm = vm + sigma_db * rng.normal(size=vm.size)
    return NoiseSamples(np.asarray(frequency_mhz, dtype=float), vp, vm)


@dataclass
class OpaFit:
    params: OpaParams
    residual_norm: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "cavity_hwhm_MHz": self.params.cavity_hwhm / TWO_PI,
            "pump_ratio": self.params.pump_ratio,
            "efficiency": self.params.efficiency,
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "history": self.history,
        }


def fit_opa(samples: NoiseSamples, guess: OpaParams, sigma_db: float = OPA_SIGMA_DB,
            xtol: float = 1e-10, max_iter: int = 500) -> OpaFit:
    """Fit ``(gamma, p, eta)`` to the closed-form source spectra in dB."""
    if np.unique(np.abs(samples.frequency_mhz)).size < 2:
        raise DegenerateInputError("need at least two distinct detection frequencies: gamma is unidentifiable")

    def unpack(x):
        return OpaParams(np.exp(x[0]), float(expit(x[1])), float(expit(x[2])))

    def fun(x):
        vp, vm = opa_model_db(unpack(x), samples.frequency_mhz)
        return np.concatenate([vp - samples.v_plus_db, vm - samples.v_minus_db]) / sigma_db

    eta0 = min(max(guess.efficiency, 1e-6), 1 - 1e-6)
    p0 = min(max(guess.pump_ratio, 1e-6), 1 - 1e-6)
    rep = damped_least_squares(fun, [np.log(guess.cavity_hwhm), logit(p0), logit(eta0)], xtol=xtol, max_iter=max_iter)
    params = unpack(rep.x)
    if params.pump_ratio > 1 - 1e-6:
        warnings.warn("fitted pump ratio runs into threshold; clamped below 1", RuntimeWarning, stacklevel=2)
        params = OpaParams(params.cavity_hwhm, 1 - 1e-6, params.efficiency)
    result = OpaFit(params, float(np.sqrt(2 * rep.cost)), rep.nfev, rep.converged, rep.history)
    if not rep.converged:
        raise ConvergenceError(f"OPA fit did not converge: {rep.message}", best=result)
    return result


def load_noise_samples(path: str | Path) -> NoiseSamples:
    """CSV with ``frequency_MHz, v_plus_dB, v_minus_dB``."""
    _, data = read_csv(path, min_columns=3)
    return NoiseSamples(data[:, 0], data[:, 1], data[:, 2])


def save_noise_samples(path: str | Path, samples: NoiseSamples) -> Path:
    return write_csv(path, ["frequency_MHz", "v_plus_dB", "v_minus_dB"],
                     [samples.frequency_mhz, samples.v_plus_db, samples.v_minus_db])

