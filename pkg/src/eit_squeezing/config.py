"""JSON run configuration with boundary units (MHz, ns, mW, cm, nm, dB).

A user config is merged over the bundled default scenario.  Unknown keys and
ill-typed values raise :class:`ConfigError` before any computation starts.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .excess_noise import LorentzianNoise
from .medium import SusceptibilityParams
from .opa import OpaParams
from .spectral import TWO_PI, FrequencyGrid


class ConfigError(ValueError):
    """The configuration is malformed or violates a parameter constraint."""


def default_config() -> dict:
    text = resources.files("eit_squeezing").joinpath("data/default_scenario.json").read_text()
    return json.loads(text)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict) and base[key] and not isinstance(value, dict):
            raise ConfigError(f"config key '{where}' must be a section")
        if isinstance(base[key], dict) and base[key]:
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def _parse_scalar(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, assignments: list[str]) -> dict:
    """Apply ``section.key=value`` overrides (values parsed as JSON when possible)."""
    cfg = copy.deepcopy(cfg)
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = cfg
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError(f"unknown config section in '{key}'")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown config key '{key}'")
        if isinstance(node[parts[-1]], dict):
            raise ConfigError(f"'{key}' is a section, not a scalar")
        node[parts[-1]] = _parse_scalar(raw)
    return cfg


def load_config(path: str | Path | None = None, overrides: list[str] | None = None, seed: int | None = None) -> dict:
    cfg = default_config()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            user = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
        cfg = _merge(cfg, user)
    cfg = apply_overrides(cfg, overrides or [])
    if seed is not None:
        cfg["seed"] = int(seed)
    validate(cfg)
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


# --------------------------------------------------------------------------
# Typed views
# --------------------------------------------------------------------------


def _num(section: dict, key: str, where: str) -> float:
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
        raise ConfigError(f"'{where}.{key}' must be a finite number, got {value!r}")
    return float(value)


def _int(section: dict, key: str, where: str) -> int:
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{where}.{key}' must be an integer, got {value!r}")
    return value


@dataclass(frozen=True)
class Scenario:
    """Internal-unit objects derived from a validated config."""

    seed: int
    grid: FrequencyGrid
    medium: SusceptibilityParams  # at the pulsed-run control power
    kappa: float
    power_mw: float
    opa: OpaParams
    noise: LorentzianNoise
    noise_file: str | None


def _wrap(fn):
    try:
        return fn()
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from None


def medium_from_config(cfg: dict, power_mw: float | None = None) -> tuple[SusceptibilityParams, float]:
    m = cfg["medium"]
    w = "medium"

    def build():
        kappa = TWO_PI * _num(m, "rabi_per_sqrt_mW_MHz", w)
        p = _num(m, "control_power_mW", w) if power_mw is None else power_mw
        if p < 0:
            raise ConfigError("medium.control_power_mW must be >= 0")
        width = TWO_PI * _num(m, "doppler_width_MHz", w)
        length = _num(m, "length_cm", w)
        lam = _num(m, "wavelength_nm", w)
        od = _num(m, "optical_depth", w)
        if od < 0:
            raise ConfigError("medium.optical_depth must be >= 0")
        k0 = TWO_PI / (lam * 1e-7) if lam > 0 else 1.0
        params = SusceptibilityParams(
            rabi=kappa * np.sqrt(p),
            gamma_bc=TWO_PI * _num(m, "gamma_bc_MHz", w),
            doppler_width=width,
            one_photon_detuning=TWO_PI * _num(m, "one_photon_detuning_MHz", w),
            two_photon_detuning=TWO_PI * _num(m, "two_photon_detuning_MHz", w),
            chi_scale=od * width / (k0 * length) if length > 0 else 0.0,
            length=length,
            carrier_wavelength=lam,
        )
        return params, kappa

    return _wrap(build)


def scenario(cfg: dict) -> Scenario:
    def build():
        g = cfg["grid"]
        grid = FrequencyGrid.from_span(_int(g, "n_points", "grid"), _num(g, "span_MHz", "grid"))
        medium, kappa = medium_from_config(cfg)
        o = cfg["opa"]
        opa = OpaParams(
            TWO_PI * _num(o, "cavity_hwhm_MHz", "opa"), _num(o, "pump_ratio", "opa"), _num(o, "efficiency", "opa")
        )
        n = cfg["noise"]
        noise = LorentzianNoise(
            _num(n, "amplitude", "noise"), TWO_PI * _num(n, "width_MHz", "noise"), TWO_PI * _num(n, "center_MHz", "noise")
        )
        nf = n["file"]
        if nf is not None and not isinstance(nf, str):
            raise ConfigError("noise.file must be a path or null")
        return Scenario(_int(cfg, "seed", ""), grid, medium, kappa, _num(cfg["medium"], "control_power_mW", "medium"),
                        opa, noise, nf)

    return _wrap(build)


def validate(cfg: dict) -> None:
    """Build every typed object once so that errors surface before any work."""
    scenario(cfg)
    c = cfg["cw"]
    band = c["band_MHz"]
    if not (isinstance(band, list) and len(band) == 2 and all(isinstance(b, (int, float)) for b in band) and band[0] < band[1]):
        raise ConfigError("cw.band_MHz must be [low, high] with low < high")
    s = c["scan_MHz"]
    if not (isinstance(s, list) and len(s) == 3 and isinstance(s[2], int) and s[2] >= 1):
        raise ConfigError("cw.scan_MHz must be [start, stop, count]")
    p = cfg["pulse"]
    if _num(p, "chopper_fwhm_ns", "pulse") <= 0:
        raise ConfigError("pulse.chopper_fwhm_ns must be > 0")
    if p["chopper_edge_ns"] is not None:
        _num(p, "chopper_edge_ns", "pulse")
    if _int(p, "phase_points", "pulse") < 2:
        raise ConfigError("pulse.phase_points must be >= 2")
    t = cfg["tomography"]
    if _int(t, "cutoff", "tomography") < 1:
        raise ConfigError("tomography.cutoff must be >= 1")
    if _int(t, "n_samples", "tomography") < 100:
        raise ConfigError("tomography.n_samples must be >= 100")
    if _int(t, "max_iter", "tomography") < 1:
        raise ConfigError("tomography.max_iter must be >= 1")
    _num(t, "tol", "tomography")
    bins = t["bins"]
    if bins is not None and not (isinstance(bins, list) and len(bins) == 2 and all(isinstance(b, int) and b > 0 for b in bins)):
        raise ConfigError("tomography.bins must be null or [n_phase, n_q]")
    if _num(t, "wigner_extent", "tomography") <= 0 or _int(t, "wigner_points", "tomography") < 2:
        raise ConfigError("tomography.wigner_extent must be > 0 and wigner_points >= 2")
    k = cfg["calibration"]
    powers = k["powers_mW"]
    if not (isinstance(powers, list) and powers and all(isinstance(x, (int, float)) and x > 0 for x in powers)):
        raise ConfigError("calibration.powers_mW must be a non-empty list of positive numbers")
    if k["weighting"] not in ("noise", "equalize"):
        raise ConfigError("calibration.weighting must be 'noise' or 'equalize'")
    for key in ("spectral_noise", "delay_jitter_ns", "opa_noise_dB"):
        if _num(k, key, "calibration") < 0:
            raise ConfigError(f"calibration.{key} must be >= 0")
    guess = k["initial_guess_factors"]
    for key in ("gamma_bc", "doppler_width", "optical_depth", "one_photon_detuning", "kappa",
                "cavity_hwhm", "pump_ratio", "efficiency"):
        if _num(guess, key, "calibration.initial_guess_factors") <= 0:
            raise ConfigError(f"calibration.initial_guess_factors.{key} must be > 0")
    for key in ("dataset", "opa_samples"):
        if k[key] is not None and not isinstance(k[key], str):
            raise ConfigError(f"calibration.{key} must be a path or null")
    f = k["opa_frequencies_MHz"]
    if not (isinstance(f, list) and len(f) == 3 and isinstance(f[2], int) and f[2] >= 1):
        raise ConfigError("calibration.opa_frequencies_MHz must be [start, stop, count]")
