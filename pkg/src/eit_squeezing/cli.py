"""Command-line entry point: ``eit-squeeze <command> [--config FILE] [--out DIR]``.

Every run writes ``manifest.json`` to the output directory with the config
hash, seed, library versions and SHA-256 of each file produced.  Outputs are
staged and only moved into place once the command succeeds.

Exit codes: 0 success, 1 usage error, 2 config error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import platform
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .calibration import (
    EitGuess,
    FitResult,
    NoiseSamples,
    fit_eit,
    fit_opa,
    load_classical,
    load_noise_samples,
    synthesize_classical,
    synthesize_opa_samples,
)
from .config import ConfigError, Scenario, config_hash, load_config, medium_from_config, scenario
from .cw import optimal_detuning_scan, transmitted_extrema
from .errors import DataFormatError, DegenerateInputError, GridMismatchError
from .excess_noise import evaluate_parametric, load_noise_spectrum
from .io import read_csv, read_json, write_csv, write_json
from .medium import gaussian_pulse, group_delay, propagate_pulse, transmissivity
from .opa import OpaParams, from_db, noise_pair, to_db
from .pulsed import classical_mode, mode_filter, predicted_state, pulsed_excess_noise, pulsed_extrema, pulsed_variance, raised_cosine_chopper
from .spectral import TWO_PI
from .tomography import (
    FockDensityMatrix,
    QuadratureDataset,
    fidelity,
    maxlik_reconstruct,
    quadrature_stats,
    synthesize_quadratures,
    wigner,
)

log = logging.getLogger("eit_squeezing")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4

# independent random streams per purpose, derived from the run seed
STREAM_CLASSICAL, STREAM_OPA, STREAM_TOMOGRAPHY = 1, 2, 3


class UsageError(Exception):
    pass


class Outputs:
    """Collects output files in a staging directory."""

    def __init__(self, staging: Path):
        self.dir = staging
        self.names: list[str] = []

    def csv(self, name, header, columns):
        self.names.append(name)
        return write_csv(self.dir / name, header, columns)

    def json(self, name, obj):
        self.names.append(name)
        return write_json(self.dir / name, obj)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream])


def _tomography_seed(sc: Scenario) -> int:
    return int(_rng(sc.seed, STREAM_TOMOGRAPHY).integers(2**31))


def _require(path: str | None, what: str) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} file {p} does not exist")
    return p


# --------------------------------------------------------------------------
# Building blocks
# --------------------------------------------------------------------------


def _guess(cfg: dict, sc: Scenario) -> tuple[EitGuess, OpaParams]:
    f = cfg["calibration"]["initial_guess_factors"]
    m = sc.medium
    eit = EitGuess(m.gamma_bc * f["gamma_bc"], m.doppler_width * f["doppler_width"],
                   m.chi_scale * f["optical_depth"], m.one_photon_detuning * f["one_photon_detuning"],
                   sc.kappa * f["kappa"])
    if eit.chi_scale <= 0:
        raise ConfigError("calibration needs a nonzero optical depth")
    o = sc.opa
    opa = OpaParams(o.cavity_hwhm * f["cavity_hwhm"], min(o.pump_ratio * f["pump_ratio"], 0.95),
                    min(o.efficiency * f["efficiency"], 0.99))
    return eit, opa


def _classical_dataset(cfg: dict, sc: Scenario, data_path: Path | None):
    k = cfg["calibration"]
    path = data_path or _require(k["dataset"], "classical dataset")
    if path is not None:
        return load_classical(path)
    return synthesize_classical(sc.medium, sc.kappa, tuple(k["powers_mW"]), _rng(sc.seed, STREAM_CLASSICAL),
                                k["spectral_noise"], k["delay_jitter_ns"])


def _opa_samples(cfg: dict, sc: Scenario, data_path: Path | None) -> NoiseSamples:
    k = cfg["calibration"]
    path = data_path or _require(k["opa_samples"], "OPA samples")
    if path is not None:
        return load_noise_samples(path)
    a, b, n = k["opa_frequencies_MHz"]
    return synthesize_opa_samples(sc.opa, np.linspace(a, b, n), _rng(sc.seed, STREAM_OPA), k["opa_noise_dB"])


def _fit_eit(cfg, sc, data_path=None) -> FitResult:
    eit_guess, _ = _guess(cfg, sc)
    return fit_eit(_classical_dataset(cfg, sc, data_path), eit_guess, weighting=cfg["calibration"]["weighting"])


def _fit_opa(cfg, sc, data_path=None):
    _, opa_guess = _guess(cfg, sc)
    return fit_opa(_opa_samples(cfg, sc, data_path), opa_guess)


def _noise(sc: Scenario):
    if sc.noise_file is not None:
        return load_noise_spectrum(_require(sc.noise_file, "noise"), sc.grid)
    return evaluate_parametric(sc.noise, sc.grid)


def _fit_from_json(path: Path) -> FitResult:
    d = read_json(path)
    try:
        return FitResult(d["gamma_bc"], d["doppler_width"], d["chi_scale"], d["one_photon_detuning"], d["kappa"],
                         d["powers_mw"], d["residual_norm"], d["iterations"], d["converged"], d.get("history", []),
                         d["length"], d["carrier_wavelength"])
    except KeyError as exc:
        raise DataFormatError(f"{path}: missing field {exc}") from None


def _opa_from_json(path: Path) -> OpaParams:
    d = read_json(path)
    try:
        return OpaParams(TWO_PI * d["cavity_hwhm_MHz"], d["pump_ratio"], d["efficiency"])
    except KeyError as exc:
        raise DataFormatError(f"{path}: missing field {exc}") from None


def _state_from_json(path: Path) -> FockDensityMatrix:
    try:
        rho = FockDensityMatrix.from_json(read_json(path))
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"{path}: not a density-matrix file ({exc})") from None
    rho.check(tail_threshold=1.0)
    return rho


def _predict_pulse(cfg, sc: Scenario, medium, opa: OpaParams):
    """Predicted pulsed extrema for the configured chopper and control power."""
    p = cfg["pulse"]
    T = transmissivity(medium, sc.grid)
    chopper = raised_cosine_chopper(sc.grid, p["chopper_fwhm_ns"], p["chopper_edge_ns"])
    mode = classical_mode(T, chopper)
    measured = noise_pair(opa, sc.grid)
    # the detected spectra already include the efficiency
    filt = mode_filter(T, mode, chopper, 1.0)
    vn = pulsed_excess_noise(_noise(sc), mode)
    ext = pulsed_extrema(measured, filt, vn)
    thetas = np.linspace(0.0, np.pi, p["phase_points"])
    curve = pulsed_variance(measured, filt, vn, thetas)
    return ext, thetas, curve, vn, mode


def _pulse_outputs(out: Outputs, ext, thetas, curve, vn, mode, cutoff, prefix=""):
    out.csv(f"{prefix}pulsed_variance.csv", ["theta_rad", "variance", "variance_dB"], [thetas, curve, to_db(curve)])
    out.csv(f"{prefix}temporal_mode.csv", ["time_ns", "mode"], [mode.profile.t * 1e3, mode.profile.values.real])
    rho = predicted_state(ext.v_max, ext.v_min, ext.theta_min, cutoff)
    out.json(f"{prefix}predicted_state.json", rho.to_json())
    summary = {
        "v_max": ext.v_max, "v_min": ext.v_min,
        "v_max_dB": float(to_db(ext.v_max)), "v_min_dB": float(to_db(ext.v_min)),
        "theta_min_rad": ext.theta_min, "pulsed_excess_noise": vn,
    }
    return rho, summary


def _wigner_csv(out: Outputs, name: str, rho: FockDensityMatrix, cfg: dict):
    t = cfg["tomography"]
    axis = np.linspace(-t["wigner_extent"], t["wigner_extent"], t["wigner_points"])
    g = wigner(rho, axis, axis)
    X, P = np.meshgrid(g.x, g.p)
    out.csv(name, ["x", "p", "w"], [X.ravel(), P.ravel(), g.values.ravel()])
    return g


def _reconstruct(out: Outputs, cfg: dict, data: QuadratureDataset, prefix=""):
    t = cfg["tomography"]
    res = maxlik_reconstruct(data, t["cutoff"], t["max_iter"], t["tol"], None if t["bins"] is None else tuple(t["bins"]))
    out.json(f"{prefix}reconstructed_state.json", res.rho.to_json())
    out.csv(f"{prefix}maxlik_history.csv", ["iteration", "mean_log_likelihood"],
            [np.arange(len(res.loglik)), res.loglik])
    return res


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_fit_eit(args, cfg, out: Outputs) -> dict:
    sc = scenario(cfg)
    fit = _fit_eit(cfg, sc, _require(args.data, "classical dataset"))
    out.json("fit_eit.json", fit.to_json())
    return {"residual_norm": fit.residual_norm}


def cmd_fit_opa(args, cfg, out: Outputs) -> dict:
    sc = scenario(cfg)
    fit = _fit_opa(cfg, sc, _require(args.data, "OPA samples"))
    out.json("fit_opa.json", fit.to_json())
    return {"residual_norm": fit.residual_norm}


def cmd_simulate_cw(args, cfg, out: Outputs) -> dict:
    sc = scenario(cfg)
    T = transmissivity(sc.medium, sc.grid)
    src = noise_pair(sc.opa, sc.grid)
    res = transmitted_extrema(src, T, _noise(sc))
    f = sc.grid.values / TWO_PI
    out.csv("cw_spectra.csv",
            ["frequency_MHz", "abs_T", "v_plus_in", "v_minus_in", "v_plus_out", "v_minus_out", "v_plus_out_dB", "v_minus_out_dB"],
            [f, np.abs(T.values), src.v_plus, src.v_minus, res.v_plus, res.v_minus, to_db(res.v_plus), to_db(res.v_minus)])
    return {}


def cmd_scan_detuning(args, cfg, out: Outputs) -> dict:
    sc = scenario(cfg)
    a, b, n = cfg["cw"]["scan_MHz"]
    scan = optimal_detuning_scan(noise_pair(sc.opa, sc.grid), sc.medium, _noise(sc), TWO_PI * np.linspace(a, b, n),
                                 tuple(cfg["cw"]["band_MHz"]))
    out.csv("detuning_scan.csv", ["two_photon_detuning_MHz", "best_v_minus_dB", "best_frequency_MHz"],
            [scan.detunings / TWO_PI, scan.best_db, scan.best_frequency / TWO_PI])
    out.json("detuning_optimum.json", {"optimum_MHz": scan.optimum / TWO_PI, "best_dB": float(scan.best_db.min())})
    return {}


def cmd_propagate_pulse(args, cfg, out: Outputs) -> dict:
    sc = scenario(cfg)
    delays = {}
    pulse_in = gaussian_pulse(sc.grid, cfg["pulse"]["chopper_fwhm_ns"])
    for p in cfg["calibration"]["powers_mW"]:
        medium, _ = medium_from_config(cfg, float(p))
        pulse_out = propagate_pulse(pulse_in, transmissivity(medium, sc.grid))
        delays[f"{p:g}"] = group_delay(pulse_in, pulse_out)
        out.csv(f"pulse_{p:g}mW.csv", ["time_ns", "input_intensity", "output_intensity"],
                [pulse_in.t * 1e3, np.abs(pulse_in.values) ** 2, np.abs(pulse_out.values) ** 2])
    out.json("delays.json", {"delay_ns_by_power_mW": delays})
    return {}


def cmd_simulate_pulse(args, cfg, out: Outputs) -> dict:
    sc = scenario(cfg)
    medium = sc.medium
    if args.fit:
        medium = _fit_from_json(_require(args.fit, "EIT fit")).medium(sc.power_mw, sc.medium.two_photon_detuning)
    opa = _opa_from_json(_require(args.opa_fit, "OPA fit")) if args.opa_fit else sc.opa
    ext, thetas, curve, vn, mode = _predict_pulse(cfg, sc, medium, opa)
    _, summary = _pulse_outputs(out, ext, thetas, curve, vn, mode, cfg["tomography"]["cutoff"])
    out.json("pulse_summary.json", summary)
    return {}


def cmd_synthesize(args, cfg, out: Outputs) -> dict:
    sc = scenario(cfg)
    if args.v_max_db is not None or args.v_min_db is not None:
        if args.v_max_db is None or args.v_min_db is None:
            raise ConfigError("--v-max-db and --v-min-db must be given together")
        v_max, v_min = float(from_db(args.v_max_db)), float(from_db(args.v_min_db))
        orientation = args.orientation
    else:
        ext, *_ = _predict_pulse(cfg, sc, sc.medium, sc.opa)
        v_max, v_min, orientation = ext.v_max, ext.v_min, ext.theta_max
    data = synthesize_quadratures(v_max, v_min, orientation, cfg["tomography"]["n_samples"],
                                  seed=_tomography_seed(sc))
    out.csv("quadratures.csv", ["phase_rad", "quadrature"], [data.phases, data.values])
    out.json("synthesis.json", {"v_max": v_max, "v_min": v_min, "orientation_rad": orientation})
    return {}


def _load_quadratures(path: Path) -> QuadratureDataset:
    _, d = read_csv(path)
    try:
        return QuadratureDataset(d[:, 0], d[:, 1])
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def cmd_reconstruct(args, cfg, out: Outputs) -> dict:
    data = _load_quadratures(_require(args.data, "quadrature"))
    res = _reconstruct(out, cfg, data)
    st = quadrature_stats(res.rho)
    out.json("reconstruction_summary.json", {
        "iterations": res.iterations, "converged": res.converged, "excluded_samples": res.excluded,
        "v_max_dB": float(to_db(st.v_max)), "v_min_dB": float(to_db(st.v_min)), "theta_min_rad": st.theta_min,
    })
    return {}


def cmd_wigner(args, cfg, out: Outputs) -> dict:
    _wigner_csv(out, "wigner.csv", _state_from_json(_require(args.state, "state")), cfg)
    return {}


def cmd_fidelity(args, cfg, out: Outputs) -> dict:
    a = _state_from_json(_require(args.a, "state"))
    b = _state_from_json(_require(args.b, "state"))
    f = fidelity(a, b)
    out.json("fidelity.json", {"fidelity": f})
    return {"fidelity": f}


def cmd_pipeline(args, cfg, out: Outputs) -> dict:
    """calibrate -> predict -> synthesize -> reconstruct -> compare."""
    sc = scenario(cfg)
    eit_fit = _fit_eit(cfg, sc)
    opa_fit = _fit_opa(cfg, sc)
    out.json("fit_eit.json", eit_fit.to_json())
    out.json("fit_opa.json", opa_fit.to_json())
    medium = eit_fit.medium(sc.power_mw, sc.medium.two_photon_detuning)
    ext, thetas, curve, vn, mode = _predict_pulse(cfg, sc, medium, opa_fit.params)
    rho_pred, summary = _pulse_outputs(out, ext, thetas, curve, vn, mode, cfg["tomography"]["cutoff"])
    data = synthesize_quadratures(ext.v_max, ext.v_min, ext.theta_max, cfg["tomography"]["n_samples"],
                                  seed=_tomography_seed(sc))
    out.csv("quadratures.csv", ["phase_rad", "quadrature"], [data.phases, data.values])
    res = _reconstruct(out, cfg, data)
    _wigner_csv(out, "wigner_predicted.csv", rho_pred, cfg)
    _wigner_csv(out, "wigner_reconstructed.csv", res.rho, cfg)
    st = quadrature_stats(res.rho)
    f = fidelity(rho_pred, res.rho)
    report = {
        "fidelity": f,
        "predicted": summary,
        "reconstructed": {"v_max_dB": float(to_db(st.v_max)), "v_min_dB": float(to_db(st.v_min)),
                          "theta_min_rad": st.theta_min, "iterations": res.iterations, "converged": res.converged},
        "db_error": {"v_max": float(to_db(st.v_max) - to_db(ext.v_max)), "v_min": float(to_db(st.v_min) - to_db(ext.v_min))},
        "calibration": {"gamma_bc_MHz": eit_fit.gamma_bc / TWO_PI, "doppler_width_MHz": eit_fit.doppler_width / TWO_PI,
                        "rabi_per_sqrt_mW_MHz": eit_fit.kappa / TWO_PI,
                        "one_photon_detuning_MHz": eit_fit.one_photon_detuning / TWO_PI,
                        "opa": opa_fit.to_json()},
    }
    out.json("report.json", report)
    return {"fidelity": f}


COMMANDS = {
    "fit-eit": (cmd_fit_eit, "fit the EIT medium to classical spectra and delays"),
    "fit-opa": (cmd_fit_opa, "fit OPA parameters to source noise spectra"),
    "simulate-cw": (cmd_simulate_cw, "transmitted CW noise spectra"),
    "scan-detuning": (cmd_scan_detuning, "best CW squeezing versus two-photon detuning"),
    "propagate-pulse": (cmd_propagate_pulse, "classical slow-light pulses at each control power"),
    "simulate-pulse": (cmd_simulate_pulse, "pulsed quadrature variance and predicted state"),
    "synthesize": (cmd_synthesize, "synthetic homodyne samples"),
    "reconstruct": (cmd_reconstruct, "maximum-likelihood density matrix"),
    "wigner": (cmd_wigner, "Wigner function of a density matrix"),
    "fidelity": (cmd_fidelity, "Uhlmann fidelity of two density matrices"),
    "pipeline": (cmd_pipeline, "calibrate, predict, synthesize, reconstruct, compare"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eit-squeeze", description="Squeezed vacuum through an EIT medium.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="JSON config (merged over the bundled scenario)")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config scalar, e.g. opa.pump_ratio=0.4")
        p.add_argument("-v", "--verbose", action="store_true")
        if name in ("fit-eit", "fit-opa", "reconstruct"):
            p.add_argument("--data", required=name == "reconstruct", help="input data file")
        if name == "simulate-pulse":
            p.add_argument("--fit", help="fit_eit.json to use instead of the config medium")
            p.add_argument("--opa-fit", help="fit_opa.json to use instead of the config OPA")
        if name == "synthesize":
            p.add_argument("--v-max-db", type=float)
            p.add_argument("--v-min-db", type=float)
            p.add_argument("--orientation", type=float, default=0.0, help="LO phase of the maximum (rad)")
        if name == "wigner":
            p.add_argument("--state", required=True)
        if name == "fidelity":
            p.add_argument("--a", required=True)
            p.add_argument("--b", required=True)
    return parser


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest(command, cfg, outputs: dict, status: str, code: int, error: str | None, extra: dict) -> dict:
    return {
        "command": command,
        "status": status,
        "exit_code": code,
        "error": error,
        "config_sha256": None if cfg is None else config_hash(cfg),
        "seed": None if cfg is None else cfg["seed"],
        "versions": {"eit_squeezing": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "outputs": outputs,
        "results": extra,
    }


def _classify(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (FileNotFoundError, DataFormatError, DegenerateInputError, GridMismatchError)):
        return EXIT_DATA
    # ConvergenceError, SingularityError, NonPhysicalError and anything unforeseen
    return EXIT_NUMERIC


def _argv_out(argv) -> Path | None:
    for i, a in enumerate(argv):
        if a == "--out" and i + 1 < len(argv):
            return Path(argv[i + 1])
        if a.startswith("--out="):
            return Path(a.split("=", 1)[1])
    return None


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("no command given")
    except UsageError as exc:
        msg = f"UsageError: {exc}"
        print(f"error: {msg}", file=sys.stderr)
        out_dir = _argv_out(argv)
        if out_dir is not None:
            write_json(out_dir / "manifest.json", _manifest(None, None, {}, "error", EXIT_USAGE, msg, {}))
        return EXIT_USAGE

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out_dir = Path(args.out)
    cfg = None
    func = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config, args.set, args.seed)
        out_dir.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryDirectory(dir=out_dir, prefix=".staging-") as tmp:
            out = Outputs(Path(tmp))
            extra = func(args, cfg, out)
            hashes = {}
            for name in out.names:
                dest = out_dir / name
                shutil.move(str(out.dir / name), dest)
                hashes[name] = _sha256(dest)
    except Exception as exc:  # noqa: BLE001 - every failure is reported through the manifest
        code = _classify(exc)
        msg = f"{type(exc).__name__}: {' '.join(str(exc).split())}"
        print(f"error: {msg}", file=sys.stderr)
        log.debug("command failed", exc_info=True)
        write_json(out_dir / "manifest.json", _manifest(args.command, cfg, {}, "error", code, msg, {}))
        return code
    write_json(out_dir / "manifest.json", _manifest(args.command, cfg, hashes, "ok", EXIT_OK, None, extra))
    for name in out.names:
        log.info("wrote %s", out_dir / name)
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
