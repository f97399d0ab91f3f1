"""CSV/JSON interchange for spectra, signals, datasets and density matrices.

Boundary units: MHz for frequencies, ns for times.  Floats are written with
``repr`` so files are byte-stable across runs.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .spectral import TWO_PI, ComplexSpectrum, FrequencyGrid, TemporalGrid, TemporalSignal


def _fmt(x) -> str:
    return repr(float(x))


def write_csv(path: str | Path, header: list[str], columns: list) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError("columns differ in length")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*cols):
            writer.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: str | Path, min_columns: int = 2) -> tuple[list[str] | None, np.ndarray]:
    """Return ``(header or None, data[n_rows, n_cols])``; an empty file gives zero rows."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    rows = []
    header = None
    with path.open(newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                if header is None and not rows:
                    header = [x.strip() for x in row]
                    continue
                raise DataFormatError(f"{path}: non-numeric entry on line {i + 1}") from None
    if not rows:
        return header, np.zeros((0, min_columns))
    width = {len(r) for r in rows}
    if len(width) != 1 or min(width) < min_columns:
        raise DataFormatError(f"{path}: expected at least {min_columns} columns on every row")
    return header, np.array(rows, dtype=float)


def write_spectrum_csv(path, spectrum: ComplexSpectrum) -> Path:
    return write_csv(
        path,
        ["frequency_MHz", "real", "imag"],
        [spectrum.grid.values / TWO_PI, spectrum.values.real, spectrum.values.imag],
    )


def write_signal_csv(path, signal: TemporalSignal) -> Path:
    return write_csv(path, ["time_ns", "real", "imag"], [signal.t * 1e3, signal.values.real, signal.values.imag])


def spectrum_to_json(spectrum: ComplexSpectrum) -> dict:
    return {
        "kind": "spectrum",
        "grid": {"n_points": spectrum.grid.n_points, "spacing_rad_per_us": spectrum.grid.spacing},
        "real": spectrum.values.real.tolist(),
        "imag": spectrum.values.imag.tolist(),
    }


def spectrum_from_json(obj: dict) -> ComplexSpectrum:
    g = obj["grid"]
    grid = FrequencyGrid(int(g["n_points"]), float(g["spacing_rad_per_us"]))
    return ComplexSpectrum(grid, np.asarray(obj["real"]) + 1j * np.asarray(obj["imag"]))


def signal_to_json(signal: TemporalSignal) -> dict:
    g = signal.grid
    return {
        "kind": "signal",
        "grid": {"n_points": g.n_points, "spacing_us": g.spacing, "origin_us": g.origin},
        "real": signal.values.real.tolist(),
        "imag": signal.values.imag.tolist(),
    }


def signal_from_json(obj: dict) -> TemporalSignal:
    g = obj["grid"]
    grid = TemporalGrid(int(g["n_points"]), float(g["spacing_us"]), float(g["origin_us"]))
    return TemporalSignal(grid, np.asarray(obj["real"]) + 1j * np.asarray(obj["imag"]))


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path: str | Path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
