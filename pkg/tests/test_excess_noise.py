import numpy as np
import pytest
from scipy.integrate import quad

from conftest import TWO_PI
from eit_squeezing.errors import DataFormatError
from eit_squeezing.excess_noise import LorentzianNoise, evaluate_parametric, load_noise_spectrum, resample_table
from eit_squeezing.io import write_csv
from eit_squeezing.spectral import integrate


def test_empty_and_zero_files(tmp_path, small_grid):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert np.all(load_noise_spectrum(empty, small_grid).values == 0)
    zero = write_csv(tmp_path / "zero.csv", ["frequency_MHz", "noise"], [[-5.0, 5.0], [0.0, 0.0]])
    assert np.all(load_noise_spectrum(zero, small_grid).values == 0)


def test_two_point_interpolation(small_grid):
    spec = resample_table([-2.0, 3.0], [0.1, 0.6], small_grid)
    f = small_grid.values / TWO_PI
    inside = (f >= -2.0) & (f <= 3.0)
    np.testing.assert_allclose(spec.values[inside], 0.1 + 0.1 * (f[inside] + 2.0), atol=1e-15)
    assert np.all(spec.values[~inside] == 0)


def test_lorentzian_table_round_trip(tmp_path, small_grid):
    params = LorentzianNoise(0.1, TWO_PI * 0.5, TWO_PI * 0.3)
    # table sampled on the grid itself reproduces the evaluator at the nodes
    f = small_grid.values / TWO_PI
    ref = evaluate_parametric(params, small_grid)
    path = write_csv(tmp_path / "lor.csv", ["frequency_MHz", "noise"], [f, ref.values])
    got = load_noise_spectrum(path, small_grid)
    assert got.source == "tabulated"
    np.testing.assert_allclose(got.values, ref.values, atol=1e-6)


def test_one_sided_table_is_mirrored(small_grid):
    spec = resample_table([0.0, 10.0], [1.0, 0.0], small_grid)
    np.testing.assert_allclose(spec.values[1:], spec.values[1:][::-1], atol=1e-15)


def test_lorentzian_anchors(grid):
    p = LorentzianNoise(0.1, TWO_PI * 0.5)
    vals = evaluate_parametric(p, grid).values
    w = grid.values
    assert vals[grid.zero_index] == pytest.approx(0.1, abs=1e-15)
    k = np.argmin(np.abs(w - p.width))
    assert vals[k] == pytest.approx(p.amplitude * p.width**2 / (w[k] ** 2 + p.width**2), rel=1e-14)
    assert p.amplitude * p.width**2 / (2 * p.width**2) == pytest.approx(0.05)
    # integral over the (finite) grid against the analytic truncated Lorentzian
    wmax = -w[0]
    exact = 2 * p.amplitude * p.width * np.arctan(wmax / p.width)
    assert integrate(vals, grid) == pytest.approx(exact, rel=1e-6)
    assert exact == pytest.approx(np.pi * p.amplitude * p.width, rel=0.01)


def test_offset_center_matches_quad(small_grid):
    p = LorentzianNoise(0.3, TWO_PI * 1.0, -TWO_PI * 2.0)
    vals = evaluate_parametric(p, small_grid).values
    lim = -small_grid.values[0]
    exact, _ = quad(lambda w: p.amplitude * p.width**2 / ((w - p.center) ** 2 + p.width**2), -lim, small_grid.values[-1], points=[p.center])
    assert integrate(vals, small_grid) == pytest.approx(exact, rel=1e-5)


def test_validation(small_grid):
    with pytest.raises(ValueError):
        resample_table([0.0, 1.0], [0.1, -0.1], small_grid)
    with pytest.raises(DataFormatError):
        resample_table([0.0, 2.0, 1.0], [0.1, 0.1, 0.1], small_grid)
    with pytest.raises(ValueError):
        LorentzianNoise(-1.0)
    with pytest.raises(ValueError):
        LorentzianNoise(1.0, 0.0)
