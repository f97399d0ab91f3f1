import numpy as np
import pytest

from conftest import TWO_PI, reference_medium
from oracles import sweep_extrema
from eit_squeezing.cw import (
    optimal_detuning_scan,
    transmitted_extrema,
    transmitted_variance_general,
)
from eit_squeezing.errors import NonPhysicalError
from eit_squeezing.excess_noise import LorentzianNoise, evaluate_parametric
from eit_squeezing.medium import Transmissivity, transmissivity
from eit_squeezing.opa import NoisePair, OpaParams, bogoliubov, noise_pair, quadrature_variance
from eit_squeezing.spectral import ComplexSpectrum, FrequencyGrid

INNER = slice(1, None)


def _const_T(grid, value):
    return Transmissivity(ComplexSpectrum(grid, np.full(grid.n_points, value, dtype=complex)))


def test_empty_cell_reduces_to_source(small_grid, opa):
    b = bogoliubov(opa, small_grid)
    T = _const_T(small_grid, 1.0)
    for th in (0.0, 0.4, np.pi / 2):
        np.testing.assert_allclose(
            transmitted_variance_general(b, opa.efficiency, T, th)[INNER],
            quadrature_variance(b, opa.efficiency, th)[INNER],
            atol=1e-14,
        )


def test_opaque_cell_gives_vacuum(small_grid, opa):
    b = bogoliubov(opa, small_grid)
    out = transmitted_variance_general(b, opa.efficiency, _const_T(small_grid, 0.0), 0.3)
    np.testing.assert_allclose(out, 0.5, atol=1e-15)


def test_constant_phase_absorbed_by_lo(small_grid, opa):
    b = bogoliubov(opa, small_grid)
    ref = sweep_extrema(lambda th: transmitted_variance_general(b, opa.efficiency, _const_T(small_grid, 1.0), th))
    rot = sweep_extrema(
        lambda th: transmitted_variance_general(b, opa.efficiency, _const_T(small_grid, np.exp(0.77j)), th)
    )
    np.testing.assert_allclose(rot[0], ref[0], atol=1e-12)
    np.testing.assert_allclose(rot[1], ref[1], atol=1e-12)


@pytest.mark.parametrize("dp_mhz,d2_mhz", [(30.0, 0.0), (200.0, 0.54), (-120.0, -0.3)])
def test_extremal_consistency(grid, opa, dp_mhz, d2_mhz):
    medium = reference_medium(one_photon_detuning=TWO_PI * dp_mhz, two_photon_detuning=TWO_PI * d2_mhz)
    T = transmissivity(medium, grid)
    b = bogoliubov(opa, grid)
    vmax, vmin = sweep_extrema(lambda th: transmitted_variance_general(b, opa.efficiency, T, th))
    pred = transmitted_extrema(noise_pair(opa, grid), T)
    np.testing.assert_allclose(pred.v_plus[INNER], vmax[INNER], atol=1e-10)
    np.testing.assert_allclose(pred.v_minus[INNER], vmin[INNER], atol=1e-10)


def test_identity_channel(grid, opa):
    pair = noise_pair(opa, grid)
    out = transmitted_extrema(pair, _const_T(grid, 1.0))
    np.testing.assert_allclose(out.v_plus, pair.v_plus, atol=1e-15)
    np.testing.assert_allclose(out.v_minus, pair.v_minus, atol=1e-15)


def test_single_sideband_destroys_squeezing():
    grid = FrequencyGrid(8, 1.0)
    pair = NoisePair(grid, np.full(8, 2.0), np.full(8, 0.3))
    t = np.zeros(8, dtype=complex)
    t[grid.zero_index + 1 :] = 1.0  # only positive sidebands pass
    out = transmitted_extrema(pair, Transmissivity(ComplexSpectrum(grid, t)))
    k = grid.zero_index + 2
    expected = 0.5 + (2.0 + 0.3 - 1.0) / 4.0
    assert out.v_plus[k] == pytest.approx(expected, abs=1e-15)
    assert out.v_minus[k] == pytest.approx(expected, abs=1e-15)


def test_phase_insensitivity(grid, opa, medium):
    rng = np.random.default_rng(21)
    T = transmissivity(medium, grid)
    scrambled = Transmissivity(T.spectrum * np.exp(1j * rng.uniform(0, 2 * np.pi, grid.n_points)))
    pair = noise_pair(opa, grid)
    a = transmitted_extrema(pair, T)
    b = transmitted_extrema(pair, scrambled)
    np.testing.assert_allclose(a.v_plus, b.v_plus, atol=1e-12)
    np.testing.assert_allclose(a.v_minus, b.v_minus, atol=1e-12)


def test_physicality_and_noise_ordering(grid, opa, medium):
    T = transmissivity(medium, grid)
    noise = evaluate_parametric(LorentzianNoise(0.05, TWO_PI * 0.4), grid)
    out = transmitted_extrema(noise_pair(opa, grid), T, noise)
    assert np.all(out.v_plus >= out.v_minus)
    thermal = NoisePair(grid, np.full(grid.n_points, 0.9), np.full(grid.n_points, 0.9))
    out = transmitted_extrema(thermal, T)
    assert np.all(out.v_minus >= 0.5) and np.all(out.v_plus >= 0.5)


def test_rejects_nonphysical_pair(small_grid):
    bad = NoisePair(small_grid, np.full(small_grid.n_points, 0.4), np.full(small_grid.n_points, 0.5))
    with pytest.raises(NonPhysicalError):
        transmitted_extrema(bad, _const_T(small_grid, 1.0))


def test_transmitted_squeezing_at_540_khz(grid, opa):
    pair = noise_pair(opa, grid)
    band = (grid.values > TWO_PI * 0.2) & (grid.values < TWO_PI * 2.0)
    best = {}
    for d2 in (0.54, -0.54):
        medium = reference_medium(one_photon_detuning=-TWO_PI * 400.0, two_photon_detuning=TWO_PI * d2)
        out = transmitted_extrema(pair, transmissivity(medium, grid))
        # degraded, never better than the source
        assert np.all(out.v_minus[band] >= pair.v_minus[band])
        assert np.all(out.v_plus[band] <= pair.v_plus[band])
        best[d2] = out.v_minus[band].min()
    # on the favourable side of the asymmetric line squeezing survives
    assert best[0.54] < 0.5 * 10 ** (-2.0 / 10) < best[-0.54]


def test_symmetric_line_optimum_at_resonance(grid, opa):
    medium = reference_medium(one_photon_detuning=0.0)
    scan = optimal_detuning_scan(noise_pair(opa, grid), medium, None, TWO_PI * np.linspace(-1, 1, 21))
    assert scan.optimum == 0.0
    np.testing.assert_allclose(scan.best_db, scan.best_db[::-1], atol=1e-9)


def test_asymmetric_line_prefers_detuning(grid, opa):
    medium = reference_medium(one_photon_detuning=TWO_PI * 300.0)
    scan = optimal_detuning_scan(noise_pair(opa, grid), medium, None, TWO_PI * np.linspace(-1, 1, 41))
    assert scan.optimum != 0.0
    assert scan.best_db.min() < scan.best_db[20] - 0.2


def test_zero_width_scan(grid, opa, medium):
    scan = optimal_detuning_scan(noise_pair(opa, grid), medium, None, [TWO_PI * 0.54])
    assert scan.detunings.shape == (1,) and scan.best_db.shape == (1,)
