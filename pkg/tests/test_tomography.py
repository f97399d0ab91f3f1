import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import eval_hermite, factorial

from eit_squeezing.errors import DegenerateInputError, NonPhysicalError
from eit_squeezing.tomography import (
    FockDensityMatrix,
    QuadratureDataset,
    build_squeezed_thermal,
    coherent_state,
    fidelity,
    fock_state,
    linear_phase_schedule,
    log_likelihood,
    maxlik_reconstruct,
    quadrature_stats,
    quadrature_variance,
    quadrature_wavefunction,
    quadrature_wavefunctions,
    synthesize_quadratures,
    wigner,
)


def gaussian_fidelity(v1, v2):
    """Closed-form fidelity of two zero-mean single-mode Gaussian states (vacuum covariance I/2)."""
    delta = np.linalg.det(v1 + v2)
    small = 4.0 * (np.linalg.det(v1) - 0.25) * (np.linalg.det(v2) - 0.25)
    return 1.0 / (np.sqrt(delta + small) - np.sqrt(small))


def covariance(nbar, r, orientation):
    d = np.diag([(nbar + 0.5) * np.exp(2 * r), (nbar + 0.5) * np.exp(-2 * r)])
    c, s = np.cos(orientation), np.sin(orientation)
    R = np.array([[c, -s], [s, c]])
    return R @ d @ R.T


def random_state(rng, dim, rank=3):
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return FockDensityMatrix(rho / np.trace(rho).real)


# ---- wavefunctions -------------------------------------------------------


def test_wavefunction_anchor():
    assert quadrature_wavefunction(0, 0.0) == pytest.approx(np.pi**-0.25, rel=1e-15)
    assert np.pi**-0.25 == pytest.approx(0.7511, abs=1e-4)


def test_wavefunctions_match_hermite_closed_form():
    q = np.linspace(-5, 5, 41)
    psi = quadrature_wavefunctions(20, q)
    for n in range(21):
        ref = eval_hermite(n, q) * np.exp(-q**2 / 2) / np.sqrt(2.0**n * factorial(n) * np.sqrt(np.pi))
        np.testing.assert_allclose(psi[:, n], ref, atol=1e-12, rtol=1e-10)


def test_orthonormality_and_vacuum_variance():
    for m in range(21):
        for n in range(m, 21, 3):
            val, _ = quad(lambda q: quadrature_wavefunction(m, q) * quadrature_wavefunction(n, q), -15, 15, limit=200)
            assert val == pytest.approx(float(m == n), abs=1e-8)
    val, _ = quad(lambda q: q**2 * quadrature_wavefunction(0, q) ** 2, -np.inf, np.inf)
    assert val == pytest.approx(0.5, abs=1e-12)


# ---- states --------------------------------------------------------------


def test_state_builder_anchors():
    vac = build_squeezed_thermal(0.0, 0.0)
    assert vac.entries[0, 0] == 1.0 and np.count_nonzero(np.abs(vac.entries) > 1e-15) == 1
    th = build_squeezed_thermal(0.5, 0.0)
    assert th.entries[0, 0].real == pytest.approx(2 / 3, abs=1e-6)
    assert th.entries[1, 1].real == pytest.approx(2 / 9, abs=1e-6)


@pytest.mark.parametrize("orientation", [0.0, 0.7, 2.5])
def test_squeezed_thermal_moments(orientation):
    rho = build_squeezed_thermal(0.2, 0.3, orientation, cutoff=20)
    rho.check()
    st_ = quadrature_stats(rho)
    assert st_.v_max == pytest.approx(0.7 * np.exp(0.6), abs=1e-4)
    assert st_.v_min == pytest.approx(0.7 * np.exp(-0.6), abs=1e-4)
    assert st_.theta_max == pytest.approx(orientation % np.pi, abs=1e-8)


def test_cutoff_too_small_raises():
    with pytest.raises(NonPhysicalError):
        build_squeezed_thermal(2.0, 0.8, cutoff=4)


def test_density_matrix_json_round_trip():
    rho = build_squeezed_thermal(0.1, 0.4, 1.0)
    back = FockDensityMatrix.from_json(rho.to_json())
    np.testing.assert_array_equal(back.entries, rho.entries)


# ---- synthetic data ------------------------------------------------------


def test_vacuum_samples():
    n = 20_000
    data = synthesize_quadratures(0.5, 0.5, 0.0, n, seed=1)
    assert data.values.var() == pytest.approx(0.5, abs=3 * 0.5 * np.sqrt(2 / n))


def test_aligned_quadrature_variance():
    n = 20_000
    data = synthesize_quadratures(1.5, 0.3, 0.0, n, phases=np.zeros(n), seed=2)
    # orientation marks the max-variance quadrature; its orthogonal holds v_min
    assert data.values.var() == pytest.approx(1.5, abs=3 * 1.5 * np.sqrt(2 / n))
    data = synthesize_quadratures(1.5, 0.3, np.pi / 2, n, phases=np.zeros(n), seed=2)
    assert data.values.var() == pytest.approx(0.3, abs=3 * 0.3 * np.sqrt(2 / n))


def test_binned_variance_chi_square():
    vmax, vmin, orient = 1.4, 0.28, 0.9
    data = synthesize_quadratures(vmax, vmin, orient, 50_000, seed=3)
    assert np.all((data.phases >= 0) & (data.phases < 2 * np.pi))
    edges = np.linspace(0, 2 * np.pi, 51)
    chi2 = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (data.phases >= lo) & (data.phases < hi)
        q = data.values[sel]
        th = data.phases[sel]
        expect = 0.5 * (vmax + vmin) + 0.5 * (vmax - vmin) * np.cos(2 * (th - orient))
        # standardised samples are unit normal in every bin
        z = q / np.sqrt(expect)
        chi2.append((z.var() - 1) ** 2 / (2 / (z.size - 1)))
    assert np.mean(chi2) == pytest.approx(1.0, abs=0.6)


def test_synthesis_is_deterministic():
    a = synthesize_quadratures(1.0, 0.3, 0.2, 1000, seed=9)
    b = synthesize_quadratures(1.0, 0.3, 0.2, 1000, seed=9)
    np.testing.assert_array_equal(a.values, b.values)
    with pytest.raises(NonPhysicalError):
        synthesize_quadratures(0.2, 0.3, 0.0, 10)


# ---- reconstruction ------------------------------------------------------


def test_vacuum_reconstruction():
    data = synthesize_quadratures(0.5, 0.5, 0.0, 50_000, seed=4)
    res = maxlik_reconstruct(data, cutoff=10)
    assert res.rho.entries[0, 0].real >= 0.99
    assert np.all(np.diff(res.loglik) >= 0)


def test_squeezed_vacuum_parity():
    r = 0.35
    data = synthesize_quadratures(0.5 * np.exp(2 * r), 0.5 * np.exp(-2 * r), 0.3, 50_000, seed=5)
    res = maxlik_reconstruct(data, cutoff=12)
    diag = np.real(np.diag(res.rho.entries))
    assert np.all(diag[1::2] < 0.01)
    assert diag[::2].sum() > 0.97
    assert np.all(np.diff(res.loglik) >= 0)
    res.rho.check(tail_threshold=1e-2)


def test_reconstruction_orientation_and_fidelity():
    nbar, r, orient = 0.12, 0.4, 2.2
    target = build_squeezed_thermal(nbar, r, orient)
    st_ = quadrature_stats(target)
    data = synthesize_quadratures(st_.v_max, st_.v_min, orient, 30_000, seed=6)
    res = maxlik_reconstruct(data, cutoff=12)
    assert fidelity(target, res.rho) >= 0.99
    assert quadrature_stats(res.rho).theta_max == pytest.approx(orient, abs=0.05)
    assert log_likelihood(data, res.rho) == pytest.approx(res.loglik[-1], abs=1e-12)


def test_binned_reconstruction_close_to_sample_level():
    data = synthesize_quadratures(1.2, 0.35, 0.5, 20_000, seed=7)
    full = maxlik_reconstruct(data, cutoff=10)
    binned = maxlik_reconstruct(data, cutoff=10, bins=(64, 80))
    assert fidelity(full.rho, binned.rho) > 0.995


def test_reconstruction_input_errors():
    data = synthesize_quadratures(0.5, 0.5, 0.0, 50, seed=0)
    with pytest.raises(DegenerateInputError):
        maxlik_reconstruct(data)
    with pytest.raises(ValueError):
        QuadratureDataset(np.zeros(3), np.array([0.0, np.nan, 1.0]))
    assert np.all(linear_phase_schedule(4) == np.array([0, 0.5, 1, 1.5]) * np.pi)


# ---- Wigner --------------------------------------------------------------


def test_wigner_anchors():
    assert wigner(fock_state(0, 5), [0.0], [0.0]).values[0, 0] == pytest.approx(1 / np.pi, abs=1e-12)
    assert wigner(fock_state(1, 5), [0.0], [0.0]).values[0, 0] == pytest.approx(-1 / np.pi, abs=1e-12)


def test_wigner_coherent_displacement():
    alpha = 0.7 + 0.4j
    x = np.linspace(-5, 5, 201)
    g = wigner(coherent_state(alpha, 25), x, x)
    X, P = np.meshgrid(x, x)
    ref = np.exp(-((X - np.sqrt(2) * alpha.real) ** 2) - (P - np.sqrt(2) * alpha.imag) ** 2) / np.pi
    np.testing.assert_allclose(g.values, ref, atol=1e-10)


def test_wigner_moments_of_squeezed_thermal():
    nbar, r, orient = 0.2, 0.3, 0.6
    rho = build_squeezed_thermal(nbar, r, orient, cutoff=24)
    x = np.linspace(-7, 7, 281)
    g = wigner(rho, x, x)
    assert g.integral() == pytest.approx(1.0, abs=1e-3)
    assert g.values.min() >= -1 / np.pi - 1e-9
    X, P = np.meshgrid(x, x)
    dA = (x[1] - x[0]) ** 2
    cov = np.array(
        [[np.sum(g.values * X * X), np.sum(g.values * X * P)], [np.sum(g.values * X * P), np.sum(g.values * P * P)]]
    ) * dA
    evals = np.linalg.eigvalsh(cov)
    assert evals[1] == pytest.approx((nbar + 0.5) * np.exp(2 * r), abs=1e-3)
    assert evals[0] == pytest.approx((nbar + 0.5) * np.exp(-2 * r), abs=1e-3)
    # Q_theta = x cos(theta) - p sin(theta) for a = (x + i p) / sqrt 2
    u = np.array([np.cos(orient), -np.sin(orient)])
    assert u @ cov @ u == pytest.approx(evals[1], abs=1e-3)


def test_wigner_coarse_grid_warns():
    with pytest.warns(RuntimeWarning):
        wigner(fock_state(0, 3), np.linspace(-1, 1, 5), np.linspace(-1, 1, 5))


# ---- fidelity ------------------------------------------------------------


def test_fidelity_basic():
    rng = np.random.default_rng(0)
    for _ in range(5):
        rho = random_state(rng, 8)
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)
    assert fidelity(fock_state(0, 4), fock_state(1, 4)) == pytest.approx(0.0, abs=1e-15)


def test_fidelity_thermal_closed_form():
    a = build_squeezed_thermal(0.2, 0.0, cutoff=30)
    b = build_squeezed_thermal(0.4, 0.0, cutoff=30)
    closed = 1.0 / (np.sqrt(1.2 * 1.4) - np.sqrt(0.2 * 0.4)) ** 2
    assert fidelity(a, b) == pytest.approx(closed, abs=1e-6)
    assert fidelity(a, b) == pytest.approx(gaussian_fidelity(0.7 * np.eye(2), 0.9 * np.eye(2)), abs=1e-6)


def test_fidelity_squeezed_closed_form():
    a = build_squeezed_thermal(0.1, 0.3, 0.4, cutoff=30)
    b = build_squeezed_thermal(0.15, 0.35, 0.6, cutoff=30)
    ref = gaussian_fidelity(covariance(0.1, 0.3, 0.4), covariance(0.15, 0.35, 0.6))
    assert fidelity(a, b) == pytest.approx(ref, abs=1e-6)


def test_fidelity_pads_smaller_state():
    a = build_squeezed_thermal(0.0, 0.0, cutoff=3)
    b = build_squeezed_thermal(0.0, 0.0, cutoff=9)
    assert fidelity(a, b) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_fidelity_bounds_and_symmetry(seed):
    rng = np.random.default_rng(seed)
    a = random_state(rng, 6, rank=2)
    b = random_state(rng, 6, rank=4)
    f = fidelity(a, b)
    assert 0.0 <= f <= 1.0
    assert f == pytest.approx(fidelity(b, a), abs=1e-8)
    assert f < 1.0 - 1e-6


def test_variance_function_matches_stats():
    rho = build_squeezed_thermal(0.1, 0.25, 1.3)
    st_ = quadrature_stats(rho)
    assert quadrature_variance(rho, st_.theta_max) == pytest.approx(st_.v_max, abs=1e-14)
    assert quadrature_variance(rho, st_.theta_min) == pytest.approx(st_.v_min, abs=1e-14)
