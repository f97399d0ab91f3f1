"""Homodyne tomography in a truncated Fock basis.

Conventions: quadrature ``Q_theta = (a e^{i theta} + a^dag e^{-i theta}) / sqrt(2)``
with vacuum variance 1/2, so a quadrature eigenstate has amplitudes
``<n|theta, q> = exp(-i n theta) psi_n(q)``.  The Wigner function is normalised
over ``dx dp`` and equals ``exp(-x^2 - p^2) / pi`` for the vacuum.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, gammaln

from .errors import DegenerateInputError, NonPhysicalError

log = logging.getLogger(__name__)

DEFAULT_CUTOFF = 12
TAIL_THRESHOLD = 1e-4


# --------------------------------------------------------------------------
# States
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    """Density matrix on photon numbers ``0..dim-1``."""

    entries: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {rho.shape}")
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def cutoff(self) -> int:
        return self.dim - 1

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def check(self, tail_threshold: float = TAIL_THRESHOLD) -> None:
        """Raise :class:`NonPhysicalError` if a density-matrix invariant fails."""
        rho = self.entries
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise NonPhysicalError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-10:
            raise NonPhysicalError(f"trace is {np.trace(rho).real!r}")
        if np.linalg.eigvalsh(rho).min() < -1e-9:
            raise NonPhysicalError("density matrix has negative eigenvalues")
        if rho[-1, -1].real >= tail_threshold:
            raise NonPhysicalError(
                f"population {rho[-1, -1].real:.3g} in the top Fock level exceeds {tail_threshold}"
            )

    def padded(self, dim: int) -> "FockDensityMatrix":
        if dim < self.dim:
            raise ValueError("cannot pad to a smaller dimension")
        out = np.zeros((dim, dim), dtype=complex)
        out[: self.dim, : self.dim] = self.entries
        return FockDensityMatrix(out)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "real": self.entries.real.ravel().tolist(),
            "imag": self.entries.imag.ravel().tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FockDensityMatrix":
        d = int(obj["dim"])
        re = np.asarray(obj["real"], dtype=float)
        im = np.asarray(obj["imag"], dtype=float)
        if re.size != d * d or im.size != d * d:
            raise ValueError("density-matrix JSON does not match its declared dim")
        return cls((re + 1j * im).reshape(d, d))


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def fock_state(n: int, dim: int) -> FockDensityMatrix:
    rho = np.zeros((dim, dim), dtype=complex)
    rho[n, n] = 1.0
    return FockDensityMatrix(rho)


def coherent_state(alpha: complex, dim: int) -> FockDensityMatrix:
    n = np.arange(dim)
    amps = np.exp(-0.5 * abs(alpha) ** 2 + n * np.log(alpha + 0j) - 0.5 * gammaln(n + 1)) if alpha else (n == 0) * 1.0
    amps = np.asarray(amps, dtype=complex)
    return FockDensityMatrix(np.outer(amps, amps.conj()))


def thermal_populations(nbar: float, dim: int) -> np.ndarray:
    n = np.arange(dim)
    if nbar == 0:
        return (n == 0).astype(float)
    return nbar**n / (nbar + 1.0) ** (n + 1)


def build_squeezed_thermal(
    nbar: float,
    r: float,
    orientation: float = 0.0,
    cutoff: int = DEFAULT_CUTOFF,
    pad: int = 20,
    tail_threshold: float = TAIL_THRESHOLD,
) -> FockDensityMatrix:
    """Squeezed thermal state whose *antisqueezed* quadrature sits at ``orientation``.

    Quadrature variances are ``(nbar + 1/2) exp(+-2 r)``.  The squeeze and the
    rotation are applied in a space padded by ``pad`` levels before truncation.
    """
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    big = cutoff + 1 + pad
    a = annihilation(big)
    squeeze = expm(0.5 * r * (a @ a - a.conj().T @ a.conj().T))
    rho = squeeze @ np.diag(thermal_populations(nbar, big)).astype(complex) @ squeeze.conj().T
    # exp(r/2 (a^2 - a^dag^2)) squeezes theta = 0; rotate the long axis to `orientation`
    phase = np.exp(-1j * (orientation - np.pi / 2) * np.arange(big))
    rho = phase[:, None] * rho * phase.conj()[None, :]
    rho = rho[: cutoff + 1, : cutoff + 1]
    if rho[-1, -1].real >= tail_threshold:
        raise NonPhysicalError(
            f"cutoff {cutoff} too small: top-level population {rho[-1, -1].real:.3g}; increase the cutoff"
        )
    rho = 0.5 * (rho + rho.conj().T)
    return FockDensityMatrix(rho / np.trace(rho).real)


@dataclass(frozen=True)
class QuadratureStats:
    v_max: float
    v_min: float
    theta_max: float

    @property
    def theta_min(self) -> float:
        return (self.theta_max + np.pi / 2) % np.pi


def quadrature_variance(rho: FockDensityMatrix, theta) -> np.ndarray:
    """Variance of ``Q_theta`` for the state ``rho``."""
    n_prime, m = _second_moments(rho)
    return 0.5 + n_prime + np.real(m * np.exp(2j * np.asarray(theta)))


def quadrature_stats(rho: FockDensityMatrix) -> QuadratureStats:
    n_prime, m = _second_moments(rho)
    return QuadratureStats(
        0.5 + n_prime + abs(m), 0.5 + n_prime - abs(m), float((-np.angle(m) / 2) % np.pi)
    )


def _second_moments(rho: FockDensityMatrix):
    a = annihilation(rho.dim)
    r = rho.entries
    mean_a = np.trace(r @ a)
    n = np.sum(np.arange(rho.dim) * np.real(np.diag(r)))
    a2 = np.trace(r @ a @ a)
    return n - abs(mean_a) ** 2, a2 - mean_a**2


# --------------------------------------------------------------------------
# Quadrature data
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadratureDataset:
    phases: np.ndarray
    values: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        ph = np.asarray(self.phases, dtype=float)
        q = np.asarray(self.values, dtype=float)
        if ph.shape != q.shape or ph.ndim != 1:
            raise ValueError("phases and values must be equally long 1-D arrays")
        if not (np.all(np.isfinite(ph)) and np.all(np.isfinite(q))):
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "phases", np.mod(ph, 2 * np.pi))
        object.__setattr__(self, "values", q)

    def __len__(self) -> int:
        return self.values.size


def linear_phase_schedule(n_samples: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_samples) / n_samples


def gaussian_variance(v_max: float, v_min: float, orientation: float, theta) -> np.ndarray:
    return 0.5 * (v_max + v_min) + 0.5 * (v_max - v_min) * np.cos(2.0 * (np.asarray(theta) - orientation))


def synthesize_quadratures(
    v_max: float,
    v_min: float,
    orientation: float = 0.0,
    n_samples: int = 50_000,
    phases=None,
    seed: int = 0,
) -> QuadratureDataset:
    """Homodyne samples of a zero-mean Gaussian state with the given extremal variances."""
    if v_min <= 0 or v_max < v_min:
        raise NonPhysicalError(f"need v_max >= v_min > 0, got {v_max}, {v_min}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    phases = linear_phase_schedule(n_samples) if phases is None else np.asarray(phases, dtype=float)
    if phases.shape != (n_samples,):
        raise ValueError("phase schedule length must equal n_samples")
    rng = np.random.default_rng(seed)
    var = gaussian_variance(v_max, v_min, orientation, phases)
    return QuadratureDataset(phases, rng.normal(size=n_samples) * np.sqrt(var), seed)


def quadrature_wavefunctions(nmax: int, q) -> np.ndarray:
    """``psi_n(q)`` for ``n = 0..nmax``, shape ``q.shape + (nmax + 1,)``.

    Upward recurrence ``psi_{n+1} = sqrt(2/(n+1)) q psi_n - sqrt(n/(n+1)) psi_{n-1}``.
    """
    q = np.asarray(q, dtype=float)
    out = np.empty(q.shape + (nmax + 1,))
    out[..., 0] = np.pi**-0.25 * np.exp(-0.5 * q**2)
    if nmax >= 1:
        out[..., 1] = np.sqrt(2.0) * q * out[..., 0]
    for n in range(1, nmax):
        out[..., n + 1] = np.sqrt(2.0 / (n + 1)) * q * out[..., n] - np.sqrt(n / (n + 1)) * out[..., n - 1]
    return out


def quadrature_wavefunction(n: int, q):
    if n < 0:
        raise ValueError("n must be >= 0")
    return quadrature_wavefunctions(n, q)[..., n]


# --------------------------------------------------------------------------
# Maximum likelihood
# --------------------------------------------------------------------------


@dataclass
class MaxLikResult:
    rho: FockDensityMatrix
    loglik: list = field(default_factory=list)  # mean log-likelihood per sample, per iteration
    iterations: int = 0
    converged: bool = False
    excluded: int = 0
    diluted_steps: int = 0


def _projector_amplitudes(phases, values, cutoff):
    n = np.arange(cutoff + 1)
    return quadrature_wavefunctions(cutoff, values) * np.exp(-1j * np.outer(phases, n))


def _binned(data: QuadratureDataset, n_phase_bins: int, n_q_bins: int):
    ph_edges = np.linspace(0, 2 * np.pi, n_phase_bins + 1)
    lim = np.max(np.abs(data.values)) * (1 + 1e-9)
    q_edges = np.linspace(-lim, lim, n_q_bins + 1)
    counts, _, _ = np.histogram2d(data.phases, data.values, bins=[ph_edges, q_edges])
    pc = 0.5 * (ph_edges[1:] + ph_edges[:-1])
    qc = 0.5 * (q_edges[1:] + q_edges[:-1])
    i, j = np.nonzero(counts)
    return pc[i], qc[j], counts[i, j]


def maxlik_reconstruct(
    data: QuadratureDataset,
    cutoff: int = DEFAULT_CUTOFF,
    max_iter: int = 2000,
    tol: float = 1e-10,
    bins: tuple[int, int] | None = None,
    tail_threshold: float = TAIL_THRESHOLD,
    min_samples: int = 100,
) -> MaxLikResult:
    """Iterative R rho R reconstruction with per-sample projectors.

    Each step uses the plain update ``rho <- R rho R / tr``; if that would lower
    the likelihood the step is diluted, ``R -> (1 + eps R)/(1 + eps)``, with
    ``eps`` halved until the likelihood does not decrease.  The log-likelihood
    history is therefore non-decreasing.  ``bins=(n_phase, n_q)`` replaces the
    samples by weighted histogram cells.
    """
    if len(data) < min_samples:
        raise DegenerateInputError(f"need at least {min_samples} samples, got {len(data)}")
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    if bins is None:
        phases, values, weights = data.phases, data.values, np.ones(len(data))
    else:
        phases, values, weights = _binned(data, *bins)
    V = _projector_amplitudes(phases, values, cutoff)
    dim = cutoff + 1

    rho = np.eye(dim, dtype=complex) / dim
    p = _probabilities(V, rho)
    keep = p > 1e-300
    excluded = int(np.sum(weights[~keep]))
    if excluded:
        log.warning("excluding %d samples with vanishing probability", excluded)
        V, weights, p = V[keep], weights[keep], p[keep]
    w = weights / weights.sum()

    hist = [float(np.sum(w * np.log(p)))]
    result = MaxLikResult(FockDensityMatrix(rho), hist, 0, False, excluded)
    eye = np.eye(dim)
    for it in range(1, max_iter + 1):
        R = (V.T * (w / p)) @ V.conj()
        eps = np.inf
        while True:
            Rs = R if np.isinf(eps) else (eye + eps * R) / (1.0 + eps)
            cand = Rs @ rho @ Rs
            cand = 0.5 * (cand + cand.conj().T)
            cand /= np.trace(cand).real
            p_new = _probabilities(V, cand)
            if np.all(p_new > 0):
                ll = float(np.sum(w * np.log(p_new)))
                if ll >= hist[-1]:
                    break
            eps = 1.0 if np.isinf(eps) else eps / 2.0
            if eps < 1e-8:
                cand = None
                break
        if cand is None:
            result.converged = True
            break
        if not np.isinf(eps):
            result.diluted_steps += 1
        gain = ll - hist[-1]
        rho, p = cand, p_new
        hist.append(ll)
        result.iterations = it
        if gain < tol:
            result.converged = True
            break
    result.rho = FockDensityMatrix(rho)
    if rho[-1, -1].real >= tail_threshold:
        warnings.warn(
            f"top Fock level holds {rho[-1, -1].real:.2g} of the population; consider a larger cutoff",
            RuntimeWarning,
            stacklevel=2,
        )
    return result


def _probabilities(V, rho):
    return np.real(np.sum(V.conj() * (V @ rho.T), axis=1))


def log_likelihood(data: QuadratureDataset, rho: FockDensityMatrix) -> float:
    V = _projector_amplitudes(data.phases, data.values, rho.cutoff)
    return float(np.mean(np.log(_probabilities(V, rho.entries))))


# --------------------------------------------------------------------------
# Wigner function and fidelity
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WignerGrid:
    x: np.ndarray
    p: np.ndarray
    values: np.ndarray  # shape (len(p), len(x))

    def integral(self) -> float:
        dx = self.x[1] - self.x[0]
        dp = self.p[1] - self.p[0]
        return float(np.sum(self.values) * dx * dp)


def wigner(rho: FockDensityMatrix, x, p, warn_tol: float = 1e-2) -> WignerGrid:
    """Wigner function from the Laguerre-polynomial Fock kernels."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    X, P = np.meshgrid(x, p)
    r2 = X**2 + P**2
    gauss = np.exp(-r2) / np.pi
    z = np.sqrt(2.0) * (X - 1j * P)
    r = rho.entries
    W = np.zeros_like(X)
    for n in range(rho.dim):
        for m in range(n, rho.dim):
            c = r[m, n]
            if c == 0:
                continue
            k = m - n
            kernel = (
                (-1) ** n
                * np.exp(0.5 * (gammaln(n + 1) - gammaln(m + 1)))
                * z**k
                * eval_genlaguerre(n, k, 2.0 * r2)
                * gauss
            )
            W += np.real(c * kernel) if k == 0 else 2.0 * np.real(c * kernel)
    grid = WignerGrid(x, p, W)
    if x.size > 1 and p.size > 1:
        total = grid.integral()
        if abs(total - 1.0) > warn_tol:
            warnings.warn(f"Wigner grid integral {total:.4f} deviates from 1; refine or widen the grid", RuntimeWarning, stacklevel=2)
    return grid


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    if vals.min() < -1e-9:
        raise NonPhysicalError(f"matrix has eigenvalue {vals.min():.3g} < -1e-9")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def fidelity(rho_a: FockDensityMatrix, rho_b: FockDensityMatrix) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(a) b sqrt(a)))^2``; smaller state is zero-padded."""
    dim = max(rho_a.dim, rho_b.dim)
    a = rho_a.padded(dim).entries
    b = rho_b.padded(dim).entries
    sa = _psd_sqrt(a)
    inner = sa @ b @ sa
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    f = float(np.sum(np.sqrt(np.clip(vals, 0.0, None))) ** 2)
    return min(max(f, 0.0), 1.0)
