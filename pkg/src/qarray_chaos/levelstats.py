"""Spacing-ratio statistics: samples, reference densities, histograms, KL, fits.

The ratio of consecutive spacings ``r_n = min(s_{n+1}/s_n, s_n/s_{n+1})``
lives on ``[0, 1]`` and needs no unfolding.  Reference densities:

* localized, ``P0(r) = 2 / (1 + r)**2`` with mean ``2 ln 2 - 1``;
* chaotic (orthogonal ensemble), ``P1 = P_{beta=1, gamma=0.875}``;
* interpolating family
  ``P_bg(r) = 2 C (r + r**2)**b / ((1 + r)**2 - g r)**(1 + 3b/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import ConvergenceError, ParameterDomainError

N_BINS = 50
GAMMA_GOE = 0.875
Z1 = 8.0 / 27.0
RBAR_P0 = 2.0 * np.log(2.0) - 1.0
RBAR_P1 = 0.5308
BETA_MAX = 1.2
DEGENERATE_RTOL = 1e-12


@dataclass
class RatioSample:
    values: np.ndarray
    dropped_count: int = 0

    def __len__(self) -> int:
        return self.values.size


@dataclass
class RatioHistogram:
    """Bin frequencies over ``[0, 1]``; the last bin is closed on the right."""

    frequencies: np.ndarray
    total: int

    @property
    def n_bins(self) -> int:
        return self.frequencies.size

    @property
    def width(self) -> float:
        return 1.0 / self.n_bins

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_bins + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_bins) + 0.5) / self.n_bins


@dataclass
class DistributionParams:
    beta: float
    gamma: float
    norm: float
    residual: float = float("nan")


@dataclass
class KlPair:
    d_poisson: float
    d_goe: float

    @property
    def difference(self) -> float:
        """``D(P||P0) - D(P||P1)``; negative on the localized side."""
        return self.d_poisson - self.d_goe


# ------------------------------------------------------------------ samples


def spacing_ratios(eigenvalues: Sequence[float]) -> RatioSample:
    """Consecutive-spacing ratios of an ascending spectrum.

    Ratios touching a spacing below ``1e-12`` times the spectral span are
    dropped and counted.
    """
    e = np.asarray(eigenvalues, dtype=float)
    if e.ndim != 1 or e.size < 3:
        raise ValueError(f"need at least 3 eigenvalues, got {e.size}")
    s = np.diff(e)
    if np.any(s < 0):
        raise ValueError("eigenvalues must be sorted ascending")
    span = e[-1] - e[0]
    tiny = s <= DEGENERATE_RTOL * span
    a, b = s[:-1], s[1:]
    bad = tiny[:-1] | tiny[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.minimum(a, b) / np.maximum(a, b)
    return RatioSample(r[~bad], int(bad.sum()))


def _values(samples) -> np.ndarray:
    if isinstance(samples, RatioSample):
        return samples.values
    if isinstance(samples, np.ndarray):
        return samples.ravel()
    parts = [s.values if isinstance(s, RatioSample) else np.asarray(s, dtype=float).ravel() for s in samples]
    return np.concatenate(parts) if parts else np.zeros(0)


def mean_ratio(samples) -> float:
    """Mean of pooled ratios (array, RatioSample, or an iterable of either)."""
    v = _values(samples)
    if v.size == 0:
        raise ValueError("empty ratio sample")
    return float(v.mean())


def histogram(samples, n_bins: int = N_BINS) -> RatioHistogram:
    v = _values(samples)
    if v.size == 0:
        raise ValueError("empty ratio sample")
    if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
        raise ValueError("ratios must lie in [0, 1]")
    counts = bin_counts(v, n_bins)
    return RatioHistogram(counts / v.size, int(v.size))


def bin_counts(v: np.ndarray, n_bins: int = N_BINS) -> np.ndarray:
    """Integer counts per bin (left-closed bins, last bin also right-closed)."""
    idx = np.minimum((np.asarray(v) * n_bins).astype(np.int64), n_bins - 1)
    return np.bincount(idx, minlength=n_bins)


def histogram_from_counts(counts: np.ndarray) -> RatioHistogram:
    counts = np.asarray(counts)
    tot = int(counts.sum())
    if tot == 0:
        raise ValueError("empty histogram")
    return RatioHistogram(counts / tot, tot)


# ---------------------------------------------------------------- densities


def _check_bg(beta, gamma):
    if not (0.0 <= beta <= BETA_MAX) or not (0.0 <= gamma <= 1.0):
        raise ParameterDomainError(f"need 0 <= beta <= {BETA_MAX} and 0 <= gamma <= 1, got ({beta}, {gamma})")


def _shape(r, beta, gamma):
    return (r + r * r) ** beta / ((1 + r) ** 2 - gamma * r) ** (1 + 1.5 * beta)


def normalization(beta: float, gamma: float) -> float:
    """``C`` such that ``2 C * shape`` integrates to one on ``[0, 1]``."""
    _check_bg(beta, gamma)
    return _normalization(float(beta), float(gamma))


@lru_cache(maxsize=4096)
def _normalization(beta, gamma):
    val, _ = integrate.quad(_shape, 0.0, 1.0, args=(beta, gamma), epsabs=1e-13, epsrel=1e-12, limit=200)
    return 1.0 / (2.0 * val)


def p_beta_gamma(r, beta: float, gamma: float):
    _check_bg(beta, gamma)
    r = np.asarray(r, dtype=float)
    return 2.0 * _normalization(float(beta), float(gamma)) * _shape(r, beta, gamma)


def p0(r):
    return 2.0 / (1.0 + np.asarray(r, dtype=float)) ** 2


def p1(r):
    return p_beta_gamma(r, 1.0, GAMMA_GOE)


C1 = _normalization(1.0, GAMMA_GOE)


_REFERENCES = {"p0": p0, "p1": p1}


def _density(reference) -> Callable:
    if callable(reference):
        return reference
    if isinstance(reference, DistributionParams):
        return lambda r: p_beta_gamma(r, reference.beta, reference.gamma)
    try:
        return _REFERENCES[reference]
    except KeyError:
        raise ValueError(f"unknown reference {reference!r}") from None


# ------------------------------------------------------------------------ KL


def reference_masses(reference, n_bins: int = N_BINS, renormalize: bool = True) -> np.ndarray:
    mid = (np.arange(n_bins) + 0.5) / n_bins
    q = _density(reference)(mid) / n_bins
    return q / q.sum() if renormalize else q


def kl_divergence(hist: RatioHistogram, reference="p0", renormalize: bool = True) -> float:
    """Relative entropy of a histogram with respect to a reference density.

    ``q_k`` is the density at the bin midpoint times the bin width,
    renormalized to unit sum unless ``renormalize`` is false.  Empty bins
    contribute zero.
    """
    p = hist.frequencies
    q = reference_masses(reference, hist.n_bins, renormalize)
    nz = p > 0
    if np.any(q[nz] <= 0):
        raise ValueError("reference vanishes on an occupied bin")
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


def kl_pair(hist: RatioHistogram, renormalize: bool = True) -> KlPair:
    return KlPair(kl_divergence(hist, "p0", renormalize), kl_divergence(hist, "p1", renormalize))


# ----------------------------------------------------------------------- fit

_STARTS = ((0.1, 0.2), (0.1, 0.8), (0.9, 0.2), (0.9, 0.8))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def bin_masses(beta: float, gamma: float, n_bins: int = N_BINS) -> np.ndarray:
    """Exact probability of each bin under ``P_bg``.

    The first bin (where ``r**beta`` is not smooth) is integrated
    adaptively, the others by 12-point Gauss-Legendre.
    """
    c = 2.0 * normalization(beta, gamma)
    w = 1.0 / n_bins
    lo = np.arange(1, n_bins)[:, None] * w
    x = lo + 0.5 * w * (_GL_X[None, :] + 1.0)
    rest = 0.5 * w * (_shape(x, beta, gamma) @ _GL_W)
    first, _ = integrate.quad(_shape, 0.0, w, args=(beta, gamma), epsabs=1e-14, epsrel=1e-12)
    return c * np.concatenate([[first], rest])


def _model_masses(beta, gamma, mid, width, masses="midpoint"):
    if masses == "integrated":
        return bin_masses(beta, gamma, mid.size)
    return p_beta_gamma(mid, beta, gamma) * width


def fit_beta_gamma(hist: RatioHistogram, objective: str = "least-squares", min_samples: int = 1000,
                   masses: str = "midpoint") -> DistributionParams:
    """Fit ``(beta, gamma)`` of the interpolating family to a histogram.

    ``objective`` is ``"least-squares"`` (sum of squared differences
    between bin frequencies and midpoint masses) or ``"likelihood"``
    (binned multinomial negative log-likelihood).  Bounded Nelder-Mead from
    four fixed starts; the normalization is integrated exactly at every
    evaluation.  ``masses="midpoint"`` compares each bin to the density at
    its midpoint times the width; ``"integrated"`` uses exact bin
    probabilities, which removes the discretization bias in ``gamma``.
    """
    if masses not in ("midpoint", "integrated"):
        raise ValueError(f"unknown masses convention {masses!r}")
    if hist.total < min_samples:
        raise ValueError(f"fit needs at least {min_samples} samples, got {hist.total}")
    mid, w, p = hist.midpoints, hist.width, hist.frequencies

    if objective == "least-squares":
        def f(x):
            b, g = np.clip(x, (0.0, 0.0), (BETA_MAX, 1.0))
            return float(np.sum((p - _model_masses(b, g, mid, w, masses)) ** 2))
    elif objective == "likelihood":
        def f(x):
            b, g = np.clip(x, (0.0, 0.0), (BETA_MAX, 1.0))
            q = _model_masses(b, g, mid, w, masses)
            nz = p > 0
            return float(-np.sum(p[nz] * np.log(np.maximum(q[nz], 1e-300))))
    else:
        raise ValueError(f"unknown objective {objective!r}")

    best, trace = None, []
    for x0 in _STARTS:
        res = optimize.minimize(
            f, x0, method="Nelder-Mead", bounds=((0.0, BETA_MAX), (0.0, 1.0)),
            options={"xatol": 1e-6, "fatol": 1e-14, "maxiter": 2000},
        )
        trace.append(float(res.fun))
        if res.success and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise ConvergenceError("beta-gamma fit failed from every start", trace)
    b, g = (float(v) for v in np.clip(best.x, (0.0, 0.0), (BETA_MAX, 1.0)))
    return DistributionParams(b, g, normalization(b, g), float(best.fun))


# ------------------------------------------------------------------ sampling


def sample_p0(n: int, rng: np.random.Generator) -> np.ndarray:
    """Exact draws from ``P0`` by inverting its CDF ``2r / (1 + r)``."""
    u = rng.random(n)
    return u / (2.0 - u)


def sample_p_beta_gamma(n: int, beta: float, gamma: float, rng: np.random.Generator) -> np.ndarray:
    """Rejection sampling under a flat envelope."""
    grid = np.linspace(0.0, 1.0, 20001)
    top = 1.05 * float(np.max(p_beta_gamma(grid, beta, gamma)))
    out = np.empty(0)
    while out.size < n:
        m = int(1.3 * (n - out.size) * top) + 64
        r = rng.random(m)
        keep = rng.random(m) * top < p_beta_gamma(r, beta, gamma)
        out = np.concatenate([out, r[keep]])
    return out[:n]
