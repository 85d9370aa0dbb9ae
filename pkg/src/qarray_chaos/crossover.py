"""Disorder sampling, hopping sweeps and crossing-point extraction.

A sweep evaluates, at each point of an increasing hopping grid, ``R``
disorder realizations of a model, pools the spacing ratios and records the
mean ratio (with a bootstrap error), both KL divergences and the fitted
``(beta, gamma)``.  Random numbers come from a counter-based generator
keyed by the master seed and indexed by (site, grid point, realization),
so results do not depend on scheduling or on the number of workers.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats
from threadpoolctl import threadpool_limits

from .eigensolve import eig_symmetric, number_expectations
from .errors import ConvergenceError, NoCrossingError, ParameterDomainError, SelectionError
from .fock_basis import enumerate_sector
from .hamiltonian import (
    BoseHubbardParams,
    build_bh_with_cr,
    build_bose_hubbard,
    build_coupled_array,
    cr_basis,
    subtract_mean_frequency,
    table1_map,
)
from .lattice import ConnectivityGraph
from .levelstats import (
    N_BINS,
    RBAR_P0,
    RBAR_P1,
    KlPair,
    bin_counts,
    fit_beta_gamma,
    histogram_from_counts,
    kl_pair,
    spacing_ratios,
)
from .qubit_models import DEFAULT_N_CUT, site_spectrum

log = logging.getLogger(__name__)

WORKERS_ENV = "QARRAY_CHAOS_WORKERS"
RBAR_THRESHOLD = 0.5 * (RBAR_P0 + RBAR_P1)
BETA_THRESHOLD = 0.5
KL_THRESHOLD = 0.0
BLOCK = 25
_MASK64 = (1 << 64) - 1


# ------------------------------------------------------------------ disorder


@dataclass(frozen=True)
class DisorderSpec:
    """Gaussian disorder.

    ``kind`` is ``"site-frequency"`` (Bose-Hubbard runs, ``sigma`` is the
    frequency spread) or ``"josephson-energy"`` (qubit arrays; ``sigma=None``
    uses each site spec's own spread).  ``mirror`` negates every standard
    normal draw.
    """

    kind: str = "site-frequency"
    sigma: float | None = 0.0
    master_seed: int = 0
    mirror: bool = False

    def __post_init__(self):
        if self.kind not in ("site-frequency", "josephson-energy"):
            raise ParameterDomainError(f"unknown disorder kind {self.kind!r}")
        if self.sigma is not None and not self.sigma >= 0:
            raise ParameterDomainError(f"sigma must be >= 0, got {self.sigma}")
        if self.kind == "site-frequency" and self.sigma is None:
            raise ParameterDomainError("site-frequency disorder needs an explicit sigma")


def _site_rng(seed: int, stream: int, site: int, grid_index: int, realization: int) -> np.random.Generator:
    bits = np.random.Philox(key=[int(seed) & _MASK64, stream], counter=[0, site, grid_index, realization])
    return np.random.Generator(bits)


def sample_realization(mean, sigma, disorder: DisorderSpec, realization_index: int, grid_index: int = 0,
                       positive: bool = False) -> np.ndarray:
    """Per-site Gaussian draws ``mean + sigma * z``.

    Each site has its own generator, so a draw depends only on (seed, site,
    grid point, realization).  With ``positive`` a non-positive value is
    redrawn from the same site stream.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), mean.shape)
    sign = -1.0 if disorder.mirror else 1.0
    out = np.empty_like(mean)
    for i in range(mean.size):
        rng = _site_rng(disorder.master_seed, 0, i, grid_index, realization_index)
        while True:
            v = mean[i] + sigma[i] * sign * rng.standard_normal()
            if not positive or v > 0:
                break
        out[i] = v
    return out


# -------------------------------------------------------------------- models


@dataclass(frozen=True)
class BoseHubbardModel:
    """Bose-Hubbard array with homogeneous hopping ``J`` (the grid variable).

    ``u`` holds one interaction per site.  Frequencies are
    ``omega_mean + sigma * z_i``; without counter-rotating terms the mean is
    subtracted before building.
    """

    graph: ConnectivityGraph
    n_exc: int
    u: tuple
    omega_mean: float = 0.0
    counter_rotating: bool = False

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(float(x) for x in self.u))
        if len(self.u) != self.graph.n_sites:
            raise ParameterDomainError(f"{len(self.u)} interactions for {self.graph.n_sites} sites")

    @property
    def dim(self) -> int:
        if self.counter_rotating:
            return cr_basis(self.graph, self.n_exc).dim
        return enumerate_sector(self.graph.n_sites, self.n_exc).dim

    def realize(self, j: float, disorder: DisorderSpec, grid_index: int, r: int):
        if disorder.kind != "site-frequency":
            raise ParameterDomainError("Bose-Hubbard runs take site-frequency disorder")
        m = self.graph.n_sites
        om = sample_realization(np.full(m, self.omega_mean), disorder.sigma, disorder, r, grid_index)
        params = BoseHubbardParams(om, np.array(self.u), np.full(self.graph.n_edges, float(j)))
        if self.counter_rotating:
            return _cr_levels(params, self.graph, self.n_exc), float(j)
        basis = enumerate_sector(m, self.n_exc)
        h = build_bose_hubbard(subtract_mean_frequency(params), self.graph, basis)
        return eig_symmetric(h).eigenvalues, float(j)


def _cr_levels(params, graph, n_exc):
    ext = cr_basis(graph, n_exc)
    res = eig_symmetric(build_bh_with_cr(params, graph, ext), want_vectors=True)
    n = number_expectations(res, ext.labels)
    keep = np.rint(n) == n_exc
    if keep.sum() != ext.core.dim:
        raise SelectionError(
            f"kept {int(keep.sum())} levels with <n> ~ {n_exc}, expected {ext.core.dim}; hopping too strong"
        )
    return res.eigenvalues[keep]


@dataclass(frozen=True)
class QubitArrayModel:
    """Coupled transmon/CSFQ array; the grid variable is the coupling ``K``.

    The reported hopping is the edge- and realization-averaged
    ``(K/2)(A_i A_j)**(1/4)``.
    """

    graph: ConnectivityGraph
    n_exc: int
    specs: tuple
    n_cut: int = DEFAULT_N_CUT

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        if len(self.specs) != self.graph.n_sites:
            raise ParameterDomainError(f"{len(self.specs)} specs for {self.graph.n_sites} sites")

    @property
    def dim(self) -> int:
        return enumerate_sector(self.graph.n_sites, self.n_exc).dim

    def josephson(self, disorder: DisorderSpec, grid_index: int, r: int) -> np.ndarray:
        if disorder.kind != "josephson-energy":
            raise ParameterDomainError("qubit-array runs take josephson-energy disorder")
        mean = [s.josephson_mean for s in self.specs]
        sig = [s.josephson_sigma for s in self.specs] if disorder.sigma is None else disorder.sigma
        return sample_realization(mean, sig, disorder, r, grid_index, positive=True)

    def realize(self, k: float, disorder: DisorderSpec, grid_index: int, r: int):
        ej = self.josephson(disorder, grid_index, r)
        spectra = [site_spectrum(s, e, self.n_exc + 1, self.n_cut) for s, e in zip(self.specs, ej)]
        basis = enumerate_sector(self.graph.n_sites, self.n_exc)
        h = build_coupled_array(spectra, k, self.graph, basis)
        jbar = float(table1_map(self.specs, ej, k, self.graph).j_edges.mean())
        return eig_symmetric(h).eigenvalues, jbar


# --------------------------------------------------------------------- sweep


@dataclass(frozen=True)
class SweepOptions:
    n_bins: int = N_BINS
    kl_renormalize: bool = True
    fit_objective: str = "least-squares"
    fit_masses: str = "midpoint"
    fit: bool = True
    bootstrap: int = 200


@dataclass
class SweepCurve:
    """Per-grid-point observables of a sweep.

    ``grid`` is the swept variable (J or K); ``j`` the reported average
    hopping.  ``counts`` holds the pooled ratio histogram counts.
    """

    grid: np.ndarray
    j: np.ndarray
    rbar: np.ndarray
    rbar_se: np.ndarray
    dkl_p0: np.ndarray
    dkl_p1: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    realizations: np.ndarray
    counts: np.ndarray
    dropped: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return self.grid.size

    def kl(self, i: int) -> KlPair:
        return KlPair(float(self.dkl_p0[i]), float(self.dkl_p1[i]))


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    if workers < 1:
        raise ParameterDomainError(f"worker count must be >= 1, got {workers}")
    return int(workers)


def _run_block(task):
    model, disorder, value, g, r0, r1, n_bins = task
    sums, nums, jbar, drop = [], [], [], 0
    counts = np.zeros(n_bins, dtype=np.int64)
    for r in range(r0, r1):
        try:
            ev, jb = model.realize(value, disorder, g, r)
        except Exception as exc:
            exc.args = (f"[grid {g}, realization {r}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
            raise
        rs = spacing_ratios(ev)
        sums.append(float(np.sum(rs.values)))
        nums.append(rs.values.size)
        drop += rs.dropped_count
        counts += bin_counts(rs.values, n_bins)
        jbar.append(jb)
    return g, r0, np.array(sums), np.array(nums), counts, drop, np.array(jbar)


def _init_worker():
    global _LIMITS
    _LIMITS = threadpool_limits(1)


def _execute(tasks, workers):
    if workers == 1 or len(tasks) == 1:
        with threadpool_limits(1):
            return [_run_block(t) for t in tasks]
    ctx = mp.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx, initializer=_init_worker) as pool:
        return list(pool.map(_run_block, tasks))


def _bootstrap_se(sums, nums, n_boot, seed, g):
    if n_boot <= 1 or sums.size < 2:
        return float("nan")
    rng = _site_rng(seed, 1, 0, g, 0)
    idx = rng.integers(0, sums.size, size=(n_boot, sums.size))
    est = sums[idx].sum(axis=1) / nums[idx].sum(axis=1)
    return float(est.std(ddof=1))


def run_sweep(model, grid: Sequence[float], realizations: int, disorder: DisorderSpec,
              options: SweepOptions = SweepOptions(), workers: int | None = None) -> SweepCurve:
    """Evaluate the level statistics of ``model`` along an increasing grid."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or np.any(np.diff(grid) <= 0):
        raise ParameterDomainError("grid must be a non-empty strictly increasing list")
    if realizations < 1:
        raise ParameterDomainError(f"need at least one realization, got {realizations}")
    model.dim  # size checks before any work is scheduled
    tasks = [
        (model, disorder, float(v), g, r0, min(r0 + BLOCK, realizations), options.n_bins)
        for g, v in enumerate(grid)
        for r0 in range(0, realizations, BLOCK)
    ]
    results = _execute(tasks, resolve_workers(workers))

    n = grid.size
    sums = [[] for _ in range(n)]
    nums = [[] for _ in range(n)]
    jbs = [[] for _ in range(n)]
    counts = np.zeros((n, options.n_bins), dtype=np.int64)
    dropped = np.zeros(n, dtype=np.int64)
    for g, _, s, c, h, d, jb in sorted(results, key=lambda t: (t[0], t[1])):
        sums[g].append(s)
        nums[g].append(c)
        jbs[g].append(jb)
        counts[g] += h
        dropped[g] += d

    out = {k: np.full(n, np.nan) for k in ("j", "rbar", "rbar_se", "dkl_p0", "dkl_p1", "beta", "gamma")}
    for g in range(n):
        s, c = np.concatenate(sums[g]), np.concatenate(nums[g])
        out["j"][g] = float(np.mean(np.concatenate(jbs[g])))
        out["rbar"][g] = float(s.sum() / c.sum())
        out["rbar_se"][g] = _bootstrap_se(s, c, options.bootstrap, disorder.master_seed, g)
        hist = histogram_from_counts(counts[g])
        pair = kl_pair(hist, options.kl_renormalize)
        out["dkl_p0"][g], out["dkl_p1"][g] = pair.d_poisson, pair.d_goe
        if options.fit:
            try:
                fit = fit_beta_gamma(hist, options.fit_objective, min_samples=1, masses=options.fit_masses)
                out["beta"][g], out["gamma"][g] = fit.beta, fit.gamma
            except ConvergenceError as exc:
                log.warning("beta-gamma fit failed at grid point %d: %s", g, exc)
    return SweepCurve(grid=grid, realizations=np.full(n, realizations), counts=counts, dropped=dropped, **out)


# ------------------------------------------------------------------ crossings


@dataclass
class MethodCrossing:
    method: str
    j_c: float
    bracket: tuple
    threshold: float
    residual: float


@dataclass
class CrossingResult:
    rbar: MethodCrossing | None
    kl: MethodCrossing | None
    beta: MethodCrossing | None
    errors: dict = field(default_factory=dict)

    def get(self, method: str) -> float:
        c = getattr(self, method)
        if c is None:
            raise NoCrossingError(self.errors.get(method, f"no {method} crossing"))
        return c.j_c

    def to_dict(self) -> dict:
        out = {}
        for m in ("rbar", "kl", "beta"):
            c = getattr(self, m)
            out[m] = None if c is None else {
                "j_c": c.j_c, "bracket": list(c.bracket), "threshold": c.threshold, "residual": c.residual,
            }
        if self.errors:
            out["errors"] = dict(self.errors)
        return out


def find_crossing(x, y, threshold: float, method: str = "custom") -> MethodCrossing:
    """First upward crossing of ``y`` through ``threshold``, interpolated in ``log x``."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(y, dtype=float) - threshold
    for i in range(f.size - 1):
        a, b = f[i], f[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a < 0 <= b:
            la, lb = np.log(x[i]), np.log(x[i + 1])
            t = -a / (b - a)
            xc = float(np.exp(la + t * (lb - la)))
            res = float(a + t * (b - a))
            return MethodCrossing(method, xc, (i, i + 1), threshold, res)
    finite = np.asarray(y, dtype=float)[np.isfinite(y)]
    if finite.size == 0:
        raise NoCrossingError(f"{method}: curve has no finite values")
    lo, hi = finite.min(), finite.max()
    raise NoCrossingError(
        f"{method}: no upward crossing of {threshold:.6g}; curve spans [{lo:.6g}, {hi:.6g}] "
        f"over x in [{x[0]:.6g}, {x[-1]:.6g}]"
    )


def crossing_rbar(curve: SweepCurve, threshold: float = RBAR_THRESHOLD) -> MethodCrossing:
    return find_crossing(curve.j, curve.rbar, threshold, "rbar")


def crossing_kl(curve: SweepCurve) -> MethodCrossing:
    """Sign change of ``D(P||P0) - D(P||P1)`` from negative to positive."""
    return find_crossing(curve.j, curve.dkl_p0 - curve.dkl_p1, KL_THRESHOLD, "kl")


def crossing_beta(curve: SweepCurve, threshold: float = BETA_THRESHOLD) -> MethodCrossing:
    return find_crossing(curve.j, curve.beta, threshold, "beta")


def crossings(curve: SweepCurve) -> CrossingResult:
    found, errors = {}, {}
    for name, fn in (("rbar", crossing_rbar), ("kl", crossing_kl), ("beta", crossing_beta)):
        try:
            found[name] = fn(curve)
        except NoCrossingError as exc:
            found[name] = None
            errors[name] = str(exc)
    return CrossingResult(found["rbar"], found["kl"], found["beta"], errors)


_CROSSERS = {"rbar": crossing_rbar, "kl": crossing_kl, "beta": crossing_beta}


def crossing(curve: SweepCurve, method: str) -> float:
    try:
        return _CROSSERS[method](curve).j_c
    except KeyError:
        raise ValueError(f"unknown crossing method {method!r}") from None


# ----------------------------------------------------------- derived analyses


@dataclass
class DisorderScan:
    """Crossing points versus disorder strength for several array types."""

    sigmas: np.ndarray
    j_c: dict
    fits: dict
    curves: dict

    def relative_increase(self, target: str = "A", reference: str = "F", use_fit: bool = False) -> np.ndarray:
        """``(J_C^target - J_C^reference) / J_C^reference`` pointwise or from the quadratic fits."""
        if use_fit:
            a = np.polyval(self.fits[target], self.sigmas)
            b = np.polyval(self.fits[reference], self.sigmas)
        else:
            a, b = self.j_c[target], self.j_c[reference]
        return (a - b) / b


def disorder_scan(models: Mapping[str, object], sigmas: Sequence[float],
                  grids: Callable[[float], Sequence[float]] | Sequence[float], realizations: int,
                  master_seed: int = 0, method: str = "kl", kind: str = "site-frequency",
                  options: SweepOptions = SweepOptions(), workers: int | None = None) -> DisorderScan:
    """Sweep each model at each disorder strength and extract ``J_C``.

    ``grids`` is a fixed grid or a function of sigma.  All models share the
    master seed, so realizations are paired across array types.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    j_c = {k: np.full(sigmas.size, np.nan) for k in models}
    curves = {k: [] for k in models}
    for i, s in enumerate(sigmas):
        grid = grids(s) if callable(grids) else grids
        dis = DisorderSpec(kind, float(s), master_seed)
        for name, model in models.items():
            c = run_sweep(model, grid, realizations, dis, options, workers)
            curves[name].append(c)
            j_c[name][i] = crossing(c, method)
    fits = {}
    if sigmas.size >= 3:
        fits = {k: np.polyfit(sigmas, v, 2) for k, v in j_c.items()}
    return DisorderScan(sigmas, j_c, fits, curves)


@dataclass
class EtaScan:
    etas: np.ndarray
    j_c: np.ndarray
    slope: float
    intercept: float
    slope_se: float
    curves: list

    @property
    def significance(self) -> float:
        return self.slope / self.slope_se if self.slope_se > 0 else float("inf")


def eta_scan(model_for_eta: Callable[[float], object], etas: Sequence[float], grid, realizations: int,
             disorder: DisorderSpec, method: str = "kl", options: SweepOptions = SweepOptions(),
             workers: int | None = None) -> EtaScan:
    """Crossing point of an alternating array versus the interaction ratio ``eta``."""
    etas = np.asarray(etas, dtype=float)
    jc, curves = [], []
    for e in etas:
        g = grid(e) if callable(grid) else grid
        c = run_sweep(model_for_eta(float(e)), g, realizations, disorder, options, workers)
        curves.append(c)
        jc.append(crossing(c, method))
    jc = np.array(jc)
    if etas.size >= 3:
        fit = stats.linregress(etas, jc)
        slope, icpt, se = float(fit.slope), float(fit.intercept), float(fit.stderr)
    else:
        slope, icpt = (float(v) for v in np.polyfit(etas, jc, 1)) if etas.size == 2 else (np.nan, np.nan)
        se = float("nan")
    return EtaScan(etas, jc, slope, icpt, se, curves)


@dataclass
class CrComparison:
    rwa: SweepCurve
    cr: SweepCurve

    @property
    def max_abs_diff(self) -> float:
        return float(np.max(np.abs(self.cr.rbar - self.rwa.rbar)))


def cr_comparison(model: BoseHubbardModel, grid, realizations: int, disorder: DisorderSpec,
                  options: SweepOptions = SweepOptions(), workers: int | None = None) -> CrComparison:
    """Paired sweeps with and without pair-creation terms (shared seeds)."""
    base = replace(model, counter_rotating=False)
    with_cr = replace(model, counter_rotating=True)
    return CrComparison(
        run_sweep(base, grid, realizations, disorder, options, workers),
        run_sweep(with_cr, grid, realizations, disorder, options, workers),
    )
