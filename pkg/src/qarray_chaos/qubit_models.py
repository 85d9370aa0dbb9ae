"""Single-qubit charge-basis Hamiltonians for transmons and C-shunted flux qubits.

All energies are frequencies E/h in GHz.  The charge basis is truncated to
``n = -n_cut .. n_cut`` (default 50).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace
from typing import Union

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, NumericalError, ParameterDomainError

log = logging.getLogger(__name__)

DEFAULT_N_CUT = 50


@dataclass(frozen=True)
class TransmonSpec:
    e_c: float
    e_j_mean: float
    e_j_sigma: float = 0.0

    def __post_init__(self):
        if not self.e_c > 0 or not self.e_j_mean > 0:
            raise ParameterDomainError(f"transmon needs e_c > 0 and e_j_mean > 0, got {self}")
        if self.e_j_sigma < 0:
            raise ParameterDomainError(f"e_j_sigma must be >= 0, got {self.e_j_sigma}")
        if self.e_j_mean / self.e_c <= 10:
            warnings.warn(f"E_J/E_C = {self.e_j_mean / self.e_c:.3g} is outside the transmon regime", stacklevel=2)

    @property
    def e_j_name(self) -> str:
        return "e_j"

    @property
    def josephson_mean(self) -> float:
        return self.e_j_mean

    @property
    def josephson_sigma(self) -> float:
        return self.e_j_sigma

    def charge_hamiltonian(self, e_j: float | None = None, n_cut: int = DEFAULT_N_CUT) -> np.ndarray:
        return build_transmon_charge_hamiltonian(self.e_c, self.e_j_mean if e_j is None else e_j, n_cut)


@dataclass(frozen=True)
class CsfqSpec:
    """C-shunted flux qubit at half-flux bias.

    ``alpha`` is the small-to-large junction ratio; the interaction is
    positive only for ``1/8 < alpha < 1/2``.  Pass ``allow_nonpositive_u``
    to build qubits with ``0 <= alpha <= 1/8``.
    """

    e_cf: float
    e_jf_mean: float
    e_jf_sigma: float
    alpha: float
    allow_nonpositive_u: bool = False

    def __post_init__(self):
        if not self.e_cf > 0 or not self.e_jf_mean > 0:
            raise ParameterDomainError(f"CSFQ needs e_cf > 0 and e_jf_mean > 0, got {self}")
        if self.e_jf_sigma < 0:
            raise ParameterDomainError(f"e_jf_sigma must be >= 0, got {self.e_jf_sigma}")
        _check_alpha(self.alpha, self.allow_nonpositive_u)

    @property
    def josephson_mean(self) -> float:
        return self.e_jf_mean

    @property
    def josephson_sigma(self) -> float:
        return self.e_jf_sigma

    def charge_hamiltonian(self, e_jf: float | None = None, n_cut: int = DEFAULT_N_CUT) -> np.ndarray:
        return build_csfq_charge_hamiltonian(
            self.e_cf, self.e_jf_mean if e_jf is None else e_jf, self.alpha, n_cut, self.allow_nonpositive_u
        )


QubitSpec = Union[TransmonSpec, CsfqSpec]


def _check_alpha(alpha, allow_nonpositive_u):
    if not (0.0 <= alpha < 0.5):
        raise ParameterDomainError(f"alpha must lie in [0, 1/2), got {alpha}")
    if alpha <= 0.125 and not allow_nonpositive_u:
        raise ParameterDomainError(
            f"alpha = {alpha} <= 1/8 gives non-positive anharmonicity; pass allow_nonpositive_u=True"
        )


@dataclass(frozen=True)
class QubitSpectrum:
    """Lowest levels of a single qubit and its charge matrix elements.

    ``charge_elems[u, v]`` is <u|N|v> in the eigenbasis, with each
    eigenvector's largest-magnitude component made positive.
    """

    levels: np.ndarray
    charge_elems: np.ndarray

    @property
    def omega01(self) -> float:
        return float(self.levels[1] - self.levels[0])

    @property
    def anharm(self) -> float:
        lv = self.levels
        return float((lv[2] - lv[1]) - (lv[1] - lv[0]))


def _charge_grid(n_cut: int) -> np.ndarray:
    if n_cut < 1:
        raise ParameterDomainError(f"n_cut must be >= 1, got {n_cut}")
    return np.arange(-n_cut, n_cut + 1, dtype=float)


def build_transmon_charge_hamiltonian(e_c: float, e_j: float, n_cut: int = DEFAULT_N_CUT) -> np.ndarray:
    """``4 E_C N^2 - E_J cos(phi)`` in the charge basis."""
    if not e_c > 0:
        raise ParameterDomainError(f"e_c must be positive, got {e_c}")
    if not e_j >= 0:
        raise ParameterDomainError(f"e_j must be non-negative, got {e_j}")
    n = _charge_grid(n_cut)
    h = np.diag(4.0 * e_c * n * n)
    off = np.full(n.size - 1, -0.5 * e_j)
    h += np.diag(off, 1) + np.diag(off, -1)
    return h


def build_csfq_charge_hamiltonian(
    e_cf: float, e_jf: float, alpha: float, n_cut: int = DEFAULT_N_CUT, allow_nonpositive_u: bool = False
) -> np.ndarray:
    """``4 E_CF N^2 + E_JF (-2 cos(phi) + alpha cos(2 phi))`` in the charge basis."""
    if not e_cf > 0:
        raise ParameterDomainError(f"e_cf must be positive, got {e_cf}")
    if not e_jf >= 0:
        raise ParameterDomainError(f"e_jf must be non-negative, got {e_jf}")
    _check_alpha(alpha, allow_nonpositive_u)
    n = _charge_grid(n_cut)
    h = np.diag(4.0 * e_cf * n * n)
    first = np.full(n.size - 1, -e_jf)
    second = np.full(n.size - 2, 0.5 * alpha * e_jf)
    h += np.diag(first, 1) + np.diag(first, -1) + np.diag(second, 2) + np.diag(second, -2)
    return h


def qubit_spectrum(h: np.ndarray, n_levels: int) -> QubitSpectrum:
    """Lowest ``n_levels`` eigenpairs and the charge operator in that eigenbasis."""
    dim = h.shape[0]
    if n_levels > dim or n_levels < 1:
        raise ParameterDomainError(f"n_levels={n_levels} incompatible with dimension {dim}")
    if not np.all(np.isfinite(h)):
        raise NumericalError("charge Hamiltonian has non-finite entries")
    n = _charge_grid((dim - 1) // 2)
    try:
        w, v = scipy.linalg.eigh(h, subset_by_index=[0, n_levels - 1])
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigensolver failed on {dim}x{dim} charge matrix (diag range "
            f"{h.diagonal().min():.4g}..{h.diagonal().max():.4g})"
        ) from exc
    pivot = np.argmax(np.abs(v), axis=0)
    v = v * np.sign(v[pivot, np.arange(v.shape[1])])
    elems = v.T @ (n[:, None] * v)
    return QubitSpectrum(w, elems)


def site_spectrum(spec: QubitSpec, e_j: float | None = None, n_levels: int = 3, n_cut: int = DEFAULT_N_CUT):
    return qubit_spectrum(spec.charge_hamiltonian(e_j, n_cut), n_levels)


def charge_cutoff_converged(spec: QubitSpec, n_cut: int = DEFAULT_N_CUT, n_levels: int = 6, rtol: float = 1e-10) -> bool:
    """Lowest levels change by less than ``rtol`` when the cutoff grows by 10."""
    a = site_spectrum(spec, None, n_levels, n_cut).levels
    b = site_spectrum(spec, None, n_levels, n_cut + 10).levels
    return bool(np.all(np.abs(a - b) <= rtol * np.abs(b).max()))


def approx_omega01_anharm(spec: QubitSpec, e_j: float | None = None) -> tuple[float, float]:
    """Next-to-leading-order closed forms for the 0-1 frequency and anharmonicity.

    A transmon is mapped onto the CSFQ expressions with ``alpha -> 0``,
    ``E_CF -> E_C`` and ``E_JF -> E_J / 2``.
    """
    if isinstance(spec, TransmonSpec):
        ec, ej, a = spec.e_c, 0.5 * (spec.e_j_mean if e_j is None else e_j), 0.0
    else:
        ec, ej, a = spec.e_cf, spec.e_jf_mean if e_j is None else e_j, spec.alpha
    c = (1 - 8 * a) / (1 - 2 * a)
    d = (1 - 32 * a) / (1 - 2 * a)
    small = ec * np.sqrt(4 * ec / (ej * (1 - 2 * a)))
    omega = np.sqrt(16 * ej * (1 - 2 * a) * ec) - ec * c + small * (d / 8 - c * c / 4)
    anharm = -ec * c + small * (d / 4 - 17 / 32 * c * c)
    return float(omega), float(anharm)


def csfq_seed(target_omega01: float, target_domega01: float, target_abs_anharm: float, alpha: float):
    """Leading-order inversion used to start the matching solver.

    Returns ``(e_jf, e_cf, e_jf_sigma)``.
    """
    e_cf = target_abs_anharm * (1 - 2 * alpha) / (8 * alpha - 1)
    e_jf = (target_omega01 - target_abs_anharm) ** 2 / (16 * (1 - 2 * alpha) * e_cf)
    sigma = e_jf * 2 * target_domega01 / (target_omega01 - target_abs_anharm)
    return e_jf, e_cf, sigma


def _omega_anharm(e_cf, e_jf, alpha, n_cut):
    s = qubit_spectrum(build_csfq_charge_hamiltonian(e_cf, e_jf, alpha, n_cut), 3)
    return s.omega01, s.anharm


def domega01_de_j(spec: QubitSpec, e_j: float | None = None, rel_step: float = 1e-6, n_cut: int = DEFAULT_N_CUT) -> float:
    """Central finite-difference derivative of the exact 0-1 frequency w.r.t. E_J (or E_JF)."""
    x = spec.josephson_mean if e_j is None else e_j
    h = rel_step * x
    up = site_spectrum(spec, x + h, 2, n_cut).omega01
    dn = site_spectrum(spec, x - h, 2, n_cut).omega01
    return (up - dn) / (2 * h)


def match_csfq_parameters(
    target_omega01: float,
    target_domega01: float,
    target_abs_anharm: float,
    alpha: float,
    rtol: float = 1e-4,
    max_iter: int = 50,
    n_cut: int = DEFAULT_N_CUT,
    fd_step: float = 1e-6,
) -> CsfqSpec:
    """Find (E_JF, E_CF, dE_JF) whose exact spectrum reproduces the targets.

    Damped Newton on the log-residuals of omega01 and |anharm| in
    (log E_JF, log E_CF) with a central finite-difference Jacobian, seeded
    by the leading-order inversion.  ``rtol`` bounds |log(value/target)|,
    i.e. the relative error to first order.  The disorder width is mapped through the local derivative
    d omega01 / d E_JF.
    """
    if not (0.125 < alpha < 0.5):
        raise ParameterDomainError(f"matching needs 1/8 < alpha < 1/2, got {alpha}")
    if min(target_omega01, target_abs_anharm) <= 0 or target_domega01 < 0:
        raise ParameterDomainError("targets must be positive")
    target = np.log([target_omega01, target_abs_anharm])

    # Work in log(E_JF), log(E_CF): omega01 and the anharmonicity are close
    # to power laws there, which keeps Newton well conditioned far from the seed.
    def resid(y):
        w, a = _omega_anharm(np.exp(y[1]), np.exp(y[0]), alpha, n_cut)
        if a <= 0:
            return np.array([np.log(w), -np.inf]) - target
        return np.log([w, a]) - target

    e_jf0, e_cf0, _ = csfq_seed(target_omega01, target_domega01, target_abs_anharm, alpha)
    y = np.log([e_jf0, e_cf0])
    r = resid(y)
    history = [float(np.abs(r).max())]
    for _ in range(max_iter):
        if np.abs(r).max() < rtol:
            break
        jac = np.empty((2, 2))
        for k in range(2):
            dy = np.zeros(2)
            dy[k] = fd_step
            jac[:, k] = (resid(y + dy) - resid(y - dy)) / (2 * fd_step)
        if not np.all(np.isfinite(jac)):  # pragma: no cover - depends on seed quality
            raise ConvergenceError("CSFQ matching left the positive-anharmonicity region", history)
        step = np.linalg.solve(jac, -r)
        lam = 1.0
        while True:
            trial = y + lam * step
            rt = resid(trial)
            if np.all(np.isfinite(rt)) and np.linalg.norm(rt) < np.linalg.norm(r):
                break
            lam *= 0.5
            if lam < 1e-4:
                raise ConvergenceError("line search failed in CSFQ matching", history + [float(np.abs(r).max())])
        y, r = trial, rt
        history.append(float(np.abs(r).max()))
        log.debug("csfq match: e_jf=%g e_cf=%g resid=%s", *np.exp(y), r)
    else:
        if np.abs(r).max() >= rtol:
            raise ConvergenceError(f"CSFQ matching did not converge, last residuals {r}", history)
    x = np.exp(y)
    spec = CsfqSpec(float(x[1]), float(x[0]), 0.0, alpha)
    if not charge_cutoff_converged(spec, n_cut, 3, 1e-8):
        raise ConvergenceError(
            f"matched CSFQ (E_JF={x[0]:.4g}, E_CF={x[1]:.4g}) is not converged in the charge cutoff {n_cut}", history
        )
    slope = domega01_de_j(spec, rel_step=fd_step, n_cut=n_cut)
    return replace(spec, e_jf_sigma=float(target_domega01 / slope))


def transmon_targets(spec: TransmonSpec, n_cut: int = DEFAULT_N_CUT, fd_step: float = 1e-6):
    """(omega01, domega01, |anharm|) of a transmon from exact diagonalization."""
    s = site_spectrum(spec, None, 3, n_cut)
    slope = domega01_de_j(spec, rel_step=fd_step, n_cut=n_cut)
    return s.omega01, abs(slope) * spec.e_j_sigma, abs(s.anharm)
