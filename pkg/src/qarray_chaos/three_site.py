"""Two excitations on three sites: perturbative splitting of the edge doublet.

Basis order ``200, 110, 101, 020, 011, 002``.  The lateral sites have
interaction ``-U`` (so ``|200>`` and ``|002>`` sit at ``-U``), the central
site has interaction ``U_C`` and detuning ``dw``.  Tunnelling between the
two lateral doubly occupied states needs four hops, so their splitting
scales as ``J**4``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .eigensolve import eig_symmetric
from .errors import IdentificationError, ParameterDomainError, ResonanceError

SQ2 = np.sqrt(2.0)
WEAK_HOPPING_RATIO = 0.05
RESONANCE_TOL = 1e-6


@dataclass(frozen=True)
class ThreeSiteParams:
    u: float
    u_c: float
    delta_omega: float
    j: float

    def __post_init__(self):
        if not self.u > 0:
            raise ParameterDomainError(f"u must be positive, got {self.u}")
        if self.j < 0:
            raise ParameterDomainError(f"j must be >= 0, got {self.j}")

    @property
    def eta(self) -> float:
        return self.u_c / self.u

    @classmethod
    def from_eta(cls, u, eta, delta_omega, j) -> "ThreeSiteParams":
        return cls(u, eta * u, delta_omega, j)

    def min_gap(self) -> float:
        """Smallest energy denominator of the weak-hopping expansion."""
        u, dw = self.u, self.delta_omega
        return min(u, abs(u + dw), abs(u + self.u_c + 2 * dw))


def build_three_site_matrix(p: ThreeSiteParams) -> np.ndarray:
    u, uc, dw, j = p.u, p.u_c, p.delta_omega, p.j
    a = SQ2 * j
    return np.array([
        [-u, a, 0, 0, 0, 0],
        [a, dw, j, a, 0, 0],
        [0, j, 0, 0, j, 0],
        [0, a, 0, uc + 2 * dw, a, 0],
        [0, 0, j, a, dw, a],
        [0, 0, 0, 0, a, -u],
    ], dtype=float)


def analytic_splitting(p: ThreeSiteParams) -> float:
    """Leading-order splitting of the ``|200>, |002>`` doublet."""
    x = p.delta_omega / p.u
    den = 1 + p.eta + 2 * x
    if abs(den) < RESONANCE_TOL or abs(1 + x) < RESONANCE_TOL:
        raise ResonanceError(f"resonant denominator for {p}")
    if p.j > WEAK_HOPPING_RATIO * p.min_gap():
        warnings.warn(f"J = {p.j} is not small against the level gaps ({p.min_gap():.3g})", stacklevel=2)
    return float(4 * p.j ** 4 / (p.u ** 3 * (1 + x) ** 2) * abs(1 + 2 / den))


def numeric_splitting(p: ThreeSiteParams) -> float:
    """Gap between the two exact eigenvalues closest to ``-U``."""
    ev = eig_symmetric(build_three_site_matrix(p)).eigenvalues
    d = np.abs(ev + p.u)
    order = np.argsort(d, kind="stable")
    pair = ev[order[:2]]
    if d[order[2]] <= 1.1 * d[order[1]]:
        raise IdentificationError(
            f"third level at distance {d[order[2]]:.3g} from -U is as close as the pair ({d[order[1]]:.3g})"
        )
    return float(abs(pair[1] - pair[0]))


def suppression_ratio(delta_omega_over_u: float, eta: float) -> float:
    """Weak-disorder ratio of the alternating to the uniform splitting."""
    return abs(delta_omega_over_u) * (3 + eta) / (1 + eta)


def anharmonicity_disorder_ratio(delta_u: float, delta_omega: float) -> float:
    """Splitting ratio for ``eta = -1 + dU/U`` relative to ``eta = -1``."""
    return 1.0 / abs(1 + delta_u / (2 * delta_omega))


def splitting_table(u: float, delta_omega: float, j: float, etas) -> list[tuple[float, float, float]]:
    """Rows ``(eta, analytic, numeric)``."""
    rows = []
    for e in etas:
        p = ThreeSiteParams.from_eta(u, float(e), delta_omega, j)
        rows.append((float(e), analytic_splitting(p), numeric_splitting(p)))
    return rows
