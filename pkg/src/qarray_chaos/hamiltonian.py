"""Dense Hamiltonians for Bose-Hubbard and coupled qubit arrays.

Every builder fills the strictly lower triangle from one representative of
each unordered pair of states and mirrors it, so outputs are exactly
symmetric.  Matrices are plain ``(D, D)`` float64 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ParameterDomainError
from .fock_basis import (
    ExtendedBasis,
    FockBasis,
    Moves,
    enumerate_extended,
    enumerate_sector,
    hopping_moves,
    pair_moves,
)
from .lattice import ConnectivityGraph
from .qubit_models import CsfqSpec, QubitSpec, QubitSpectrum, TransmonSpec


@dataclass
class BoseHubbardParams:
    """Per-site frequencies and interactions, per-edge hoppings."""

    omega01: np.ndarray
    u: np.ndarray
    j_edges: np.ndarray

    def __post_init__(self):
        self.omega01 = np.asarray(self.omega01, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.j_edges = np.atleast_1d(np.asarray(self.j_edges, dtype=float))
        if self.omega01.ndim != 1 or self.u.shape != self.omega01.shape:
            raise ParameterDomainError("omega01 and u must be 1-D with equal length")
        for name in ("omega01", "u", "j_edges"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ParameterDomainError(f"{name} has non-finite entries")

    @property
    def n_sites(self) -> int:
        return self.omega01.size

    def check(self, graph: ConnectivityGraph):
        if self.n_sites != graph.n_sites or self.j_edges.size != graph.n_edges:
            raise ParameterDomainError(
                f"params sized ({self.n_sites} sites, {self.j_edges.size} edges) "
                f"do not match graph ({graph.n_sites}, {graph.n_edges})"
            )

    @classmethod
    def uniform(cls, graph: ConnectivityGraph, omega01, u: float, j: float) -> "BoseHubbardParams":
        om = np.broadcast_to(np.asarray(omega01, dtype=float), (graph.n_sites,)).copy()
        return cls(om, np.full(graph.n_sites, float(u)), np.full(graph.n_edges, float(j)))

    @classmethod
    def alternating(cls, graph: ConnectivityGraph, omega01, u: float, j: float, eta: float = 1.0,
                    types: Sequence[int] | None = None) -> "BoseHubbardParams":
        """Type-0 sites carry ``u``, type-1 sites ``-eta * u``."""
        t = np.asarray(types if types is not None else [k % 2 for k in range(graph.n_sites)])
        us = np.where(t == 0, float(u), -float(eta) * float(u))
        om = np.broadcast_to(np.asarray(omega01, dtype=float), (graph.n_sites,)).copy()
        return cls(om, us, np.full(graph.n_edges, float(j)))


@dataclass(frozen=True)
class ArrayConfig:
    """Qubit array: one spec and one sampled Josephson energy per site."""

    specs: tuple
    e_j: tuple
    k: float
    n_exc: int
    kinds: tuple = field(init=False)

    def __post_init__(self):
        if len(self.specs) != len(self.e_j):
            raise ParameterDomainError("need one Josephson energy per site")
        object.__setattr__(self, "kinds", tuple("csfq" if isinstance(s, CsfqSpec) else "transmon" for s in self.specs))

    @property
    def pattern(self) -> str:
        ks = set(self.kinds)
        if ks == {"transmon"}:
            return "uniform-T"
        if ks == {"csfq"}:
            return "uniform-F"
        if all(a != b for a, b in zip(self.kinds, self.kinds[1:])):
            return "alternating"
        return "custom"


def table1_site(spec: QubitSpec, e_j: float | None = None) -> tuple[float, float, float]:
    """Bose-Hubbard site parameters ``(A, omega01, U)`` of one qubit."""
    if isinstance(spec, TransmonSpec):
        ec = spec.e_c
        ej = spec.e_j_mean if e_j is None else float(e_j)
        if ej <= 0:
            raise ParameterDomainError(f"E_J must be positive, got {ej}")
        return ej / (8 * ec), float(np.sqrt(8 * ej * ec) - ec), -ec
    if isinstance(spec, CsfqSpec):
        a, ec = spec.alpha, spec.e_cf
        ej = spec.e_jf_mean if e_j is None else float(e_j)
        if ej <= 0:
            raise ParameterDomainError(f"E_JF must be positive, got {ej}")
        r = 1 - 2 * a
        omega = np.sqrt(16 * r * ej * ec) - ec * (1 - 8 * a) / r
        return r * ej / (4 * ec), float(omega), ec * (8 * a - 1) / r
    raise TypeError(f"unknown qubit spec {type(spec).__name__}")


def table1_map(specs: Sequence[QubitSpec], e_js: Sequence[float] | None, k: float,
               graph: ConnectivityGraph) -> BoseHubbardParams:
    """Map a qubit array onto Bose-Hubbard parameters.

    ``J_ij = (K / 2) * (A_i A_j)**(1/4)`` on every edge.
    """
    if len(specs) != graph.n_sites:
        raise ParameterDomainError(f"{len(specs)} specs for {graph.n_sites} sites")
    e_js = [None] * len(specs) if e_js is None else list(e_js)
    rows = np.array([table1_site(s, e) for s, e in zip(specs, e_js)])
    a = rows[:, 0]
    j = np.array([0.5 * k * (a[i] * a[jj]) ** 0.25 for i, jj in graph.edges])
    return BoseHubbardParams(rows[:, 1], rows[:, 2], j)


def subtract_mean_frequency(params: BoseHubbardParams) -> BoseHubbardParams:
    """Shift frequencies to zero mean.

    Inside a fixed-excitation sector this only moves every level by
    ``N * mean``, so spacings are unchanged.
    """
    return BoseHubbardParams(params.omega01 - params.omega01.mean(), params.u.copy(), params.j_edges.copy())


def sign_flip_partner(params: BoseHubbardParams) -> BoseHubbardParams:
    """Parameters with ``U -> -U`` and detunings ``delta_omega -> -delta_omega``.

    For mean-subtracted parameters on a bipartite graph the spectrum of the
    partner is the negated spectrum of the original: ``-H(-U, -dw, J)``
    equals ``H(U, dw, -J)``, and the hopping sign is removed by the gauge
    ``b_i -> (-1)**i b_i`` (see :func:`parity_gauge`).
    """
    mean = params.omega01.mean()
    return BoseHubbardParams(2 * mean - params.omega01, -params.u, params.j_edges.copy())


def parity_gauge(basis: FockBasis) -> np.ndarray:
    """Diagonal of the ``b_i -> (-1)**i b_i`` relabelling on a basis.

    Test utility: ``S H(J) S == H(-J)`` for a graph whose edges join sites
    of opposite index parity.
    """
    odd = basis.states[:, 1::2].sum(axis=1)
    return np.where(odd % 2 == 0, 1.0, -1.0)


# ---------------------------------------------------------------- structure


@dataclass(frozen=True, eq=False)
class _SectorTables:
    basis: FockBasis
    moves: Moves
    pairs: np.ndarray
    amp: np.ndarray


@lru_cache(maxsize=32)
def _sector_tables(graph: ConnectivityGraph, n_exc: int) -> _SectorTables:
    basis = enumerate_sector(graph.n_sites, n_exc)
    mv = hopping_moves(basis.states, lambda s: basis.indices(s), graph).lower()
    s = basis.states
    amp = np.sqrt(((mv.na + 1) * mv.nb).astype(float))
    return _SectorTables(basis, mv, (s * (s - 1)) // 2, amp)


def _assemble(dim, diag, rows, cols, vals) -> np.ndarray:
    h = np.zeros((dim, dim))
    h[rows, cols] = vals
    h += h.T
    h[np.diag_indices(dim)] = diag
    return h


def _check_basis(graph: ConnectivityGraph, basis: FockBasis):
    if basis.m != graph.n_sites:
        raise ParameterDomainError(f"basis has {basis.m} sites, graph has {graph.n_sites}")


def build_bose_hubbard(params: BoseHubbardParams, graph: ConnectivityGraph, basis: FockBasis) -> np.ndarray:
    """Fixed-sector Bose-Hubbard matrix.

    Diagonal ``sum_i omega_i n_i + U_i/2 n_i (n_i - 1)``; hop along edge
    ``(i, j)`` with amplitude ``J_ij sqrt((n_a + 1) n_b)``.
    """
    _check_basis(graph, basis)
    params.check(graph)
    t = _sector_tables(graph, basis.n_exc)
    diag = basis.states @ params.omega01 + t.pairs @ params.u
    mv = t.moves
    return _assemble(basis.dim, diag, mv.rows, mv.cols, params.j_edges[mv.edge] * t.amp)


def build_coupled_array(spectra: Sequence[QubitSpectrum], k: float, graph: ConnectivityGraph,
                        basis: FockBasis) -> np.ndarray:
    """Coupled-qubit Hamiltonian in the product eigenbasis.

    Diagonal ``sum_i (E_{u_i} - E_0)`` for site ``i``; hop element
    ``K <u+1|N_a|u> <v-1|N_b|v>`` along every edge.
    """
    _check_basis(graph, basis)
    if len(spectra) != graph.n_sites:
        raise ParameterDomainError(f"{len(spectra)} spectra for {graph.n_sites} sites")
    need = basis.n_exc + 1
    for i, sp in enumerate(spectra):
        if len(sp.levels) < need or sp.charge_elems.shape[0] < need:
            raise ParameterDomainError(f"site {i} spectrum holds {len(sp.levels)} levels, need {need}")
    t = _sector_tables(graph, basis.n_exc)
    s = basis.states
    diag = np.zeros(basis.dim)
    for i, sp in enumerate(spectra):
        diag += (sp.levels - sp.levels[0])[s[:, i]]
    # symmetrised charge tables, one per site, padded to a common size
    nmat = np.stack([0.5 * (sp.charge_elems[:need, :need] + sp.charge_elems[:need, :need].T) for sp in spectra])
    mv = t.moves
    vals = k * nmat[mv.a, mv.na + 1, mv.na] * nmat[mv.b, mv.nb - 1, mv.nb]
    return _assemble(basis.dim, diag, mv.rows, mv.cols, vals)


@dataclass(frozen=True, eq=False)
class _CrTables:
    ext: ExtendedBasis
    rows: np.ndarray
    cols: np.ndarray
    edge: np.ndarray
    amp: np.ndarray
    occ: np.ndarray
    pairs: np.ndarray


def _cr_tables(ext: ExtendedBasis, graph: ConnectivityGraph) -> _CrTables:
    core = ext.core
    m, n = core.m, core.n_exc
    states = ext.all_states
    nl = ext.n_lower
    lower = ext.extra[:nl]
    upper = ext.extra[nl:]
    d = core.dim
    parts = [
        hopping_moves(core.states, lambda x: ext.lookup(x, n), graph, 0),
        hopping_moves(upper, lambda x: ext.lookup(x, n + 2), graph, d + nl),
        pair_moves(core.states, lambda x: ext.lookup(x, n + 2), graph, 0),
    ]
    kinds = [0, 0, 1]
    if nl:
        parts.insert(1, hopping_moves(lower, lambda x: ext.lookup(x, n - 2), graph, d))
        parts.append(pair_moves(lower, lambda x: ext.lookup(x, n), graph, d))
        kinds = [0, 0, 0, 1, 1]
    rows, cols, edge, amp = [], [], [], []
    for kind, mv in zip(kinds, parts):
        if kind == 0:
            mv = mv.lower()
            a2 = (mv.na + 1) * mv.nb
        else:
            a2 = (mv.na + 1) * (mv.nb + 1)
        r, c = np.maximum(mv.rows, mv.cols), np.minimum(mv.rows, mv.cols)
        rows.append(r)
        cols.append(c)
        edge.append(mv.edge)
        amp.append(np.sqrt(a2.astype(float)))
    return _CrTables(
        ext, np.concatenate(rows), np.concatenate(cols), np.concatenate(edge), np.concatenate(amp),
        states, (states * (states - 1)) // 2,
    )


@lru_cache(maxsize=8)
def _cached_cr(graph: ConnectivityGraph, n_exc: int) -> _CrTables:
    core = enumerate_sector(graph.n_sites, n_exc)
    return _cr_tables(enumerate_extended(core, graph), graph)


def cr_basis(graph: ConnectivityGraph, n_exc: int) -> ExtendedBasis:
    """Cached extended basis for ``(graph, n_exc)``."""
    if n_exc < 2:
        raise ParameterDomainError(f"counter-rotating extension needs n_exc >= 2, got {n_exc}")
    return _cached_cr(graph, n_exc).ext


def build_bh_with_cr(params: BoseHubbardParams, graph: ConnectivityGraph, ext: ExtendedBasis) -> np.ndarray:
    """Bose-Hubbard matrix with pair terms on the extended basis.

    Frequencies are used as given (absolute).  Sector blocks carry the usual
    diagonal and hopping restricted to the extended state set; off-blocks
    couple ``N`` to ``N +- 2`` with amplitude ``J_ij sqrt((n_i+1)(n_j+1))``.
    """
    core = ext.core
    _check_basis(graph, core)
    params.check(graph)
    if core.n_exc < 2:
        raise ParameterDomainError(f"counter-rotating extension needs n_exc >= 2, got {core.n_exc}")
    cached = _cached_cr(graph, core.n_exc)
    t = cached if cached.ext is ext else _cr_tables(ext, graph)
    diag = t.occ @ params.omega01 + t.pairs @ params.u
    return _assemble(ext.dim, diag, t.rows, t.cols, params.j_edges[t.edge] * t.amp)
