"""Occupation-number bases for fixed-excitation sectors.

States are stored as rows of an ``(D, M)`` integer array sorted in
descending lexicographic order, so for ``M = 3, N = 2`` the order is
``200, 110, 101, 020, 011, 002``.  Reverse lookup uses combinatorial
ranking (no hashing): the rank of a state is the number of sector states
that precede it, computed from a table of partial binomial sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

from .errors import ParameterDomainError, SizeError
from .lattice import ConnectivityGraph

DEFAULT_MAX_DIM = 50_000


def sector_dimension(m: int, n_exc: int) -> int:
    """Number of ways to place ``n_exc`` bosons on ``m`` sites."""
    if n_exc < 0 or m < 1:
        return 0
    return comb(n_exc + m - 1, n_exc)


@lru_cache(maxsize=64)
def _rank_table(m: int, n_exc: int) -> np.ndarray:
    # off[k, R, v]: number of states whose prefix matches up to position k,
    # have R bosons left at position k, and put more than v there.
    off = np.zeros((m, n_exc + 1, n_exc + 1), dtype=np.int64)
    for k in range(m - 1):
        rest = m - k - 1
        for r in range(n_exc + 1):
            acc = 0
            for v in range(r, -1, -1):
                off[k, r, v] = acc
                acc += comb(r - v + rest - 1, rest - 1)
    off.setflags(write=False)
    return off


def rank_states(states: np.ndarray, m: int, n_exc: int) -> np.ndarray:
    """Vectorised rank of each row of ``states`` within sector ``(m, n_exc)``.

    Rows must sum to ``n_exc``; no check is done here.
    """
    states = np.atleast_2d(np.asarray(states, dtype=np.int64))
    off = _rank_table(m, n_exc)
    remaining = n_exc - np.concatenate(
        [np.zeros((states.shape[0], 1), dtype=np.int64), np.cumsum(states[:, :-1], axis=1)], axis=1
    )
    cols = np.arange(m)
    return off[cols[None, :], remaining, states].sum(axis=1)


@lru_cache(maxsize=64)
def _enumerate(m: int, n_exc: int) -> np.ndarray:
    if m == 1:
        return np.array([[n_exc]], dtype=np.int64)
    blocks = []
    for v in range(n_exc, -1, -1):
        tail = _enumerate(m - 1, n_exc - v)
        blocks.append(np.column_stack([np.full(len(tail), v, dtype=np.int64), tail]))
    out = np.concatenate(blocks)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class FockBasis:
    """All occupation vectors of ``m`` sites holding ``n_exc`` excitations."""

    m: int
    n_exc: int
    states: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def index(self, state) -> int:
        s = np.asarray(state, dtype=np.int64)
        if s.shape != (self.m,) or s.sum() != self.n_exc or (s < 0).any():
            raise KeyError(f"{tuple(s)} is not in sector (M={self.m}, N={self.n_exc})")
        return int(rank_states(s[None, :], self.m, self.n_exc)[0])

    def indices(self, states: np.ndarray) -> np.ndarray:
        return rank_states(states, self.m, self.n_exc)


@lru_cache(maxsize=32)
def _cached_sector(m: int, n_exc: int) -> FockBasis:
    return FockBasis(m, n_exc, _enumerate(m, n_exc))


def enumerate_sector(m: int, n_exc: int, max_dim: int = DEFAULT_MAX_DIM) -> FockBasis:
    """Enumerate the fixed-excitation sector in descending lexicographic order."""
    if m < 1 or n_exc < 0:
        raise ParameterDomainError(f"need m >= 1 and n_exc >= 0, got m={m}, n_exc={n_exc}")
    d = sector_dimension(m, n_exc)
    if d > max_dim:
        raise SizeError(f"sector dimension {d} exceeds cap {max_dim}")
    return _cached_sector(m, n_exc)


def extended_dimension_closed_form(m: int, n_exc: int) -> int:
    """Count of ``N +- 2`` states reached by one pair term on an ``m``-site chain."""
    if n_exc < 2 or m < 2:
        raise ParameterDomainError(f"closed form needs n_exc >= 2 and m >= 2, got m={m}, n_exc={n_exc}")
    if m == 2:
        return 2 * n_exc
    num = (n_exc + m - 4) * (n_exc + m - 3) * sector_dimension(m - 2, n_exc - 2)
    if num % (m - 2):
        raise ArithmeticError("closed form did not yield an integer")
    return (m - 1) * sector_dimension(m, n_exc) + num // (m - 2)


@dataclass(frozen=True, eq=False)
class ExtendedBasis:
    """Core sector plus the ``N - 2`` and ``N + 2`` states reachable by pair terms.

    ``extra`` holds the lowered-sector states first, then the raised ones,
    each block in canonical sector order.
    """

    core: FockBasis
    extra: np.ndarray = field(repr=False)
    lower_map: np.ndarray = field(repr=False)
    upper_map: np.ndarray = field(repr=False)

    @property
    def n_lower(self) -> int:
        return int((self.lower_map >= 0).sum())

    @property
    def n_upper(self) -> int:
        return int((self.upper_map >= 0).sum())

    @property
    def dim(self) -> int:
        return self.core.dim + self.extra.shape[0]

    @property
    def all_states(self) -> np.ndarray:
        return np.concatenate([self.core.states, self.extra])

    @property
    def labels(self) -> np.ndarray:
        """Total occupation of every basis state, core first."""
        return self.all_states.sum(axis=1)

    def lookup(self, states: np.ndarray, n_total: int) -> np.ndarray:
        """Global index of each row (core at 0.., extra after); -1 if absent."""
        m, n = self.core.m, self.core.n_exc
        if n_total == n:
            return rank_states(states, m, n)
        if n_total == n - 2:
            return _mapped(self.lower_map, rank_states(states, m, n - 2), self.core.dim)
        if n_total == n + 2:
            return _mapped(self.upper_map, rank_states(states, m, n + 2), self.core.dim)
        return np.full(len(states), -1, dtype=np.int64)


def _mapped(table, ranks, offset):
    local = table[ranks]
    return np.where(local >= 0, local + offset, -1)


def enumerate_extended(basis: FockBasis, graph: ConnectivityGraph, max_dim: int = DEFAULT_MAX_DIM) -> ExtendedBasis:
    """Reachability closure of one application of sum_edges (b_i^+ b_j^+ + b_i b_j)."""
    m, n = basis.m, basis.n_exc
    if graph.n_sites != m:
        raise ParameterDomainError(f"graph has {graph.n_sites} sites, basis has {m}")
    s = basis.states
    lower, upper = set(), set()
    for i, j in graph.edges:
        up = s.copy()
        up[:, i] += 1
        up[:, j] += 1
        upper.update(rank_states(up, m, n + 2).tolist())
        if n >= 2:
            ok = (s[:, i] > 0) & (s[:, j] > 0)
            if ok.any():
                down = s[ok].copy()
                down[:, i] -= 1
                down[:, j] -= 1
                lower.update(rank_states(down, m, n - 2).tolist())
    total = basis.dim + len(lower) + len(upper)
    if total > max_dim:
        raise SizeError(f"extended dimension {total} exceeds cap {max_dim}")

    lower_idx = np.array(sorted(lower), dtype=np.int64)
    upper_idx = np.array(sorted(upper), dtype=np.int64)
    lower_map = np.full(max(sector_dimension(m, n - 2), 1), -1, dtype=np.int64)
    lower_map[lower_idx] = np.arange(len(lower_idx))
    upper_map = np.full(sector_dimension(m, n + 2), -1, dtype=np.int64)
    upper_map[upper_idx] = np.arange(len(upper_idx)) + len(lower_idx)
    parts = []
    if len(lower_idx):
        parts.append(_enumerate(m, n - 2)[lower_idx])
    parts.append(_enumerate(m, n + 2)[upper_idx])
    extra = np.concatenate(parts)
    return ExtendedBasis(basis, extra, lower_map, upper_map)


@dataclass(frozen=True, eq=False)
class Moves:
    """Sparse list of elementary moves between basis states.

    ``rows``/``cols`` are global (target, source) indices, ``a``/``b`` the
    sites gaining/losing (or, for pair moves, both gaining) an excitation,
    ``na``/``nb`` their occupations in the source state, ``edge`` the edge
    index in the graph.
    """

    rows: np.ndarray
    cols: np.ndarray
    a: np.ndarray
    b: np.ndarray
    na: np.ndarray
    nb: np.ndarray
    edge: np.ndarray

    def __len__(self) -> int:
        return self.rows.size

    def lower(self) -> "Moves":
        """Subset with ``row > col`` (one entry per unordered pair)."""
        k = self.rows > self.cols
        return Moves(*(getattr(self, f)[k] for f in ("rows", "cols", "a", "b", "na", "nb", "edge")))


def _collect(parts) -> Moves:
    cols = list(zip(*parts)) if parts else [[]] * 7
    return Moves(*(_cat(list(c)) for c in cols))


def hopping_moves(states: np.ndarray, lookup, graph: ConnectivityGraph, offset: int = 0) -> Moves:
    """All single-boson hops ``b_a^+ b_b`` along graph edges inside a state set.

    Parameters
    ----------
    states : (D, M) int array
        Source states, all with the same total occupation.
    lookup : callable
        Maps an array of target states to global indices (-1 = not in set).
    offset : int
        Global index of ``states[0]``.

    The bosonic amplitude of a move is ``sqrt((na + 1) * nb)``.
    """
    parts = []
    src_all = np.arange(states.shape[0]) + offset
    for e, (i, j) in enumerate(graph.edges):
        for a, b in ((i, j), (j, i)):
            ok = states[:, b] > 0
            if not ok.any():
                continue
            src = states[ok]
            tgt = src.copy()
            tgt[:, a] += 1
            tgt[:, b] -= 1
            idx = lookup(tgt)
            keep = idx >= 0
            n = int(keep.sum())
            parts.append((
                idx[keep], src_all[ok][keep], np.full(n, a), np.full(n, b),
                src[keep, a], src[keep, b], np.full(n, e),
            ))
    return _collect(parts)


def pair_moves(states: np.ndarray, lookup_up, graph: ConnectivityGraph, offset: int = 0) -> Moves:
    """Pair creation ``b_i^+ b_j^+`` on every edge; amplitude ``sqrt((na + 1) * (nb + 1))``."""
    parts = []
    src_all = np.arange(states.shape[0]) + offset
    for e, (i, j) in enumerate(graph.edges):
        tgt = states.copy()
        tgt[:, i] += 1
        tgt[:, j] += 1
        idx = lookup_up(tgt)
        keep = idx >= 0
        n = int(keep.sum())
        parts.append((
            idx[keep], src_all[keep], np.full(n, i), np.full(n, j),
            states[keep, i], states[keep, j], np.full(n, e),
        ))
    return _collect(parts)


def _cat(parts):
    return np.concatenate(parts).astype(np.int64) if parts else np.zeros(0, dtype=np.int64)


def count_pair_applications(basis: FockBasis, graph: ConnectivityGraph) -> int:
    """Number of nonzero (edge, state) applications of the pair terms.

    Counts with multiplicity: a target state reached from several sources or
    along several edges is counted once per application.  On a linear chain
    this equals :func:`extended_dimension_closed_form`.
    """
    s = basis.states
    total = 0
    for i, j in graph.edges:
        total += s.shape[0]
        total += int(((s[:, i] > 0) & (s[:, j] > 0)).sum())
    return total
