"""Qubit connectivity graphs: linear chain, surface-7 chip and rectangular grid.

Sites are 0-indexed internally; reports convert to 1-indexed labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import GraphError


@dataclass(frozen=True)
class ConnectivityGraph:
    """Undirected, connected, simple graph on ``n_sites`` sites.

    Edges are stored as sorted ``(i, j)`` tuples with ``i < j``, in the
    order they were given (which fixes the order of per-edge hopping lists).
    """

    n_sites: int
    edges: tuple[tuple[int, int], ...]
    name: str = "custom"

    def __post_init__(self):
        m = self.n_sites
        if m < 1:
            raise GraphError(f"n_sites must be >= 1, got {m}")
        seen = set()
        norm = []
        for e in self.edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise GraphError(f"self-loop at site {i}")
            if not (0 <= i < m and 0 <= j < m):
                raise GraphError(f"edge ({i}, {j}) out of range for {m} sites")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise GraphError(f"duplicate edge {key}")
            seen.add(key)
            norm.append(key)
        object.__setattr__(self, "edges", tuple(norm))
        if not _is_connected(m, norm):
            raise GraphError("graph is disconnected")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, site: int) -> int:
        return sum(site in e for e in self.edges)

    def is_bipartite_by_parity(self) -> bool:
        """True if every edge joins an even and an odd site index."""
        return all((i + j) % 2 == 1 for i, j in self.edges)

    def without_edge(self, edge: Sequence[int]) -> "ConnectivityGraph":
        key = (min(edge), max(edge))
        return ConnectivityGraph(self.n_sites, tuple(e for e in self.edges if e != key), self.name)

    def to_dict(self) -> dict:
        return {"n_sites": self.n_sites, "edges": [list(e) for e in self.edges], "name": self.name}


def _is_connected(m: int, edges: Iterable[tuple[int, int]]) -> bool:
    adj = {i: [] for i in range(m)}
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    stack, seen = [0], {0}
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == m


def linear_chain(m: int) -> ConnectivityGraph:
    if m < 2:
        raise GraphError(f"linear chain needs m >= 2, got {m}")
    return ConnectivityGraph(m, tuple((i, i + 1) for i in range(m - 1)), f"chain{m}")


def surface7() -> ConnectivityGraph:
    """Seven-site chain with the middle site (index 3) also tied to both ends."""
    edges = tuple((i, i + 1) for i in range(6)) + ((0, 3), (3, 6))
    return ConnectivityGraph(7, edges, "surface7")


def grid(rows: int, cols: int) -> ConnectivityGraph:
    """Rectangular nearest-neighbour lattice, row-major site numbering."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise GraphError(f"degenerate grid {rows}x{cols}")
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    if rows == 1 or cols == 1:
        return ConnectivityGraph(rows * cols, tuple(sorted(edges)), f"chain{rows * cols}")
    return ConnectivityGraph(rows * cols, tuple(edges), f"grid{rows}x{cols}")


def from_edge_list(m: int, edges: Iterable[Sequence[int]], name: str = "custom") -> ConnectivityGraph:
    return ConnectivityGraph(int(m), tuple((int(e[0]), int(e[1])) for e in edges), name)


def alternating_types(graph: ConnectivityGraph, grid_cols: int | None = None) -> tuple[int, ...]:
    """Site type labels (0 or 1) for an alternating array.

    Chain order parity by default; with ``grid_cols`` the checkerboard
    parity ``(row + col) % 2`` is used instead (identical to index parity
    when the column count is odd).
    """
    if grid_cols:
        return tuple(((k // grid_cols) + (k % grid_cols)) % 2 for k in range(graph.n_sites))
    return tuple(k % 2 for k in range(graph.n_sites))
