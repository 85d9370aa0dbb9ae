"""Localized-to-chaotic crossover in disordered superconducting qubit arrays.

Exact diagonalization of Bose-Hubbard and coupled transmon/CSFQ arrays,
level-spacing-ratio statistics, and crossing-point extraction.
"""

__version__ = "0.1.0"

from .lattice import ConnectivityGraph, grid, linear_chain, surface7  # noqa: E402
from .fock_basis import FockBasis, enumerate_sector, enumerate_extended  # noqa: E402
from .hamiltonian import BoseHubbardParams, build_bose_hubbard, build_coupled_array, build_bh_with_cr  # noqa: E402
from .eigensolve import eig_symmetric  # noqa: E402
from .levelstats import spacing_ratios, mean_ratio, histogram, kl_divergence, fit_beta_gamma  # noqa: E402
from .crossover import DisorderSpec, BoseHubbardModel, QubitArrayModel, run_sweep, crossings  # noqa: E402

__all__ = [
    "ConnectivityGraph", "grid", "linear_chain", "surface7",
    "FockBasis", "enumerate_sector", "enumerate_extended",
    "BoseHubbardParams", "build_bose_hubbard", "build_coupled_array", "build_bh_with_cr",
    "eig_symmetric",
    "spacing_ratios", "mean_ratio", "histogram", "kl_divergence", "fit_beta_gamma",
    "DisorderSpec", "BoseHubbardModel", "QubitArrayModel", "run_sweep", "crossings",
]
