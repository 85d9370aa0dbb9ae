"""Full dense real-symmetric eigendecomposition (LAPACK ``syevd``)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericalError


@dataclass
class SpectrumResult:
    """Ascending eigenvalues, optionally with eigenvectors (as columns)."""

    eigenvalues: np.ndarray
    vectors: np.ndarray | None = None
    n_expect: np.ndarray | None = None

    def __len__(self) -> int:
        return self.eigenvalues.size


def eig_symmetric(h: np.ndarray, want_vectors: bool = False) -> SpectrumResult:
    """Diagonalize a dense real symmetric matrix.

    Only the lower triangle is read.  Raises ``ValueError`` for non-finite
    or non-square input and :class:`NumericalError` if LAPACK fails.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("matrix has non-finite entries")
    try:
        if want_vectors:
            w, v = scipy.linalg.eigh(h, lower=True, driver="evd", check_finite=False)
            return SpectrumResult(w, v)
        w = scipy.linalg.eigh(h, lower=True, eigvals_only=True, driver="evd", check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure is hard to provoke
        raise NumericalError(str(exc)) from exc
    return SpectrumResult(w)


def number_expectations(result: SpectrumResult, labels: np.ndarray) -> np.ndarray:
    """``<n_total>`` of each eigenvector given the total occupation of each basis state."""
    if result.vectors is None:
        raise ValueError("eigenvectors were not computed")
    labels = np.asarray(labels, dtype=float)
    out = labels @ (result.vectors ** 2)
    result.n_expect = out
    return out
