"""Symmetric positive-definite banded systems: LDL^T factorization and solve.

This is the inner kernel of every Newton step. Matrices are stored by lower
diagonal: ``bands[d, i]`` holds entry ``(i + d, i)`` of the full matrix, row 0
being the main diagonal. LDL^T is used instead of LL^T to avoid square roots
and to give a clean pivot test; there is no pivoting (it would destroy the
band), so inputs that are not positive definite raise
:class:`NotPositiveDefiniteError` with the offending index.

Factorization costs O(n * bandwidth^2) and the triangular solves O(n *
bandwidth), which is what makes the grid Newton iteration linear in the grid
size for a fixed shorter axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import njit

__all__ = [
    "BandedSymMatrix",
    "BandCholeskyFactor",
    "NotPositiveDefiniteError",
    "factor",
    "solve",
]


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """A pivot of the LDL^T factorization was zero, negative, or below floor."""

    def __init__(self, index: int):
        self.index = int(index)
        super().__init__(f"not positive definite at index {self.index}")


@dataclass(frozen=True)
class BandedSymMatrix:
    """Symmetric banded matrix; only the lower bands are stored.

    Parameters
    ----------
    dimension : int
        Order n of the matrix.
    bandwidth : int
        Number of stored sub-diagonals (0 for a diagonal matrix).
    bands : ndarray, shape (bandwidth + 1, dimension)
        ``bands[d, i]`` is entry (i + d, i). For d >= 1 the trailing d slots
        ``bands[d, dimension - d:]`` are padding and must be zero.
    """

    dimension: int
    bandwidth: int
    bands: np.ndarray

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if not 0 <= self.bandwidth <= self.dimension - 1:
            raise ValueError("bandwidth must lie in [0, dimension - 1]")
        if self.bands.shape != (self.bandwidth + 1, self.dimension):
            raise ValueError(
                f"bands shape {self.bands.shape} does not match "
                f"(bandwidth + 1, dimension) = {(self.bandwidth + 1, self.dimension)}"
            )

    def to_dense(self) -> np.ndarray:
        """Reconstruct the full symmetric matrix (for small-scale checks)."""
        n = self.dimension
        a = np.zeros((n, n))
        for d in range(self.bandwidth + 1):
            idx = np.arange(n - d)
            a[idx + d, idx] = self.bands[d, : n - d]
            if d > 0:
                a[idx, idx + d] = self.bands[d, : n - d]
        return a

    def add_diagonal(self, shift: float) -> "BandedSymMatrix":
        """Return a copy with ``shift`` added to the main diagonal."""
        bands = self.bands.copy()
        bands[0] += shift
        return BandedSymMatrix(self.dimension, self.bandwidth, bands)


@dataclass(frozen=True)
class BandCholeskyFactor:
    """LDL^T factor in band storage: row 0 holds D, rows >= 1 the unit-lower L."""

    dimension: int
    bandwidth: int
    bands: np.ndarray


@njit(cache=True)
def _ldlt_band(bands, ridge_floor):
    """In-place banded LDL^T; returns -1 on success, else the failing index."""
    nrows, n = bands.shape
    bw = nrows - 1
    max_diag = 0.0
    for i in range(n):
        if bands[0, i] > max_diag:
            max_diag = bands[0, i]
    floor = ridge_floor * max_diag
    for j in range(n):
        d = bands[0, j]
        if d <= 0.0 or d < floor:
            return j
        m = n - 1 - j
        if m > bw:
            m = bw
        for r in range(1, m + 1):
            bands[r, j] /= d
        for c in range(1, m + 1):
            dl = d * bands[c, j]
            if dl != 0.0:
                for r in range(c, m + 1):
                    bands[r - c, j + c] -= bands[r, j] * dl
    return -1


@njit(cache=True)
def _band_solve(bands, x):
    """Solve L D L^T x = b in place, given the factored bands."""
    nrows, n = bands.shape
    bw = nrows - 1
    for j in range(n):  # forward: L y = b
        m = n - 1 - j
        if m > bw:
            m = bw
        xj = x[j]
        if xj != 0.0:
            for r in range(1, m + 1):
                x[j + r] -= bands[r, j] * xj
    for j in range(n):  # diagonal: D z = y
        x[j] /= bands[0, j]
    for j in range(n - 1, -1, -1):  # backward: L^T x = z
        m = n - 1 - j
        if m > bw:
            m = bw
        acc = x[j]
        for r in range(1, m + 1):
            acc -= bands[r, j] * x[j + r]
        x[j] = acc


def factor(m: BandedSymMatrix, ridge_floor: float = 0.0) -> BandCholeskyFactor:
    """Factor a banded SPD matrix as L D L^T within the band.

    A pivot that is non-positive, or smaller than ``ridge_floor`` times the
    largest diagonal entry of the input, aborts with
    :class:`NotPositiveDefiniteError` naming the pivot index; the caller may
    retry after a diagonal shift.
    """
    if ridge_floor < 0:
        raise ValueError("ridge_floor must be >= 0")
    work = np.array(m.bands, dtype=np.float64, order="C", copy=True)
    bad = _ldlt_band(work, float(ridge_floor))
    if bad >= 0:
        raise NotPositiveDefiniteError(bad)
    return BandCholeskyFactor(m.dimension, m.bandwidth, work)


def solve(f: BandCholeskyFactor, rhs: np.ndarray) -> np.ndarray:
    """Solve M x = rhs given the LDL^T factor of M."""
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape != (f.dimension,):
        raise ValueError(
            f"rhs has shape {rhs.shape}, expected ({f.dimension},)"
        )
    x = rhs.copy()
    _band_solve(f.bands, x)
    return x
