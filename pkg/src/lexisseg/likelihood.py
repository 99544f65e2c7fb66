"""Penalized Poisson likelihood on the log-hazard grid.

The hazard surface is piecewise constant over the J x K age-cohort grid and
parametrized by eta = log(lambda), which keeps positivity for free. The
negative log-likelihood is a sum of per-cell terms exp(eta)*R - O*eta, so a
cell with no exposure and no events contributes exactly zero. The quadratic
penalty weights squared differences of eta between grid-adjacent cells, with
no penalty across the outer boundary.

Design notes
------------
- Vectorization order: grids are flattened with the *shorter* axis varying
  fastest, so short-axis couplings sit at offset 1 and long-axis couplings at
  offset min(J, K). The resulting Hessian bandwidth min(J, K) is what makes
  the banded Newton step linear in the grid size. ``grid_ravel_order`` is the
  single source of truth; gradient vectors and Hessian bands both use it.
- Cells with zero exposure have a zero likelihood term; with a positive
  penalty their eta is determined by smoothing alone (deliberate infill).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .banded import BandedSymMatrix
from .data import ExhaustiveStats, GridSpec

__all__ = [
    "LogHazardGrid",
    "PenaltyWeights",
    "HazardEstimate",
    "neg_log_likelihood",
    "mle",
    "penalized_nll",
    "gradient",
    "hessian",
    "grid_ravel_order",
    "flatten_grid",
    "unflatten_grid",
]


@dataclass(frozen=True)
class LogHazardGrid:
    """The J x K log-hazard parameter grid; always finite inside solvers."""

    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("log-hazard values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def hazard(self) -> np.ndarray:
        return np.exp(self.values)


@dataclass(frozen=True)
class PenaltyWeights:
    """Difference-penalty weights: v couples cohort-adjacent cells ((J-1) x K),
    w couples age-adjacent cells (J x (K-1)). All entries strictly positive."""

    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.float64)
        w = np.asarray(self.w, dtype=np.float64)
        if v.ndim != 2 or w.ndim != 2:
            raise ValueError("weights must be 2-d grids")
        if v.shape[0] + 1 != w.shape[0] or w.shape[1] + 1 != v.shape[1]:
            raise ValueError(
                f"inconsistent weight shapes v{v.shape}, w{w.shape}: "
                "expected (J-1, K) and (J, K-1)"
            )
        if (v.size and (not np.all(np.isfinite(v)) or np.any(v <= 0))) or (
            w.size and (not np.all(np.isfinite(w)) or np.any(w <= 0))
        ):
            raise ValueError("weights must be strictly positive and finite")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @classmethod
    def unit(cls, n_cohort: int, n_age: int) -> "PenaltyWeights":
        return cls(np.ones((n_cohort - 1, n_age)), np.ones((n_cohort, n_age - 1)))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.w.shape[0], self.v.shape[1])


@dataclass(frozen=True)
class HazardEstimate:
    """Closed-form hazard estimate with degenerate cells flagged.

    ``no_data`` marks cells without exposure (no finite estimate exists
    there; the hazard is reported as 0 when the cell also has no events and
    +inf in the pathological event-without-exposure corner). ``zero_hazard``
    marks cells with exposure but no events, whose estimate is exactly 0
    (log-hazard -inf).
    """

    hazard: np.ndarray
    no_data: np.ndarray
    zero_hazard: np.ndarray
    grid: GridSpec

    def log_hazard(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.hazard)


# ---------------------------------------------------------------------------
# flattening order
# ---------------------------------------------------------------------------


def grid_ravel_order(n_cohort: int, n_age: int) -> str:
    """'C' when the age axis is the shorter one (it then varies fastest)."""
    return "C" if n_age <= n_cohort else "F"


def flatten_grid(arr: np.ndarray) -> np.ndarray:
    return arr.ravel(order=grid_ravel_order(*arr.shape))


def unflatten_grid(vec: np.ndarray, n_cohort: int, n_age: int) -> np.ndarray:
    return np.asarray(vec).reshape((n_cohort, n_age), order=grid_ravel_order(n_cohort, n_age))


# ---------------------------------------------------------------------------
# array-level kernels (shared with the solver)
# ---------------------------------------------------------------------------


def _nll_arrays(eta: np.ndarray, events: np.ndarray, exposure: np.ndarray) -> float:
    return float(np.sum(np.exp(eta) * exposure - events * eta))


def _penalty_arrays(eta, v, w, kappa) -> float:
    total = 0.0
    if v.size:
        dv = eta[1:, :] - eta[:-1, :]
        total += float(np.sum(v * dv * dv))
    if w.size:
        dw = eta[:, 1:] - eta[:, :-1]
        total += float(np.sum(w * dw * dw))
    return 0.5 * kappa * total


def _gradient_arrays(eta, v, w, kappa, events, exposure) -> np.ndarray:
    g = np.exp(eta) * exposure - events
    if kappa > 0:
        if v.size:
            t = kappa * v * (eta[1:, :] - eta[:-1, :])
            g[:-1, :] -= t
            g[1:, :] += t
        if w.size:
            t = kappa * w * (eta[:, 1:] - eta[:, :-1])
            g[:, :-1] -= t
            g[:, 1:] += t
    return g


def _hessian_banded(eta, v, w, kappa, exposure) -> BandedSymMatrix:
    J, K = eta.shape
    n = J * K
    diag = np.exp(eta) * exposure
    if kappa > 0:
        pad = np.zeros((J, K))
        if v.size:
            pad[:-1, :] += v
            pad[1:, :] += v
        if w.size:
            pad[:, :-1] += w
            pad[:, 1:] += w
        diag = diag + kappa * pad

    # canonical orientation: shorter axis fastest (becomes the column axis)
    if K <= J:
        d2, slow_w, fast_w = diag, v, w
    else:
        d2, slow_w, fast_w = diag.T, w.T, v.T
    S, F = d2.shape

    bw = min(F, n - 1)
    bands = np.zeros((bw + 1, n))
    bands[0] = d2.ravel()
    if F >= 2 and fast_w.size:
        b1 = np.zeros((S, F))
        b1[:, : F - 1] = -kappa * fast_w
        bands[1, : n - 1] = b1.ravel()[: n - 1]
    if S >= 2 and slow_w.size and F <= bw:
        bands[F, : n - F] = (-kappa * slow_w).ravel()
    return BandedSymMatrix(dimension=n, bandwidth=bw, bands=bands)


def _check_shapes(eta: LogHazardGrid, stats: ExhaustiveStats):
    if eta.values.shape != stats.grid.shape:
        raise ValueError(
            f"log-hazard shape {eta.values.shape} does not match "
            f"stats grid {stats.grid.shape}"
        )


def _check_weights(weights: PenaltyWeights, shape):
    if weights.shape != shape:
        raise ValueError(
            f"weights for grid {weights.shape} do not match {shape}"
        )


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def neg_log_likelihood(eta: LogHazardGrid, stats: ExhaustiveStats) -> float:
    """Sum over cells of exp(eta)*R - O*eta (0 for cells with no data)."""
    _check_shapes(eta, stats)
    return _nll_arrays(eta.values, stats.events, stats.exposure)


def mle(stats: ExhaustiveStats) -> HazardEstimate:
    """Closed-form unpenalized maximum likelihood estimate O/R per cell."""
    events, exposure = stats.events, stats.exposure
    no_data = exposure == 0
    zero_hazard = (~no_data) & (events == 0)
    hazard = np.zeros_like(exposure)
    with np.errstate(divide="ignore", invalid="ignore"):
        np.divide(events, exposure, out=hazard, where=~no_data)
    hazard[no_data & (events > 0)] = np.inf
    return HazardEstimate(
        hazard=hazard, no_data=no_data, zero_hazard=zero_hazard, grid=stats.grid
    )


def penalized_nll(
    eta: LogHazardGrid, weights: PenaltyWeights, kappa: float, stats: ExhaustiveStats
) -> float:
    """neg_log_likelihood plus (kappa/2) * weighted squared differences."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    _check_shapes(eta, stats)
    _check_weights(weights, stats.grid.shape)
    return _nll_arrays(eta.values, stats.events, stats.exposure) + _penalty_arrays(
        eta.values, weights.v, weights.w, kappa
    )


def gradient(
    eta: LogHazardGrid, weights: PenaltyWeights, kappa: float, stats: ExhaustiveStats
) -> np.ndarray:
    """Gradient of the penalized objective, flattened in solver order."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    _check_shapes(eta, stats)
    _check_weights(weights, stats.grid.shape)
    g = _gradient_arrays(eta.values, weights.v, weights.w, kappa, stats.events, stats.exposure)
    return flatten_grid(g)


def hessian(
    eta: LogHazardGrid, weights: PenaltyWeights, kappa: float, stats: ExhaustiveStats
) -> BandedSymMatrix:
    """Banded Hessian of the penalized objective in solver order.

    Diagonal: exp(eta)*R plus kappa times the sum of incident weights;
    off-diagonals: -kappa*v / -kappa*w on grid-adjacent pairs. Bandwidth is
    min(J, K) by the flattening-order choice.
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    _check_shapes(eta, stats)
    _check_weights(weights, stats.grid.shape)
    return _hessian_banded(eta.values, weights.v, weights.w, kappa, stats.exposure)
