"""Adaptive-ridge segmentation of the hazard grid into constant areas.

Alternates penalized Newton fits with inverse-squared-difference weight
updates. At convergence each weighted squared difference d^2/(d^2 + eps^2)
sits near 0 (neighbors fused) or near 1 (neighbors split), so thresholding
them yields a graph on the grid cells whose connected components (under
4-adjacency) are areas of constant hazard. Each area is then refit by its
own unpenalized maximum-likelihood rate, which removes the shrinkage the
penalty would otherwise leave behind.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import ExhaustiveStats
from .likelihood import LogHazardGrid, PenaltyWeights
from .solver import FitResult, NewtonConfig, newton_raphson

__all__ = [
    "AridgeConfig",
    "Segmentation",
    "update_weights",
    "adaptive_ridge",
    "extract_components",
    "refit_areas",
]


@dataclass(frozen=True)
class AridgeConfig:
    """Knobs for the outer reweighting loop and the component threshold."""

    epsilon_v: float = 1e-5
    epsilon_w: float = 1e-5
    outer_tol: float = 1e-8
    outer_max_iter: int = 1000
    edge_threshold: float = 1e-2
    newton: NewtonConfig = field(default_factory=NewtonConfig)

    def __post_init__(self):
        if self.epsilon_v <= 0 or self.epsilon_w <= 0:
            raise ValueError("epsilons must be > 0")
        if not 0.0 < self.edge_threshold < 1.0:
            raise ValueError("edge_threshold must lie in (0, 1)")
        if self.outer_tol <= 0 or self.outer_max_iter < 1:
            raise ValueError("outer_tol must be > 0 and outer_max_iter >= 1")


@dataclass(frozen=True)
class Segmentation:
    """A partition of the grid into constant-hazard areas with refit rates.

    ``labels`` hold contiguous area ids 1..q assigned in row-major
    first-visit order; per-area arrays are indexed by ``id - 1``. Areas
    without exposure are flagged ``no_data`` (their rate is 0, or infinite
    in the pathological case of events recorded against zero exposure);
    areas with exposure but no events are flagged ``zero_hazard``.
    """

    labels: np.ndarray
    q: int
    area_hazards: np.ndarray
    area_events: np.ndarray
    area_exposure: np.ndarray
    kappa: float
    converged: bool = True
    no_data: np.ndarray = field(default=None, repr=False)
    zero_hazard: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValueError("labels must be integers")
        distinct = np.unique(labels)
        if distinct.size != self.q or not np.array_equal(
            distinct, np.arange(1, self.q + 1)
        ):
            raise ValueError("labels must use the contiguous ids 1..q")
        for name in ("area_hazards", "area_events", "area_exposure"):
            if np.asarray(getattr(self, name)).shape != (self.q,):
                raise ValueError(f"{name} must have one entry per area")

    @property
    def area_sizes(self) -> np.ndarray:
        """Number of cells in each area, indexed by id - 1."""
        return np.bincount(self.labels.ravel() - 1, minlength=self.q)

    def hazard_grid(self) -> np.ndarray:
        """Per-cell hazard: each cell carries its area's refit rate."""
        return self.area_hazards[self.labels - 1]

    def log_hazard_grid(self) -> np.ndarray:
        """Per-cell log hazard (-inf over zero-rate areas)."""
        with np.errstate(divide="ignore"):
            return np.log(self.hazard_grid())


def update_weights(eta: LogHazardGrid, config: AridgeConfig | None = None) -> PenaltyWeights:
    """Inverse-squared-difference weights: 1 / ((delta eta)^2 + epsilon^2)."""
    config = config or AridgeConfig()
    values = eta.values
    dv = np.diff(values, axis=0)
    dw = np.diff(values, axis=1)
    return PenaltyWeights(
        v=1.0 / (dv**2 + config.epsilon_v**2),
        w=1.0 / (dw**2 + config.epsilon_w**2),
    )


def _weighted_square_diffs(values: np.ndarray, weights: PenaltyWeights):
    sv = weights.v * np.diff(values, axis=0) ** 2
    sw = weights.w * np.diff(values, axis=1) ** 2
    return sv, sw


def _find(parent: np.ndarray, i: int) -> int:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def extract_components(
    eta: LogHazardGrid,
    weights: PenaltyWeights,
    config: AridgeConfig | None = None,
) -> np.ndarray:
    """Label connected constant areas of the grid.

    4-adjacent cells are connected when their weighted squared difference
    falls below ``edge_threshold``; components receive consecutive ids
    1..q in row-major first-visit order.
    """
    config = config or AridgeConfig()
    values = eta.values
    n_cohort, n_age = values.shape
    if weights.shape != values.shape:
        raise ValueError(
            f"weights for grid {weights.shape} do not match {values.shape}"
        )
    threshold = config.edge_threshold
    sv, sw = _weighted_square_diffs(values, weights)

    parent = np.arange(n_cohort * n_age)

    def union(a: int, b: int):
        ra, rb = _find(parent, a), _find(parent, b)
        if ra != rb:
            parent[rb] = ra

    for j in range(n_cohort - 1):
        for k in range(n_age):
            if sv[j, k] < threshold:
                union(j * n_age + k, (j + 1) * n_age + k)
    for j in range(n_cohort):
        for k in range(n_age - 1):
            if sw[j, k] < threshold:
                union(j * n_age + k, j * n_age + k + 1)

    labels = np.empty((n_cohort, n_age), dtype=np.int64)
    first_seen: dict[int, int] = {}
    for j in range(n_cohort):
        for k in range(n_age):
            root = _find(parent, j * n_age + k)
            if root not in first_seen:
                first_seen[root] = len(first_seen) + 1
            labels[j, k] = first_seen[root]
    return labels


def refit_areas(
    labels: np.ndarray,
    stats: ExhaustiveStats,
    kappa: float = float("nan"),
    converged: bool = True,
) -> Segmentation:
    """Refit each labeled area by its pooled unpenalized rate O/R."""
    labels = np.asarray(labels)
    if labels.shape != stats.grid.shape:
        raise ValueError(
            f"labels of shape {labels.shape} do not match grid {stats.grid.shape}"
        )
    q = int(labels.max(initial=0))
    flat = labels.ravel() - 1
    area_events = np.bincount(flat, weights=stats.events.ravel(), minlength=q)
    area_exposure = np.bincount(flat, weights=stats.exposure.ravel(), minlength=q)
    no_data = area_exposure == 0
    zero_hazard = (area_events == 0) & ~no_data
    with np.errstate(divide="ignore", invalid="ignore"):
        hazards = area_events / area_exposure
    hazards[no_data] = np.where(area_events[no_data] > 0, np.inf, 0.0)
    return Segmentation(
        labels=labels,
        q=q,
        area_hazards=hazards,
        area_events=area_events,
        area_exposure=area_exposure,
        kappa=float(kappa),
        converged=converged,
        no_data=no_data,
        zero_hazard=zero_hazard,
    )


def adaptive_ridge(
    stats: ExhaustiveStats,
    kappa: float,
    config: AridgeConfig | None = None,
) -> tuple[Segmentation, tuple[FitResult, ...]]:
    """Run the full reweighting loop and return the refit segmentation.

    Starts from eta = 0 with unit weights; each outer iteration runs one
    Newton fit (warm-started from the previous iterate) and recomputes the
    weights. Stops when no weighted squared difference moved by more than
    ``outer_tol``, or after ``outer_max_iter`` iterations (the result is
    then flagged not converged).
    """
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    config = config or AridgeConfig()
    n_cohort, n_age = stats.grid.shape
    weights = PenaltyWeights.unit(n_cohort, n_age)
    prev_sv = np.zeros((n_cohort - 1, n_age))
    prev_sw = np.zeros((n_cohort, n_age - 1))
    eta0 = None
    trace: list[FitResult] = []
    converged = False
    fit = None
    for _ in range(config.outer_max_iter):
        fit = newton_raphson(stats, kappa, weights, config.newton, eta0=eta0)
        trace.append(fit)
        eta0 = fit.eta.values
        weights = update_weights(fit.eta, config)
        sv, sw = _weighted_square_diffs(fit.eta.values, weights)
        delta = 0.0
        if sv.size:
            delta = float(np.max(np.abs(sv - prev_sv)))
        if sw.size:
            delta = max(delta, float(np.max(np.abs(sw - prev_sw))))
        prev_sv, prev_sw = sv, sw
        if delta < config.outer_tol:
            converged = True
            break
    labels = extract_components(fit.eta, weights, config)
    segmentation = refit_areas(labels, stats, kappa=kappa, converged=converged)
    return segmentation, tuple(trace)
