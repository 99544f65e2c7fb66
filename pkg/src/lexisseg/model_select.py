"""Model scoring (AIC / BIC / EBIC) and cross-validated penalty selection.

Information criteria score a segmentation through its refit (unpenalized
per-area) rates: twice the negative log-likelihood plus a complexity penalty
in the number of areas q. They need no individual-level data, so they work
on register input too; the sample size n is the number of individuals when
known and falls back to the total event count for register data (documented,
since it changes the BIC/EBIC penalty).

Cross-validation needs individual records: they are split into L folds, the
model is fit on each complement, and each fold is scored by its unpenalized
negative log-likelihood at the fitted log-hazard. The *penalized* log-hazard
is used for scoring (not per-area refits): it is defined on every cell, so
cells that are empty in training but populated in the held-out fold are
scored with the penalty-infilled value instead of an infinite surprise.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import inf, lgamma, log

import numpy as np

from .aridge import AridgeConfig, Segmentation, adaptive_ridge
from .data import ExhaustiveStats, GridSpec, IndividualRecord, tabulate
from .likelihood import LogHazardGrid, neg_log_likelihood
from .solver import NewtonConfig, ridge_fit

__all__ = [
    "PenaltyPath",
    "CvConfig",
    "segmentation_nll",
    "aic",
    "bic",
    "ebic",
    "fold_assignment",
    "cross_validate",
    "select",
    "default_kappa_grid",
]

_CV_NEEDS_RECORDS = "CV requires individual-level records; use AIC/BIC/EBIC"
_IC_NEEDS_L0 = "information criteria require the segmentation penalty; use CV"


@dataclass(frozen=True)
class PenaltyPath:
    """Per-kappa fits and scores along an increasing penalty grid."""

    kappas: tuple[float, ...]
    fits: tuple
    scores: tuple[dict, ...]

    def __post_init__(self):
        if len(self.kappas) == 0:
            raise ValueError("a penalty path needs at least one kappa")
        if any(b <= a for a, b in zip(self.kappas, self.kappas[1:])):
            raise ValueError("kappas must be strictly increasing")
        if len(self.fits) != len(self.kappas) or len(self.scores) != len(self.kappas):
            raise ValueError("one fit and one score map per kappa")


@dataclass(frozen=True)
class CvConfig:
    """Fold count and deterministic assignment for cross-validation.

    When ``assignment`` is given it maps each record to a fold id in
    [0, folds); otherwise records are permuted by ``seed`` and chunked into
    ``folds`` near-equal parts.
    """

    folds: int = 10
    seed: int = 0
    assignment: np.ndarray | None = None

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("cross-validation needs at least 2 folds")


def default_kappa_grid(
    low: float = 1e-3, high: float = 1e4, count: int = 30
) -> np.ndarray:
    """Log-spaced penalty grid; the default spans 1e-3 .. 1e4 in 30 points."""
    if not 0 < low < high or count < 1:
        raise ValueError("need 0 < low < high and count >= 1")
    return np.logspace(np.log10(low), np.log10(high), count)


def _sample_size(stats: ExhaustiveStats) -> float:
    """n for BIC/EBIC: individuals when known, else total events (register)."""
    n = stats.n_individuals if stats.n_individuals is not None else stats.total_events
    if n <= 0:
        raise ValueError("sample size is zero; criteria are undefined")
    return float(n)


def segmentation_nll(seg: Segmentation) -> float:
    """Negative log-likelihood at the per-area refit rates.

    Per area: hazard*R - O*ln(hazard), with the 0*ln(0) = 0 convention for
    zero-hazard areas (O = 0 there by construction). An area carrying events
    against zero exposure has no finite likelihood and scores +inf.
    """
    hazards = seg.area_hazards
    events = seg.area_events
    exposure = seg.area_exposure
    if np.any((exposure == 0) & (events > 0)):
        return inf
    with np.errstate(divide="ignore", invalid="ignore"):
        rate_term = np.where(exposure > 0, hazards * exposure, 0.0)
        event_term = np.where(events > 0, events * np.log(hazards), 0.0)
    return float(np.sum(rate_term - event_term))


def aic(seg: Segmentation, stats: ExhaustiveStats) -> float:
    """2*nll(refit) + 2*q."""
    return 2.0 * segmentation_nll(seg) + 2.0 * seg.q


def bic(seg: Segmentation, stats: ExhaustiveStats) -> float:
    """2*nll(refit) + q*ln(n)."""
    return 2.0 * segmentation_nll(seg) + seg.q * log(_sample_size(stats))


def _log_binomial(n_cells: int, q: int) -> float:
    return lgamma(n_cells + 1) - lgamma(q + 1) - lgamma(n_cells - q + 1)


def ebic(seg: Segmentation, stats: ExhaustiveStats) -> float:
    """bic + 2*ln C(JK, q): a uniform prior over models of equal dimension."""
    n_cells = seg.labels.size
    if seg.q > n_cells:
        raise ValueError(f"q = {seg.q} exceeds the number of cells {n_cells}")
    return bic(seg, stats) + 2.0 * _log_binomial(n_cells, seg.q)


def fold_assignment(n_records: int, cv: CvConfig) -> np.ndarray:
    """Deterministic per-record fold ids in [0, folds)."""
    if cv.assignment is not None:
        assignment = np.asarray(cv.assignment, dtype=np.int64)
        if assignment.shape != (n_records,):
            raise ValueError("assignment must give one fold id per record")
        if assignment.min(initial=0) < 0 or assignment.max(initial=0) >= cv.folds:
            raise ValueError("fold ids must lie in [0, folds)")
        return assignment
    if cv.folds > n_records:
        raise ValueError("more folds than records")
    permutation = np.random.default_rng(cv.seed).permutation(n_records)
    assignment = np.empty(n_records, dtype=np.int64)
    for fold_id, chunk in enumerate(np.array_split(permutation, cv.folds)):
        assignment[chunk] = fold_id
    return assignment


def _penalized_eta(
    stats: ExhaustiveStats,
    kappa: float,
    mode: str,
    newton: NewtonConfig | None,
    aridge_config: AridgeConfig | None,
) -> LogHazardGrid:
    if mode == "l2":
        return ridge_fit(stats, kappa, newton).eta
    _, trace = adaptive_ridge(stats, kappa, aridge_config)
    return trace[-1].eta


def cross_validate(
    records,
    grid: GridSpec,
    kappas,
    mode: str = "l2",
    cv: CvConfig | None = None,
    newton: NewtonConfig | None = None,
    aridge_config: AridgeConfig | None = None,
) -> np.ndarray:
    """Summed held-out negative log-likelihood per kappa.

    For each fold: tabulate the complement, fit at kappa, tabulate the fold
    and evaluate its unpenalized negative log-likelihood at the fitted
    (penalized) log-hazard; sum over folds.
    """
    if records is None:
        raise ValueError(_CV_NEEDS_RECORDS)
    records = list(records)
    if mode not in ("l0", "l2"):
        raise ValueError(f"unknown mode: {mode!r}")
    cv = cv or CvConfig()
    assignment = fold_assignment(len(records), cv)
    if cv.folds > len(records):
        raise ValueError("more folds than records")
    kappas = [float(k) for k in kappas]
    scores = np.zeros(len(kappas))
    for fold_id in range(cv.folds):
        held_out = assignment == fold_id
        train = [r for r, out in zip(records, held_out) if not out]
        test = [r for r, out in zip(records, held_out) if out]
        if not test:
            continue
        train_stats = tabulate(train, grid)
        test_stats = tabulate(test, grid)
        for i, kappa in enumerate(kappas):
            eta = _penalized_eta(train_stats, kappa, mode, newton, aridge_config)
            scores[i] += neg_log_likelihood(eta, test_stats)
    return scores


def select(
    data,
    kappas,
    mode: str = "l0",
    criterion: str = "ebic",
    grid: GridSpec | None = None,
    cv: CvConfig | None = None,
    newton: NewtonConfig | None = None,
    aridge_config: AridgeConfig | None = None,
):
    """Fit every kappa, score by the criterion, return the best model.

    ``data`` is either an ``ExhaustiveStats`` (register workflows) or a
    sequence of ``IndividualRecord`` with an accompanying ``grid``. Returns
    ``(best_kappa, best_fit, path)`` where the fit is a ``Segmentation`` in
    l0 mode and a ``LogHazardGrid`` in l2 mode. Score ties break toward the
    larger kappa (the sparser model).
    """
    kappa_array = np.unique(np.asarray(list(kappas), dtype=np.float64))
    if kappa_array.size == 0:
        raise ValueError("at least one kappa is required")
    if np.any(kappa_array < 0) or not np.all(np.isfinite(kappa_array)):
        raise ValueError("kappas must be finite and >= 0")
    if mode not in ("l0", "l2"):
        raise ValueError(f"unknown mode: {mode!r}")
    if criterion not in ("aic", "bic", "ebic", "cv"):
        raise ValueError(f"unknown criterion: {criterion!r}")
    if mode == "l0" and np.any(kappa_array == 0):
        raise ValueError("l0 mode requires kappa > 0")
    if mode == "l2" and criterion != "cv":
        raise ValueError(_IC_NEEDS_L0)

    if isinstance(data, ExhaustiveStats):
        records, stats = None, data
    else:
        records = list(data)
        if grid is None:
            raise ValueError("records input requires a grid")
        if records and not isinstance(records[0], IndividualRecord):
            raise TypeError("data must be ExhaustiveStats or IndividualRecord list")
        stats = tabulate(records, grid)
    if criterion == "cv" and records is None:
        raise ValueError(_CV_NEEDS_RECORDS)

    fits = []
    scores: list[dict] = []
    for kappa in kappa_array:
        if mode == "l0":
            seg, _ = adaptive_ridge(stats, float(kappa), aridge_config)
            fits.append(seg)
            scores.append(
                {
                    "aic": aic(seg, stats),
                    "bic": bic(seg, stats),
                    "ebic": ebic(seg, stats),
                }
            )
        else:
            fits.append(ridge_fit(stats, float(kappa), newton).eta)
            scores.append({})

    if criterion == "cv":
        cv_scores = cross_validate(
            records, stats.grid, kappa_array, mode, cv, newton, aridge_config
        )
        for entry, score in zip(scores, cv_scores):
            entry["cv"] = float(score)

    best_index = 0
    best_score = scores[0][criterion]
    for i in range(1, len(scores)):
        if scores[i][criterion] <= best_score:
            best_index, best_score = i, scores[i][criterion]

    path = PenaltyPath(
        kappas=tuple(float(k) for k in kappa_array),
        fits=tuple(fits),
        scores=tuple(scores),
    )
    return float(kappa_array[best_index]), fits[best_index], path
