"""Newton-Raphson minimization of the penalized objective at fixed weights.

Full Newton steps with the banded Hessian, plus a backtracking halving line
search so that the objective never increases: eta = 0 can start far from the
optimum, where the raw update may overshoot into exp overflow. The full step
is always tried first, so near the optimum the iteration is the plain Newton
update and converges quadratically.

Convergence is declared on the infinity norm of the gradient (the step norm
is not parametrization-meaningful here). Log-hazards are clamped to
[-eta_clamp, eta_clamp] inside the iteration; a clamp event is recorded.

At kappa = 0 cells without exposure are frozen at eta = 0 and excluded from
the gradient test: with no events their objective term is constant, and with
(pathological) boundary events it has no finite minimizer, so freezing keeps
the problem well-posed either way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .banded import BandedSymMatrix, NotPositiveDefiniteError, factor, solve
from .data import ExhaustiveStats
from .likelihood import (
    LogHazardGrid,
    PenaltyWeights,
    _gradient_arrays,
    _hessian_banded,
    _nll_arrays,
    _penalty_arrays,
    flatten_grid,
    unflatten_grid,
)

__all__ = ["NewtonConfig", "FitResult", "newton_raphson", "ridge_fit"]


class HessianFactorizationError(np.linalg.LinAlgError):
    """Factorization kept failing after the full diagonal-shift escalation."""


@dataclass(frozen=True)
class NewtonConfig:
    """Stopping and safeguarding knobs for the Newton iteration."""

    max_iter: int = 100
    grad_tol: float = 1e-8
    step_halvings_max: int = 20
    pd_shift: float = 1e-10
    eta_clamp: float = 40.0

    def __post_init__(self):
        if self.max_iter < 1 or self.step_halvings_max < 0:
            raise ValueError("iteration counts must be positive")
        if self.grad_tol <= 0 or self.pd_shift <= 0 or self.eta_clamp <= 0:
            raise ValueError("tolerances must be > 0")


@dataclass(frozen=True)
class FitResult:
    """Outcome of one penalized fit."""

    eta: LogHazardGrid
    iterations: int
    final_grad_norm: float
    objective: float
    converged: bool
    kappa: float
    clamped: bool = False
    objective_trace: tuple[float, ...] = field(default_factory=tuple, repr=False)
    grad_norm_trace: tuple[float, ...] = field(default_factory=tuple, repr=False)


def _solve_with_shift(h: BandedSymMatrix, rhs: np.ndarray, config: NewtonConfig):
    """Solve h x = rhs, escalating a relative diagonal shift on failure."""
    try:
        return solve(factor(h), rhs)
    except NotPositiveDefiniteError:
        pass
    scale = max(float(np.max(h.bands[0])), 1.0)
    shift = config.pd_shift
    while shift <= 1e-2:
        try:
            return solve(factor(h.add_diagonal(shift * scale)), rhs)
        except NotPositiveDefiniteError:
            shift *= 10.0
    raise HessianFactorizationError("Hessian not positive definite")


def newton_raphson(
    stats: ExhaustiveStats,
    kappa: float,
    weights: PenaltyWeights,
    config: NewtonConfig | None = None,
    eta0: np.ndarray | LogHazardGrid | None = None,
) -> FitResult:
    """Minimize the penalized objective at fixed weights.

    Starts from eta = 0 unless ``eta0`` warm-starts the iteration. Each step
    solves the banded Newton system and backtracks by halving until the
    objective weakly decreases; stops when the gradient infinity norm falls
    to ``grad_tol``, the iteration budget is exhausted, or no step of any
    tried length improves the objective.
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    config = config or NewtonConfig()
    J, K = stats.grid.shape
    events, exposure = stats.events, stats.exposure
    v, w = weights.v, weights.w
    if weights.shape != (J, K):
        raise ValueError(f"weights for grid {weights.shape} do not match {(J, K)}")

    if eta0 is None:
        eta = np.zeros((J, K))
    else:
        values = eta0.values if isinstance(eta0, LogHazardGrid) else np.asarray(eta0)
        eta = np.array(values, dtype=np.float64)
        if eta.shape != (J, K):
            raise ValueError("eta0 shape does not match the grid")

    frozen_flat = None
    if kappa == 0.0:
        frozen = exposure == 0
        if frozen.any():
            frozen_flat = flatten_grid(frozen).copy()
            eta[frozen] = 0.0

    clamp = config.eta_clamp
    clamped = False
    obj = _nll_arrays(eta, events, exposure) + _penalty_arrays(eta, v, w, kappa)
    obj_trace = [obj]
    grad_trace: list[float] = []
    iterations = 0
    converged = False

    while True:
        grad = flatten_grid(
            _gradient_arrays(eta, v, w, kappa, events, exposure)
        ).copy()
        if frozen_flat is not None:
            grad[frozen_flat] = 0.0
        gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
        grad_trace.append(gnorm)
        if gnorm <= config.grad_tol:
            converged = True
            break
        if iterations >= config.max_iter:
            break

        h = _hessian_banded(eta, v, w, kappa, exposure)
        if frozen_flat is not None:
            h.bands[0][frozen_flat] = 1.0
        step = unflatten_grid(_solve_with_shift(h, grad, config), J, K)

        accepted = False
        t = 1.0
        for _ in range(config.step_halvings_max + 1):
            raw = eta - t * step
            trial = np.clip(raw, -clamp, clamp)
            trial_obj = _nll_arrays(trial, events, exposure) + _penalty_arrays(
                trial, v, w, kappa
            )
            if trial_obj <= obj:
                if not np.array_equal(raw, trial):
                    clamped = True
                eta = trial
                obj = trial_obj
                obj_trace.append(obj)
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        iterations += 1

    return FitResult(
        eta=LogHazardGrid(eta, stats.grid),
        iterations=iterations,
        final_grad_norm=grad_trace[-1],
        objective=obj,
        converged=converged,
        kappa=float(kappa),
        clamped=clamped,
        objective_trace=tuple(obj_trace),
        grad_norm_trace=tuple(grad_trace),
    )


def ridge_fit(
    stats: ExhaustiveStats, kappa: float, config: NewtonConfig | None = None,
    eta0: np.ndarray | LogHazardGrid | None = None,
) -> FitResult:
    """Quadratic smoothing fit: Newton-Raphson with unit penalty weights."""
    J, K = stats.grid.shape
    return newton_raphson(stats, kappa, PenaltyWeights.unit(J, K), config, eta0=eta0)
