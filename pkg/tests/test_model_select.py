"""Criteria hand values, cross-validation enumeration, selection behavior."""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from lexisseg.aridge import Segmentation, adaptive_ridge
from lexisseg.data import ExhaustiveStats, GridSpec, IndividualRecord, tabulate
from lexisseg.likelihood import LogHazardGrid, neg_log_likelihood
from lexisseg.model_select import (
    CvConfig,
    PenaltyPath,
    aic,
    bic,
    cross_validate,
    default_kappa_grid,
    ebic,
    fold_assignment,
    segmentation_nll,
    select,
)

from test_aridge import poisson_stats, stats_from_arrays


def single_area_seg(events, exposure, stats):
    labels = np.ones(stats.grid.shape, dtype=np.int64)
    return Segmentation(
        labels=labels,
        q=1,
        area_hazards=np.array([events / exposure if exposure else 0.0]),
        area_events=np.array([float(events)]),
        area_exposure=np.array([float(exposure)]),
        kappa=1.0,
    )


def singleton_seg(stats):
    shape = stats.grid.shape
    labels = np.arange(1, shape[0] * shape[1] + 1, dtype=np.int64).reshape(shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        hazards = np.where(stats.exposure > 0, stats.events / stats.exposure, 0.0)
    return Segmentation(
        labels=labels,
        q=labels.size,
        area_hazards=hazards.ravel(),
        area_events=stats.events.ravel(),
        area_exposure=stats.exposure.ravel(),
        kappa=1.0,
    )


# ---------------------------------------------------------------------------
# information criteria


def test_bic_hand_value_on_1x2_pool():
    stats = ExhaustiveStats(
        grid=GridSpec.uniform((1900.0, 2000.0), (0.0, 100.0), 1, 2),
        events=np.array([[2.0, 2.0]]),
        exposure=np.array([[4.0, 4.0]]),
        n_individuals=4,
    )
    seg = single_area_seg(4.0, 8.0, stats)
    # At the pooled rate 0.5 the rate term equals total events (4), so the
    # refit negative log-likelihood is 4 + 4 ln 2.
    assert segmentation_nll(seg) == pytest.approx(4.0 + 4.0 * math.log(2.0))
    assert bic(seg, stats) == pytest.approx(
        2.0 * (4.0 + 4.0 * math.log(2.0)) + math.log(4.0)
    )


def test_bic_is_one_for_zero_nll_and_n_e():
    stats = ExhaustiveStats(
        grid=GridSpec.uniform((1900.0, 2000.0), (0.0, 100.0), 1, 1),
        events=np.zeros((1, 1)),
        exposure=np.zeros((1, 1)),
        n_individuals=math.e,
    )
    seg = single_area_seg(0.0, 0.0, stats)
    assert segmentation_nll(seg) == 0.0
    assert bic(seg, stats) == pytest.approx(1.0)


def test_bic_prefers_smaller_q_at_equal_nll():
    stats = ExhaustiveStats(
        grid=GridSpec.uniform((1900.0, 2000.0), (0.0, 100.0), 2, 2),
        events=np.full((2, 2), 1.0),
        exposure=np.full((2, 2), 2.0),
        n_individuals=4,
    )
    pooled = single_area_seg(4.0, 8.0, stats)
    split = singleton_seg(stats)
    assert segmentation_nll(pooled) == pytest.approx(segmentation_nll(split))
    assert bic(pooled, stats) < bic(split, stats)


def test_ebic_equals_bic_when_q_is_cell_count():
    rng = np.random.default_rng(3)
    stats = poisson_stats(rng, np.full((2, 2), 0.2), 25.0)
    seg = singleton_seg(stats)
    assert ebic(seg, stats) == pytest.approx(bic(seg, stats))


def test_ebic_additive_term_for_q1_on_20x20():
    stats = ExhaustiveStats(
        grid=GridSpec.uniform((1900.0, 2000.0), (0.0, 100.0), 20, 20),
        events=np.full((20, 20), 1.0),
        exposure=np.full((20, 20), 10.0),
        n_individuals=400,
    )
    seg = single_area_seg(400.0, 4000.0, stats)
    assert ebic(seg, stats) - bic(seg, stats) == pytest.approx(
        2.0 * math.log(400.0), abs=1e-9
    )
    assert ebic(seg, stats) - bic(seg, stats) == pytest.approx(11.983, abs=1e-3)


def test_ebic_never_below_bic():
    rng = np.random.default_rng(7)
    stats = poisson_stats(rng, rng.uniform(0.05, 0.4, (4, 4)), 30.0)
    for kappa in (0.5, 3.0, 50.0):
        seg, _ = adaptive_ridge(stats, kappa)
        assert ebic(seg, stats) >= bic(seg, stats) - 1e-12


def test_ebic_rejects_q_above_cell_count():
    stats = stats_from_arrays([[1.0]], [[2.0]])
    fake = SimpleNamespace(
        labels=np.array([[1]]),
        q=2,
        area_hazards=np.array([0.5, 0.5]),
        area_events=np.array([1.0, 0.0]),
        area_exposure=np.array([2.0, 0.0]),
    )
    with pytest.raises(ValueError, match="exceeds"):
        ebic(fake, stats)


def test_aic_hand_value_and_crossover_with_bic():
    # Three areas, rate exactly 1 in the first: its contribution is R - O*ln 1
    # = 10; the empty areas contribute 0, so the nll is 10 and AIC = 26.
    grid = GridSpec.uniform((1900.0, 2000.0), (0.0, 100.0), 1, 3)
    seg = Segmentation(
        labels=np.array([[1, 2, 3]]),
        q=3,
        area_hazards=np.array([1.0, 0.0, 0.0]),
        area_events=np.array([5.0, 0.0, 0.0]),
        area_exposure=np.array([10.0, 0.0, 0.0]),
        kappa=1.0,
    )
    stats_small = ExhaustiveStats(
        grid=grid,
        events=np.array([[5.0, 0.0, 0.0]]),
        exposure=np.array([[10.0, 0.0, 0.0]]),
        n_individuals=7,
    )
    stats_large = ExhaustiveStats(
        grid=grid,
        events=stats_small.events,
        exposure=stats_small.exposure,
        n_individuals=8,
    )
    assert segmentation_nll(seg) == pytest.approx(10.0)
    assert aic(seg, stats_small) == pytest.approx(26.0)
    assert aic(seg, stats_small) > bic(seg, stats_small)  # n = 7 < 8
    assert aic(seg, stats_large) < bic(seg, stats_large)  # n = 8
    assert bic(seg, stats_small) == pytest.approx(20.0 + 3.0 * math.log(7.0))


def test_nll_is_infinite_for_events_without_exposure():
    seg = Segmentation(
        labels=np.array([[1, 2]]),
        q=2,
        area_hazards=np.array([0.5, np.inf]),
        area_events=np.array([1.0, 2.0]),
        area_exposure=np.array([2.0, 0.0]),
        kappa=1.0,
    )
    assert segmentation_nll(seg) == np.inf


def test_register_data_uses_total_events_as_sample_size():
    grid = GridSpec.uniform((1900.0, 2000.0), (0.0, 100.0), 1, 2)
    register = ExhaustiveStats(
        grid=grid, events=np.array([[2.0, 2.0]]), exposure=np.array([[4.0, 4.0]])
    )
    seg = single_area_seg(4.0, 8.0, register)
    assert register.n_individuals is None
    assert bic(seg, register) == pytest.approx(
        2.0 * segmentation_nll(seg) + math.log(4.0)
    )


# ---------------------------------------------------------------------------
# cross-validation


def records_at(times, cohort=1950.0, event=1):
    return [IndividualRecord(cohort=cohort, time=t, event=event) for t in times]


def test_leave_one_out_matches_hand_enumeration():
    times = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0]
    records = records_at(times)
    grid = GridSpec.uniform((1900.0, 2000.0), (0.0, 100.0), 1, 1)
    cv = CvConfig(folds=6, assignment=np.arange(6))
    scores = cross_validate(records, grid, [0.0], mode="l2", cv=cv)
    total = sum(times)
    expected = sum(
        5.0 * t / (total - t) - math.log(5.0 / (total - t)) for t in times
    )
    assert scores[0] == pytest.approx(expected, abs=1e-8)


def test_identical_folds_score_l_times_one_fold():
    records = records_at([4.0] * 30)
    grid = GridSpec.uniform((1900.0, 2000.0), (0.0, 100.0), 1, 1)
    assignment = np.repeat(np.arange(10), 3)
    scores = cross_validate(
        records, grid, [0.5], mode="l2", cv=CvConfig(folds=10, assignment=assignment)
    )
    # All training sets are identical, so the fit is common; one fold's
    # unpenalized score times L must reproduce the total exactly.
    from lexisseg.solver import ridge_fit

    train_stats = tabulate(records[:27], grid)
    fold_stats = tabulate(records[:3], grid)
    eta = ridge_fit(train_stats, 0.5).eta
    assert scores[0] == pytest.approx(10.0 * neg_log_likelihood(eta, fold_stats))


def test_fold_assignment_is_deterministic_and_balanced():
    cv = CvConfig(folds=10, seed=42)
    a = fold_assignment(105, cv)
    b = fold_assignment(105, cv)
    np.testing.assert_array_equal(a, b)
    counts = np.bincount(a, minlength=10)
    assert counts.min() >= 10 and counts.max() <= 11
    c = fold_assignment(105, CvConfig(folds=10, seed=43))
    assert not np.array_equal(a, c)


def test_cross_validate_error_paths():
    grid = GridSpec.uniform((1900.0, 2000.0), (0.0, 100.0), 1, 1)
    with pytest.raises(ValueError, match="individual-level records"):
        cross_validate(None, grid, [1.0])
    with pytest.raises(ValueError, match="folds"):
        cross_validate(records_at([1.0, 2.0]), grid, [1.0], cv=CvConfig(folds=5))
    with pytest.raises(ValueError, match="mode"):
        cross_validate(records_at([1.0] * 20), grid, [1.0], mode="l1")
    with pytest.raises(ValueError):
        CvConfig(folds=1)


def test_cv_picks_up_l0_mode():
    rng = np.random.default_rng(11)
    grid = GridSpec.uniform((1900.0, 2000.0), (0.0, 40.0), 1, 2)
    times = rng.exponential(1 / 0.08, 60).clip(0.1, 39.0)
    records = records_at(list(times))
    scores = cross_validate(
        records, grid, [0.5, 5.0], mode="l0", cv=CvConfig(folds=3, seed=1)
    )
    assert np.all(np.isfinite(scores))


# ---------------------------------------------------------------------------
# selection


def test_single_kappa_is_selected():
    rng = np.random.default_rng(13)
    stats = poisson_stats(rng, np.full((3, 3), 0.1), 60.0)
    best_kappa, fit, path = select(stats, [2.5], mode="l0", criterion="ebic")
    assert best_kappa == 2.5
    assert isinstance(fit, Segmentation)
    assert path.kappas == (2.5,)
    assert set(path.scores[0]) == {"aic", "bic", "ebic"}


def test_ties_break_toward_larger_kappa():
    rng = np.random.default_rng(17)
    stats = poisson_stats(rng, np.full((3, 3), 0.1), 200.0)
    best_kappa, fit, path = select(stats, [50.0, 100.0], mode="l0", criterion="ebic")
    assert [f.q for f in path.fits] == [1, 1]
    assert path.scores[0]["ebic"] == path.scores[1]["ebic"]
    assert best_kappa == 100.0


def test_select_validates_inputs():
    rng = np.random.default_rng(19)
    stats = poisson_stats(rng, np.full((2, 2), 0.1), 50.0)
    with pytest.raises(ValueError, match="at least one kappa"):
        select(stats, [], mode="l0", criterion="ebic")
    with pytest.raises(ValueError, match="use CV"):
        select(stats, [1.0], mode="l2", criterion="ebic")
    with pytest.raises(ValueError, match="individual-level records"):
        select(stats, [1.0], mode="l0", criterion="cv")
    with pytest.raises(ValueError, match="grid"):
        select(records_at([1.0, 2.0]), [1.0], mode="l0", criterion="ebic")
    with pytest.raises(ValueError, match="kappa > 0"):
        select(stats, [0.0, 1.0], mode="l0", criterion="ebic")
    with pytest.raises(ValueError, match="criterion"):
        select(stats, [1.0], mode="l0", criterion="gcv")


def test_select_l2_cv_on_records_returns_log_hazard():
    rng = np.random.default_rng(23)
    grid = GridSpec.uniform((1900.0, 2000.0), (0.0, 50.0), 2, 2)
    records = [
        IndividualRecord(
            cohort=1900.0 + 100.0 * rng.random(),
            time=float(t),
            event=1,
        )
        for t in rng.exponential(1 / 0.05, 120).clip(0.5, 49.5)
    ]
    best_kappa, fit, path = select(
        records,
        default_kappa_grid(0.01, 100.0, 5),
        mode="l2",
        criterion="cv",
        grid=grid,
        cv=CvConfig(folds=4, seed=9),
    )
    assert isinstance(fit, LogHazardGrid)
    assert best_kappa in path.kappas
    assert all("cv" in s and np.isfinite(s["cv"]) for s in path.scores)


def test_constant_hazard_ebic_selects_single_area():
    kappas = default_kappa_grid(0.1, 1000.0, 10)
    hits = 0
    for seed in range(50):
        rng = np.random.default_rng(5000 + seed)
        stats = poisson_stats(rng, np.full((5, 5), 0.1), 80.0)
        _, seg, _ = select(stats, kappas, mode="l0", criterion="ebic")
        hits += seg.q == 1
    assert hits >= 45


def test_two_block_ebic_smoke():
    # Light check that EBIC lands near the true block count on a 6x6
    # two-block instance; the full replicated quantile checks run in the
    # acceptance suite.
    from test_aridge import two_block_hazard

    kappas = default_kappa_grid(0.1, 100.0, 8)
    for seed in range(3):
        rng = np.random.default_rng(6000 + seed)
        stats = poisson_stats(rng, two_block_hazard(), 50.0)
        _, seg, _ = select(stats, kappas, mode="l0", criterion="ebic")
        assert 1 <= seg.q <= 6


def test_penalty_path_validation():
    with pytest.raises(ValueError, match="at least one"):
        PenaltyPath(kappas=(), fits=(), scores=())
    with pytest.raises(ValueError, match="increasing"):
        PenaltyPath(kappas=(2.0, 1.0), fits=(None, None), scores=({}, {}))
    with pytest.raises(ValueError, match="per kappa"):
        PenaltyPath(kappas=(1.0, 2.0), fits=(None,), scores=({}, {}))


# ---------------------------------------------------------------------------
# properties


@pytest.mark.properties
def test_property_criteria_share_the_nll_term():
    rng = np.random.default_rng(31)
    for seed in range(5):
        stats = poisson_stats(rng, rng.uniform(0.02, 0.5, (4, 5)), 40.0)
        seg, _ = adaptive_ridge(stats, 1.5)
        base = 2.0 * segmentation_nll(seg)
        n = stats.n_individuals or stats.total_events
        assert aic(seg, stats) - 2.0 * seg.q == pytest.approx(base, rel=1e-12)
        assert bic(seg, stats) - seg.q * math.log(n) == pytest.approx(base, rel=1e-12)
        assert ebic(seg, stats) >= bic(seg, stats) - 1e-12


@pytest.mark.properties
def test_property_ebic_gap_shape_in_q():
    from lexisseg.model_select import _log_binomial

    n_cells = 20
    gaps = [2.0 * _log_binomial(n_cells, q) for q in range(1, n_cells + 1)]
    assert gaps[-1] == pytest.approx(0.0, abs=1e-12)
    assert int(np.argmax(gaps)) + 1 == n_cells // 2
    assert all(g >= -1e-12 for g in gaps)


@pytest.mark.properties
def test_property_cv_invariant_to_record_permutation_with_assignment():
    rng = np.random.default_rng(37)
    grid = GridSpec.uniform((1900.0, 2000.0), (0.0, 60.0), 2, 3)
    records = [
        IndividualRecord(
            cohort=1900.0 + 100.0 * rng.random(),
            time=float(t),
            event=int(rng.random() < 0.8),
        )
        for t in rng.exponential(12.0, 90).clip(0.1, 59.0)
    ]
    assignment = fold_assignment(len(records), CvConfig(folds=5, seed=3))
    perm = rng.permutation(len(records))
    permuted = [records[i] for i in perm]
    base = cross_validate(
        records, grid, [0.2, 2.0], cv=CvConfig(folds=5, assignment=assignment)
    )
    same = cross_validate(
        permuted,
        grid,
        [0.2, 2.0],
        cv=CvConfig(folds=5, assignment=assignment[perm]),
    )
    # Permutation changes only floating-point accumulation order during
    # tabulation, so agreement is limited by the solver's gradient tolerance.
    np.testing.assert_allclose(base, same, rtol=1e-9)


@pytest.mark.properties
def test_property_argmin_invariant_to_constant_score_shift():
    rng = np.random.default_rng(41)
    stats = poisson_stats(rng, np.full((4, 4), 0.15), 60.0)
    kappas = default_kappa_grid(0.05, 50.0, 6)
    best_kappa, _, path = select(stats, kappas, mode="l0", criterion="ebic")
    scores = np.array([s["ebic"] for s in path.scores])

    def scan(values):
        best = 0
        for i in range(1, len(values)):
            if values[i] <= values[best]:
                best = i
        return best

    assert path.kappas[scan(scores)] == best_kappa
    assert scan(scores + 1234.5) == scan(scores)
