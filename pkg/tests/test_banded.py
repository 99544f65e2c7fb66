"""Banded LDL^T factorization and solve, against dense numpy oracles."""

import numpy as np
import pytest

from lexisseg.banded import (
    BandCholeskyFactor,
    BandedSymMatrix,
    NotPositiveDefiniteError,
    factor,
    solve,
)

from _oracles import dense_from_band_spec, random_spd_band_entries


def banded_from_entries(n, bw, entries):
    """Pack {(row, col): value} lower entries into band storage."""
    bands = np.zeros((bw + 1, n))
    for (r, c), val in entries.items():
        bands[r - c, c] = val
    return BandedSymMatrix(dimension=n, bandwidth=bw, bands=bands)


def test_identity_factor_is_trivial():
    m = BandedSymMatrix(5, 1, np.vstack([np.ones(5), np.zeros(5)]))
    f = factor(m)
    np.testing.assert_array_equal(f.bands[0], np.ones(5))
    np.testing.assert_array_equal(f.bands[1], np.zeros(5))


def test_tridiagonal_laplacian_solve_matches_dense():
    # [2, -1] second-difference matrix plus the identity, size 4
    entries = {(i, i): 3.0 for i in range(4)}
    entries.update({(i + 1, i): -1.0 for i in range(3)})
    m = banded_from_entries(4, 1, entries)
    dense = dense_from_band_spec(4, entries)
    rhs = np.array([1.0, -2.0, 0.5, 3.0])
    x = solve(factor(m), rhs)
    assert np.max(np.abs(dense @ x - rhs)) < 1e-12
    np.testing.assert_allclose(x, np.linalg.solve(dense, rhs), rtol=1e-12)


def test_zero_diagonal_block_not_positive_definite():
    bands = np.zeros((1, 3))
    m = BandedSymMatrix(3, 0, bands)
    with pytest.raises(NotPositiveDefiniteError, match="index 0"):
        factor(m)


def test_negative_pivot_reports_index():
    entries = {(0, 0): 1.0, (1, 1): 1.0, (2, 2): -0.5}
    m = banded_from_entries(3, 0, entries)
    with pytest.raises(NotPositiveDefiniteError, match="index 2"):
        factor(m)


def test_ridge_floor_rejects_small_pivot():
    entries = {(0, 0): 1.0, (1, 1): 1e-9}
    m = banded_from_entries(2, 0, entries)
    factor(m, ridge_floor=0.0)  # fine without a floor
    with pytest.raises(NotPositiveDefiniteError, match="index 1"):
        factor(m, ridge_floor=1e-6)


def test_identity_factor_solve_roundtrip():
    f = factor(BandedSymMatrix(3, 0, np.ones((1, 3))))
    np.testing.assert_array_equal(solve(f, np.array([1.0, 2.0, 3.0])), [1.0, 2.0, 3.0])


def test_solve_dimension_mismatch():
    f = factor(BandedSymMatrix(3, 0, np.ones((1, 3))))
    with pytest.raises(ValueError, match="shape"):
        solve(f, np.ones(4))


def test_random_spd_50x50_matches_dense():
    rng = np.random.default_rng(42)
    entries = random_spd_band_entries(rng, 50, 5)
    m = banded_from_entries(50, 5, entries)
    dense = dense_from_band_spec(50, entries)
    rhs = rng.normal(size=50)
    x = solve(factor(m), rhs)
    expected = np.linalg.solve(dense, rhs)
    np.testing.assert_allclose(x, expected, rtol=1e-9, atol=1e-12)


def test_grid_laplacian_10x10_matches_dense():
    # 4-neighbour graph Laplacian of a 10 x 10 grid plus 0.1 I, flattened
    # with one axis fastest so couplings sit at offsets 1 and 10.
    n, side = 100, 10
    entries = {}
    deg = np.zeros(n)
    for j in range(side):
        for k in range(side):
            i = j * side + k
            if k + 1 < side:
                entries[(i + 1, i)] = -1.0
                deg[i] += 1
                deg[i + 1] += 1
            if j + 1 < side:
                entries[(i + side, i)] = -1.0
                deg[i] += 1
                deg[i + side] += 1
    for i in range(n):
        entries[(i, i)] = deg[i] + 0.1
    m = banded_from_entries(n, side, entries)
    dense = dense_from_band_spec(n, entries)
    rng = np.random.default_rng(3)
    rhs = rng.normal(size=n)
    x = solve(factor(m), rhs)
    np.testing.assert_allclose(x, np.linalg.solve(dense, rhs), rtol=1e-9, atol=1e-12)


def test_to_dense_matches_independent_construction():
    rng = np.random.default_rng(11)
    entries = random_spd_band_entries(rng, 12, 3)
    m = banded_from_entries(12, 3, entries)
    np.testing.assert_array_equal(m.to_dense(), dense_from_band_spec(12, entries))


def test_add_diagonal():
    m = BandedSymMatrix(3, 0, np.ones((1, 3)))
    shifted = m.add_diagonal(0.5)
    np.testing.assert_array_equal(shifted.bands[0], [1.5, 1.5, 1.5])
    np.testing.assert_array_equal(m.bands[0], [1.0, 1.0, 1.0])  # original intact


def test_bad_shapes_rejected():
    with pytest.raises(ValueError, match="bandwidth"):
        BandedSymMatrix(3, 3, np.zeros((4, 3)))
    with pytest.raises(ValueError, match="shape"):
        BandedSymMatrix(3, 1, np.zeros((3, 3)))


# ---------------------------------------------------------------------------
# Invariants & properties
# ---------------------------------------------------------------------------


@pytest.mark.properties
def test_property_reconstruction_within_band():
    rng = np.random.default_rng(7)
    for n, bw in [(20, 3), (35, 6), (50, 1), (9, 0)]:
        entries = random_spd_band_entries(rng, n, bw)
        m = banded_from_entries(n, bw, entries)
        f = factor(m)
        # rebuild L D L^T densely from the factor bands
        L = np.eye(n)
        for d in range(1, bw + 1):
            idx = np.arange(n - d)
            L[idx + d, idx] = f.bands[d, : n - d]
        rebuilt = L @ np.diag(f.bands[0]) @ L.T
        dense = dense_from_band_spec(n, entries)
        scale = np.max(np.abs(dense))
        # compare only within the band (outside it nothing was stored)
        for d in range(bw + 1):
            idx = np.arange(n - d)
            np.testing.assert_allclose(
                rebuilt[idx + d, idx], dense[idx + d, idx], atol=1e-12 * scale
            )


@pytest.mark.properties
def test_property_zero_rhs_gives_zero():
    rng = np.random.default_rng(5)
    entries = random_spd_band_entries(rng, 30, 4)
    f = factor(banded_from_entries(30, 4, entries))
    x = solve(f, np.zeros(30))
    assert np.all(x == 0.0)


@pytest.mark.properties
def test_property_factor_reusable_for_many_rhs():
    rng = np.random.default_rng(9)
    entries = random_spd_band_entries(rng, 25, 3)
    m = banded_from_entries(25, 3, entries)
    dense = dense_from_band_spec(25, entries)
    f = factor(m)
    for _ in range(4):
        rhs = rng.normal(size=25)
        np.testing.assert_allclose(
            solve(f, rhs), np.linalg.solve(dense, rhs), rtol=1e-9, atol=1e-12
        )


@pytest.mark.properties
def test_property_scaling_slope_near_linear():
    # wall-time of factor+solve should grow roughly linearly in the grid
    # length at fixed shorter axis (band width fixed).
    from lexisseg.cli import bench_timings

    rows = bench_timings(sizes=(50, 100, 200, 400), k=10, repeats=5, dense=False)
    logs = np.log([r["banded_seconds"] for r in rows])
    logn = np.log([r["j"] for r in rows])
    slope = np.polyfit(logn, logs, 1)[0]
    assert 0.8 <= slope <= 1.3, f"banded scaling slope {slope:.3f} outside [0.8, 1.3]"
