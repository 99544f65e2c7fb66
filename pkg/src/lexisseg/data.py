"""Data ingestion and tabulation on the age x cohort grid.

Individual survival records (cohort, observed time, event flag) are tabulated
into the two grids that fully determine the piecewise-constant likelihood:
per-cell event counts and per-cell person-years at risk. Register-format
inputs provide those grids directly. All intervals are left-closed,
right-open: a record whose event time equals a cut belongs to the cell to the
right, and events at or beyond the last age cut are excluded (and counted, so
truncation is never silent).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "IndividualRecord",
    "GridSpec",
    "ExhaustiveStats",
    "ShearedCell",
    "tabulate",
    "load_records",
    "load_register",
    "load_grid",
    "shear_to_age_period",
]


@dataclass(frozen=True, slots=True)
class IndividualRecord:
    """One subject: cohort (calendar years), observed time, event indicator.

    ``time`` is the observed minimum of the event time and the censoring
    time, measured in years since the subject's origin; ``event`` is True
    when the event was observed, False for right-censoring.
    """

    cohort: float
    time: float
    event: bool

    def __post_init__(self):
        if not np.isfinite(self.cohort):
            raise ValueError("cohort must be finite")
        if not np.isfinite(self.time) or self.time < 0:
            raise ValueError("time must be finite and >= 0")


def _validated_cuts(cuts, name: str) -> np.ndarray:
    arr = np.asarray(cuts, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError(f"{name} needs at least two cut points (one interval)")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if not np.all(np.diff(arr) > 0):
        raise ValueError(f"{name} must be strictly increasing")
    return arr


@dataclass(frozen=True)
class GridSpec:
    """Strictly increasing cohort and age cut points defining the cell grid."""

    cohort_cuts: np.ndarray
    age_cuts: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "cohort_cuts", _validated_cuts(self.cohort_cuts, "cohort_cuts")
        )
        object.__setattr__(self, "age_cuts", _validated_cuts(self.age_cuts, "age_cuts"))

    @property
    def n_cohort(self) -> int:
        """Number of cohort intervals (J)."""
        return len(self.cohort_cuts) - 1

    @property
    def n_age(self) -> int:
        """Number of age intervals (K)."""
        return len(self.age_cuts) - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_cohort, self.n_age)

    def to_dict(self) -> dict:
        return {
            "cohort_cuts": [float(c) for c in self.cohort_cuts],
            "age_cuts": [float(d) for d in self.age_cuts],
        }

    @classmethod
    def uniform(cls, cohort_range, age_range, n_cohort, n_age) -> "GridSpec":
        """Equally spaced grid over the given ranges."""
        return cls(
            np.linspace(cohort_range[0], cohort_range[1], n_cohort + 1),
            np.linspace(age_range[0], age_range[1], n_age + 1),
        )


@dataclass(frozen=True)
class ExhaustiveStats:
    """Per-cell event counts and person-years on a grid.

    ``events[j, k]`` counts observed events in cohort interval j and age
    interval k; ``exposure[j, k]`` accumulates the person-years at risk spent
    there. ``n_individuals`` is known for individual-level data and None for
    register data. ``excluded`` maps exclusion reasons to counts (see
    :func:`tabulate`).
    """

    grid: GridSpec
    events: np.ndarray
    exposure: np.ndarray
    n_individuals: int | None = None
    excluded: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        events = np.asarray(self.events, dtype=np.float64)
        exposure = np.asarray(self.exposure, dtype=np.float64)
        if events.shape != self.grid.shape or exposure.shape != self.grid.shape:
            raise ValueError(
                f"events/exposure shapes {events.shape}/{exposure.shape} "
                f"do not match grid shape {self.grid.shape}"
            )
        if np.any(events < 0) or not np.allclose(events, np.round(events)):
            raise ValueError("events must be non-negative integers")
        if np.any(exposure < 0) or not np.all(np.isfinite(exposure)):
            raise ValueError("exposure must be non-negative and finite")
        # Cells with events but zero exposure are tolerated here: an event at
        # exactly an age cut is counted in the right-hand cell while accruing
        # no time there. Such cells have no finite maximum-likelihood hazard;
        # estimators flag them. Register files reject them at parse time.
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "exposure", exposure)

    @property
    def total_events(self) -> float:
        return float(self.events.sum())

    @property
    def total_exposure(self) -> float:
        return float(self.exposure.sum())

    @property
    def excluded_records(self) -> int:
        """Records fully excluded plus records whose event fell off the grid."""
        return (
            self.excluded.get("cohort_out_of_range", 0)
            + self.excluded.get("event_before_age_start", 0)
            + self.excluded.get("event_at_or_after_age_end", 0)
        )


def tabulate(records: Sequence[IndividualRecord], grid: GridSpec) -> ExhaustiveStats:
    """Tabulate individual records into per-cell events and person-years.

    For each record whose cohort lies in [first cut, last cut): every age
    interval k receives exposure ``max(0, min(time, d_k) - d_{k-1})``, and an
    observed event with ``d_{k-1} <= time < d_k`` increments that cell's
    count. Records with cohorts outside the grid are dropped entirely;
    events before the first or at/after the last age cut are dropped from the
    counts (their in-grid exposure is kept). All exclusions are counted in
    ``excluded``.
    """
    if len(records) == 0:
        raise ValueError("empty record list")
    ccuts, dcuts = grid.cohort_cuts, grid.age_cuts
    J, K = grid.shape

    cohort = np.fromiter((r.cohort for r in records), dtype=np.float64, count=len(records))
    time = np.fromiter((r.time for r in records), dtype=np.float64, count=len(records))
    event = np.fromiter((r.event for r in records), dtype=bool, count=len(records))

    in_cohort = (cohort >= ccuts[0]) & (cohort < ccuts[-1])
    j_idx = np.searchsorted(ccuts, cohort[in_cohort], side="right") - 1

    t = time[in_cohort]
    # exposure: overlap of [0, time) with each age interval
    contrib = np.clip(t[:, None], dcuts[:-1], dcuts[1:]) - dcuts[:-1]
    exposure = np.zeros((J, K))
    np.add.at(exposure, j_idx, contrib)

    ev = event[in_cohort]
    in_age = (t >= dcuts[0]) & (t < dcuts[-1])
    counted = ev & in_age
    k_idx = np.searchsorted(dcuts, t[counted], side="right") - 1
    events = np.zeros((J, K))
    np.add.at(events, (j_idx[counted], k_idx), 1.0)

    excluded = {
        "cohort_out_of_range": int(np.sum(~in_cohort)),
        "event_before_age_start": int(np.sum(ev & (t < dcuts[0]))),
        "event_at_or_after_age_end": int(np.sum(ev & (t >= dcuts[-1]))),
        "exposure_truncated": int(np.sum(t > dcuts[-1])),
    }
    return ExhaustiveStats(
        grid=grid,
        events=events,
        exposure=exposure,
        n_individuals=int(np.sum(in_cohort)),
        excluded=excluded,
    )


def load_records(path) -> list[IndividualRecord]:
    """Read individual records from a CSV with header ``cohort,time,event``."""
    records: list[IndividualRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["cohort", "time", "event"]:
            raise ValueError(f"unknown header {header!r}; expected cohort,time,event")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"malformed row at line {lineno}: expected 3 fields")
            try:
                cohort = float(row[0])
                time = float(row[1])
            except ValueError as exc:
                raise ValueError(f"malformed row at line {lineno}: {exc}") from None
            if time < 0:
                raise ValueError(f"negative time at line {lineno}")
            ev = row[2].strip()
            if ev not in ("0", "1"):
                raise ValueError(f"malformed row at line {lineno}: event must be 0 or 1")
            try:
                records.append(IndividualRecord(cohort, time, ev == "1"))
            except ValueError as exc:
                raise ValueError(f"malformed row at line {lineno}: {exc}") from None
    return records


def load_register(path, grid: GridSpec) -> ExhaustiveStats:
    """Read per-cell counts from a register CSV (1-based cell indices).

    Header must be ``cohort_index,age_index,events,person_years``. Cells not
    present default to zero events and zero exposure; duplicate cells and
    out-of-range indices are errors, as are events in cells without exposure.
    """
    J, K = grid.shape
    events = np.zeros((J, K))
    exposure = np.zeros((J, K))
    seen: set[tuple[int, int]] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["cohort_index", "age_index", "events", "person_years"]
        if header is None or [h.strip() for h in header] != expected:
            raise ValueError(
                f"unknown header {header!r}; expected {','.join(expected)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"malformed row at line {lineno}: expected 4 fields")
            try:
                j = int(row[0])
                k = int(row[1])
                n_ev = int(row[2])
                py = float(row[3])
            except ValueError as exc:
                raise ValueError(f"malformed row at line {lineno}: {exc}") from None
            if not (1 <= j <= J and 1 <= k <= K):
                raise ValueError(
                    f"cell index ({j},{k}) out of grid range {J}x{K} at line {lineno}"
                )
            if (j, k) in seen:
                raise ValueError(f"duplicate cell ({j},{k}) at line {lineno}")
            seen.add((j, k))
            if n_ev < 0 or py < 0:
                raise ValueError(f"negative count at line {lineno}")
            if n_ev > 0 and py == 0:
                raise ValueError(f"events without exposure at line {lineno}")
            events[j - 1, k - 1] = n_ev
            exposure[j - 1, k - 1] = py
    return ExhaustiveStats(grid=grid, events=events, exposure=exposure, n_individuals=None)


def load_grid(path) -> GridSpec:
    """Read a grid JSON file: {"cohort_cuts": [...], "age_cuts": [...]}."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    try:
        return GridSpec(payload["cohort_cuts"], payload["age_cuts"])
    except KeyError as exc:
        raise ValueError(f"grid file missing key {exc}") from None


@dataclass(frozen=True)
class ShearedCell:
    """One grid cell mapped to the age-period plane (period = cohort + age).

    The age-cohort rectangle becomes a parallelogram; ``vertices`` lists its
    (period, age) corners counter-clockwise starting at the low-period,
    low-age corner.
    """

    cohort: tuple[float, float]
    age: tuple[float, float]
    vertices: tuple[tuple[float, float], ...]
    value: float

    @property
    def period_span(self) -> tuple[float, float]:
        periods = [p for p, _ in self.vertices]
        return (min(periods), max(periods))


def shear_to_age_period(grid_values: np.ndarray, grid: GridSpec) -> list[ShearedCell]:
    """Map per-cell values from age-cohort to age-period coordinates.

    Purely a visualization transform: values are unchanged, each rectangle
    [c0, c1) x [d0, d1) becomes the parallelogram with period = cohort + age.
    """
    values = np.asarray(grid_values, dtype=np.float64)
    if values.shape != grid.shape:
        raise ValueError(
            f"grid_values shape {values.shape} does not match grid shape {grid.shape}"
        )
    cells = []
    cc, dc = grid.cohort_cuts, grid.age_cuts
    for j in range(grid.n_cohort):
        for k in range(grid.n_age):
            c0, c1 = cc[j], cc[j + 1]
            d0, d1 = dc[k], dc[k + 1]
            cells.append(
                ShearedCell(
                    cohort=(c0, c1),
                    age=(d0, d1),
                    vertices=(
                        (c0 + d0, d0),
                        (c1 + d0, d0),
                        (c1 + d1, d1),
                        (c0 + d1, d1),
                    ),
                    value=float(values[j, k]),
                )
            )
    return cells
