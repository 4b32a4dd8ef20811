"""Unit-level growth control: activity trackers, generation and elimination.

A unit's walking distance (exponentially smoothed weight movement) flags
insufficient capacity; its smoothed winner-indicator variance flags a dead
unit.  Generation inserts a unit between the two most-travelled units of a
neighborhood; elimination removes dead or redundant units from the lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lattice
from .errors import GrowthRefused, InputError
from .som import MapGrid, Unit

__all__ = [
    "AdaptiveParams",
    "eu_met",
    "update_wd",
    "generation_score",
    "place_generated_unit",
    "update_va",
    "indicator_sequences",
    "indicator_correlation",
    "should_eliminate",
    "eliminate_unit",
]


@dataclass
class AdaptiveParams:
    """Smoothing factors and thresholds for unit generation/elimination.

    None of these have a canonical value; the defaults are working
    configuration, not doctrine.
    """

    gamma_w: float = 0.9
    gamma_v: float = 0.9
    gamma_a: float = 0.9
    theta_g: float = 0.05
    theta_e: float = 1e-4
    theta_c: float = 0.999

    def validate(self) -> None:
        for label, g in (("gamma_w", self.gamma_w), ("gamma_v", self.gamma_v),
                         ("gamma_a", self.gamma_a)):
            if not (0.0 < g < 1.0):
                raise InputError(f"{label} must lie strictly inside (0,1)")
        if self.theta_g <= 0:
            raise InputError("theta_g must be positive")
        if self.theta_e < 0:
            raise InputError("theta_e must be nonnegative")
        if not (0.0 < self.theta_c <= 1.0):
            raise InputError("theta_c must lie in (0,1]")


def eu_met(x, y) -> float:
    """Euclidean distance; the shorter vector is zero-padded to the longer."""
    xv = np.asarray(x, dtype=np.float64).ravel()
    yv = np.asarray(y, dtype=np.float64).ravel()
    n = max(len(xv), len(yv))
    if len(xv) < n:
        xv = np.pad(xv, (0, n - len(xv)))
    if len(yv) < n:
        yv = np.pad(yv, (0, n - len(yv)))
    return float(np.sqrt(np.sum((xv - yv) ** 2)))


def update_wd(wd_prev: float, w_now, w_prev, gamma_w: float) -> float:
    """One walking-distance step: decay plus the latest movement length."""
    if wd_prev < 0:
        raise InputError("wd_prev must be nonnegative")
    return gamma_w * wd_prev + (1.0 - gamma_w) * eu_met(w_now, w_prev)


def update_va(va_prev: float, act_prev: float, o_now: float,
              gamma_v: float, gamma_a: float) -> tuple[float, float]:
    """Advance the activation mean and the output-variance tracker.

    The activation mean moves first; the variance term measures the new
    deviation from it.  A unit's output signal is its winner indicator:
    1 on iterations where it is the BMU, else 0.
    """
    if va_prev < 0:
        raise InputError("va_prev must be nonnegative")
    act = gamma_a * act_prev + (1.0 - gamma_a) * o_now
    va = gamma_v * va_prev + (1.0 - gamma_v) * (o_now - act) ** 2
    return va, act


def generation_score(unit: Unit, grid: MapGrid) -> float:
    """Error-share times walking distance; a unit splits when this tops theta_g.

    The error share of the unit stands in for the sensitivity of the map
    error to its walking distance, which has no closed form for a SOM.
    """
    total = sum(u.qe for u in grid.winner_units())
    if total <= 0:
        return 0.0
    return (unit.qe / total) * unit.wd


def _pick_wd_pair(units: list[Unit], anchor: Unit | None) -> tuple[Unit, Unit]:
    ranked = sorted(units, key=lambda u: (-u.wd, u.row, u.col))
    if anchor is not None:
        rest = [u for u in ranked if u is not anchor]
        if not rest:
            raise GrowthRefused("anchored unit has no neighbor to pair with")
        return anchor, rest[0]
    if len(ranked) < 2:
        raise GrowthRefused("need at least two units to place a generated unit")
    return ranked[0], ranked[1]


def place_generated_unit(grid: MapGrid, neighborhood: list[tuple[int, int]],
                         max_units: int | None = None,
                         anchor: tuple[int, int] | None = None) -> MapGrid:
    """Insert a new unit between the two most-travelled units of ``neighborhood``.

    A row/column-aligned pair gets a full column/row inserted between them.
    A diagonal pair gets the row between them inserted; the cell of that row
    lying between the pair takes the pair's average weight, the remainder of
    the row takes vertical flanking means so the lattice stays rectangular.
    New units start with zeroed trackers and no assignments.
    """
    units = []
    seen = set()
    for r, c in sorted(neighborhood):
        u = grid.unit_at(r, c)
        if u is not None and (r, c) not in seen:
            units.append(u)
            seen.add((r, c))
    anchor_unit = None
    if anchor is not None:
        anchor_unit = grid.unit_at(*anchor)
        if anchor_unit is None:
            raise InputError(f"anchor {anchor} is not a live unit")
        if anchor not in seen:
            units.append(anchor_unit)
    u1, u2 = _pick_wd_pair(units, anchor_unit)

    if u1.row == u2.row:
        lo, hi = sorted((u1.col, u2.col))
        lattice.insert_column(grid, (lo + hi) // 2, max_units)
    elif u1.col == u2.col:
        lo, hi = sorted((u1.row, u2.row))
        lattice.insert_row(grid, (lo + hi) // 2, max_units)
    else:
        lo, hi = sorted((u1.row, u2.row))
        mid_col = (u1.col + u2.col) // 2
        lattice.insert_row(grid, (lo + hi) // 2, max_units)
        bridged = Unit((lo + hi) // 2 + 1, mid_col, (u1.weight + u2.weight) / 2.0)
        grid.units[bridged.row][bridged.col] = bridged
    return grid


def indicator_sequences(grid: MapGrid) -> tuple[list[int], dict[tuple[int, int], np.ndarray]]:
    """Winner-indicator vector per unit over the map's samples in id order."""
    ids = sorted(i for u in grid.iter_units() for i in u.assigned)
    pos = {sid: k for k, sid in enumerate(ids)}
    out = {}
    for u in grid.iter_units():
        v = np.zeros(len(ids))
        for sid in u.assigned:
            v[pos[sid]] = 1.0
        out[(u.row, u.col)] = v
    return ids, out


def indicator_correlation(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation of two indicator sequences.

    Identical sequences correlate at exactly 1 even when constant (one output
    is then deducible from the other with certainty); a constant sequence
    that differs from the other carries no usable signal and scores 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InputError("indicator sequences must have equal length")
    if np.array_equal(a, b):
        return 1.0
    da = a - a.mean()
    db = b - b.mean()
    na = math.sqrt(float(da @ da))
    nb = math.sqrt(float(db @ db))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(da @ db) / (na * nb)


def should_eliminate(unit: Unit, grid: MapGrid, params: AdaptiveParams) -> tuple[bool, str]:
    """Elimination verdict for ``unit`` with the triggering reason.

    ``inactive``: the output-variance tracker fell below theta_e after at
    least one full training phase.  ``redundant``: the unit's winner
    indicator correlates at theta_c or above with an earlier (row-major)
    unit's, so its output adds nothing.
    """
    if grid.phases < 1:
        return False, "warmup"
    if unit.va < params.theta_e:
        return True, "inactive"
    _, seqs = indicator_sequences(grid)
    mine = seqs[(unit.row, unit.col)]
    if len(mine) == 0:
        # no samples scored yet: length-zero sequences would all count as
        # identical and flag everything after the first unit
        return False, "keep"
    for other in grid.iter_units():
        if (other.row, other.col) >= (unit.row, unit.col):
            break
        if indicator_correlation(seqs[(other.row, other.col)], mine) >= params.theta_c:
            return True, "redundant"
    return False, "keep"


def eliminate_unit(grid: MapGrid, coords: tuple[int, int]) -> MapGrid:
    """Remove the unit at ``coords``; the rest of its row shifts leftward.

    Orphaned samples are re-assigned on the next scoring pass.  Pruning a
    child map hanging off the unit is the hierarchy's job: read
    ``unit.child`` before calling.
    """
    lattice.remove_unit(grid, *coords)
    return grid
