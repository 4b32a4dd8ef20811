"""Structural edits on a map's lattice: row/column insertion, unit removal.

Weights of inserted cells are the mean of the two cells they separate.  A
cell flanked by one hole copies its single live flanker; flanked by two
holes it becomes a hole itself.  Elimination shifts the remainder of the
row leftward, so holes always collect at row ends and the array stays
rectangular.
"""

from __future__ import annotations

import numpy as np

from .errors import GrowthRefused, InputError
from .som import MapGrid, Unit


def _fresh_unit(row: int, col: int, a: Unit | None, b: Unit | None) -> Unit | None:
    if a is not None and b is not None:
        w = (a.weight + b.weight) / 2.0
    elif a is not None:
        w = a.weight.copy()
    elif b is not None:
        w = b.weight.copy()
    else:
        return None
    return Unit(row, col, w)


def _renumber(grid: MapGrid) -> None:
    for r in range(grid.rows):
        for c in range(grid.cols):
            u = grid.units[r][c]
            if u is not None:
                u.row = r
                u.col = c


def check_cap(grid: MapGrid, extra_rows: int, extra_cols: int,
              max_units: int | None) -> None:
    if max_units is None:
        return
    if (grid.rows + extra_rows) * (grid.cols + extra_cols) > max_units:
        raise GrowthRefused(
            f"map {grid.map_id}: growing past {max_units} units refused"
        )


def insert_column(grid: MapGrid, after_col: int, max_units: int | None = None) -> None:
    """Insert a full column between ``after_col`` and ``after_col + 1``."""
    if not (0 <= after_col < grid.cols - 0):
        raise InputError(f"column index {after_col} out of range")
    check_cap(grid, 0, 1, max_units)
    for r in range(grid.rows):
        left = grid.units[r][after_col]
        right = grid.units[r][after_col + 1] if after_col + 1 < grid.cols else None
        grid.units[r].insert(after_col + 1, _fresh_unit(r, after_col + 1, left, right))
    grid.cols += 1
    _renumber(grid)


def insert_row(grid: MapGrid, after_row: int, max_units: int | None = None) -> None:
    """Insert a full row between ``after_row`` and ``after_row + 1``."""
    if not (0 <= after_row < grid.rows):
        raise InputError(f"row index {after_row} out of range")
    check_cap(grid, 1, 0, max_units)
    above = grid.units[after_row]
    below = grid.units[after_row + 1] if after_row + 1 < grid.rows else [None] * grid.cols
    new_row = [_fresh_unit(after_row + 1, c, above[c], below[c]) for c in range(grid.cols)]
    grid.units.insert(after_row + 1, new_row)
    grid.rows += 1
    _renumber(grid)


def remove_unit(grid: MapGrid, row: int, col: int) -> Unit:
    """Delete the unit at (row, col); its row shifts leftward over the gap."""
    u = grid.unit_at(row, col)
    if u is None:
        raise InputError(f"no unit at ({row}, {col})")
    if grid.alive_count() <= 1:
        raise GrowthRefused("refusing to eliminate the last unit of a map")
    cells = grid.units[row]
    del cells[col]
    cells.append(None)
    _renumber(grid)
    return u


def neighbors4(grid: MapGrid, row: int, col: int) -> list[Unit]:
    """Alive orthogonal neighbors, in up/down/left/right order."""
    out = []
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        u = grid.unit_at(row + dr, col + dc)
        if u is not None:
            out.append(u)
    return out


def neighbors8(grid: MapGrid, row: int, col: int) -> list[Unit]:
    """Alive Moore-neighborhood units, row-major order."""
    out = []
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            u = grid.unit_at(row + dr, col + dc)
            if u is not None:
                out.append(u)
    return out


def mirrored_neighbor_weight(grid: MapGrid, row: int, col: int,
                             direction: tuple[int, int]) -> np.ndarray:
    """Neighbor weight in ``direction``, mirrored to the opposite side at edges."""
    here = grid.unit_at(row, col)
    if here is None:
        raise InputError(f"no unit at ({row}, {col})")
    u = grid.unit_at(row + direction[0], col + direction[1])
    if u is None:
        u = grid.unit_at(row - direction[0], col - direction[1])
    return u.weight if u is not None else here.weight
