import numpy as np
import pytest

from ghsom import lattice
from ghsom.errors import GrowthRefused, InputError
from ghsom.som import MapGrid


def grid_of(weights):
    w = np.asarray(weights, dtype=np.float64)
    return MapGrid(0, w.shape[0], w.shape[1], 1, None, w)


def weights_of(grid):
    return [[None if grid.units[r][c] is None else list(grid.units[r][c].weight)
             for c in range(grid.cols)] for r in range(grid.rows)]


def test_insert_column_averages_flankers():
    g = grid_of([[[0.0], [1.0]], [[2.0], [4.0]]])
    lattice.insert_column(g, 0)
    assert g.cols == 3 and g.rows == 2
    assert weights_of(g) == [[[0.0], [0.5], [1.0]], [[2.0], [3.0], [4.0]]]


def test_insert_row_averages_flankers():
    g = grid_of([[[0.0], [1.0]], [[2.0], [4.0]]])
    lattice.insert_row(g, 0)
    assert g.rows == 3
    assert weights_of(g) == [[[0.0], [1.0]], [[1.0], [2.5]], [[2.0], [4.0]]]


def test_insert_at_trailing_edge_copies_single_flanker():
    g = grid_of([[[0.0], [1.0]]])
    lattice.insert_column(g, 1)
    assert weights_of(g) == [[[0.0], [1.0], [1.0]]]
    lattice.insert_row(g, 0)
    assert weights_of(g)[1] == [[0.0], [1.0], [1.0]]


def test_insert_between_hole_and_unit_copies_the_live_side():
    g = grid_of([[[0.0], [3.0]], [[1.0], [5.0]]])
    g.units[0][1] = None
    lattice.insert_column(g, 0)
    assert weights_of(g)[0] == [[0.0], [0.0], None]
    assert weights_of(g)[1] == [[1.0], [3.0], [5.0]]


def test_insert_between_two_holes_stays_a_hole():
    g = grid_of([[[0.0], [3.0]], [[1.0], [5.0]]])
    g.units[0][0] = None
    g.units[0][1] = None
    lattice.insert_column(g, 0)
    assert weights_of(g)[0] == [None, None, None]


def test_coordinates_renumbered_after_edits():
    g = grid_of(np.arange(8, dtype=float).reshape(2, 2, 2))
    lattice.insert_row(g, 0)
    lattice.insert_column(g, 0)
    for r in range(g.rows):
        for c in range(g.cols):
            u = g.units[r][c]
            assert (u.row, u.col) == (r, c)


def test_insertion_index_validation():
    g = grid_of(np.zeros((2, 2, 1)))
    with pytest.raises(InputError):
        lattice.insert_column(g, 2)
    with pytest.raises(InputError):
        lattice.insert_row(g, -1)


def test_cap_refuses_growth():
    g = grid_of(np.zeros((2, 2, 1)))
    with pytest.raises(GrowthRefused, match="refused"):
        lattice.insert_column(g, 0, max_units=5)
    lattice.insert_column(g, 0, max_units=6)
    assert g.cols == 3


def test_remove_unit_shifts_row_left():
    g = grid_of(np.arange(6, dtype=float).reshape(2, 3, 1))
    removed = lattice.remove_unit(g, 0, 1)
    assert list(removed.weight) == [1.0]
    assert weights_of(g)[0] == [[0.0], [2.0], None]
    assert weights_of(g)[1] == [[3.0], [4.0], [5.0]]
    assert g.units[0][1].col == 1


def test_remove_last_unit_refused():
    g = grid_of(np.zeros((1, 1, 1)))
    with pytest.raises(GrowthRefused, match="last unit"):
        lattice.remove_unit(g, 0, 0)


def test_remove_missing_unit():
    g = grid_of(np.zeros((1, 2, 1)))
    g.units[0][1] = None
    with pytest.raises(InputError):
        lattice.remove_unit(g, 0, 1)


def test_neighbors4_order_and_holes():
    g = grid_of(np.arange(9, dtype=float).reshape(3, 3, 1))
    got = [(u.row, u.col) for u in lattice.neighbors4(g, 1, 1)]
    assert got == [(0, 1), (2, 1), (1, 0), (1, 2)]
    g.units[0][1] = None
    got = [(u.row, u.col) for u in lattice.neighbors4(g, 1, 1)]
    assert got == [(2, 1), (1, 0), (1, 2)]
    corner = [(u.row, u.col) for u in lattice.neighbors4(g, 0, 0)]
    assert corner == [(1, 0)]


def test_neighbors8_row_major():
    g = grid_of(np.arange(9, dtype=float).reshape(3, 3, 1))
    got = [(u.row, u.col) for u in lattice.neighbors8(g, 1, 1)]
    assert got == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1), (2, 2)]


def test_mirrored_neighbor_weight_interior_and_edge():
    g = grid_of(np.arange(9, dtype=float).reshape(3, 3, 1))
    assert lattice.mirrored_neighbor_weight(g, 1, 1, (-1, 0))[0] == 1.0
    # top edge looking up mirrors to the unit below
    assert lattice.mirrored_neighbor_weight(g, 0, 1, (-1, 0))[0] == 4.0
    # isolated in that axis falls back to its own weight
    h = grid_of(np.array([[[7.0]]]))
    assert lattice.mirrored_neighbor_weight(h, 0, 0, (0, 1))[0] == 7.0


def test_rectangularity_preserved_by_every_edit():
    rng = np.random.default_rng(4)
    g = grid_of(rng.uniform(size=(2, 2, 2)))

    def remove_live():
        u = next(iter(g.iter_units()))
        lattice.remove_unit(g, u.row, u.col)

    ops = [lambda: lattice.insert_row(g, rng.integers(0, g.rows)),
           lambda: lattice.insert_column(g, rng.integers(0, g.cols)),
           remove_live]
    for _ in range(12):
        ops[rng.integers(0, 3)]()
        assert len(g.units) == g.rows
        assert all(len(row) == g.cols for row in g.units)
