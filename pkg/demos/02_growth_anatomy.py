"""
Watching a single map grow
==========================

Follows one map through its growth loop on synthetic clustered data: the
error statistic that drives growth, where the new rows and columns go,
and what the inserted units start out as.
"""

import numpy as np

from ghsom.data import Dataset
from ghsom.growth import (GhsomParams, grow_map, insert_row_or_column,
                          select_error_unit)
from ghsom.som import MapGrid, layer0_stats

rng = np.random.default_rng(7)

# four clusters in the unit square, sixty points
centers = np.array([[0.2, 0.2], [0.8, 0.2], [0.2, 0.8], [0.8, 0.8]])
raw = np.vstack([c + rng.normal(0, 0.05, (15, 2)) for c in centers])
raw = np.clip(raw, 0.0, 1.0)
ds = Dataset("four-corners", ["x", "y"], raw, None, "minmax",
             np.zeros(2), np.ones(2), raw_features=raw)

# the reference error is what a single unit at the global mean would
# score; growth keeps going until the mean summed error over winner
# units drops under tau1 times that
m0, mqe0, qe0 = layer0_stats(raw)
print(f"one-unit reference: mean error {mqe0:.4f}, summed error {qe0:.4f}")

params = GhsomParams()
params.growth.tau1 = 0.03
grid = MapGrid(0, 2, 2, 1, None, rng.uniform(0, 1, (2, 2, 2)))
grow_map(grid, ds.samples, parent_qe=qe0, params=params, seed=7)

print(f"final lattice: {grid.rows}x{grid.cols}, status {grid.status!r}")
print("\nphase trace (units vs error):")
for pt in grid.qe_history:
    bar = "#" * max(1, int(pt["mean_sample_qe"] * 400))
    print(f"  phase {pt['phase']:2d}  units {pt['n_units']:2d}  "
          f"mqe {pt['mqe_map']:.4f}  {bar}")

# where would the next insertion have gone?  between the worst winner
# unit and its most dissimilar lattice neighbor
e, d = select_error_unit(grid)
print(f"\nhighest-error unit {e}, most dissimilar neighbor {d}")

# insertion geometry on a toy lattice: the new units average their
# flankers, so the map stays smooth through the edit
toy = MapGrid(1, 2, 2, 1, None,
              np.array([[[0.0, 0.0], [4.0, 8.0]],
                        [[2.0, 2.0], [6.0, 2.0]]]))
insert_row_or_column(toy, (0, 0), (0, 1), None)
print("\nafter inserting a column between (0,0) and (0,1):")
for row in toy.units:
    print("  " + "  ".join(f"[{u.weight[0]:.1f} {u.weight[1]:.1f}]"
                           for u in row))
