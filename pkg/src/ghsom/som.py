"""Flat SOM primitives shared by every map in the hierarchy.

A map is a rectangular lattice of units.  Eliminated positions are holes
(``None`` cells): they hold no unit, never win, and lattice-distance
computations simply never see them.  The training loop is a classical
online SOM pass (winner search + neighborhood-weighted pull toward the
sample) that additionally maintains the per-unit activity trackers used
by the adaptive growth rules: walking distance (smoothed weight movement),
activation mean and activation variance of the winner-indicator signal.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .data import Sample
from .errors import DegenerateMapError, InputError

__all__ = [
    "Schedules",
    "Unit",
    "MapGrid",
    "TrackerParams",
    "find_bmu",
    "neighborhood_coefficient",
    "train_map",
    "assign_and_score",
    "map_mqe",
    "layer0_stats",
]


@dataclass
class Schedules:
    """Learning-rate / radius decay for one training phase.

    Both decay linearly per presented sample, reaching the end value at the
    final iteration of the phase (``epochs * n_samples`` presentations).
    """

    epochs: int = 5
    lr_start: float = 0.5
    lr_end: float = 0.02
    radius_start: float = 1.5
    radius_end: float = 0.25

    def validate(self) -> None:
        if self.epochs < 1:
            raise InputError("epochs must be >= 1")
        if not (0.0 <= self.lr_end <= self.lr_start <= 1.0):
            raise InputError("need 0 <= lr_end <= lr_start <= 1")
        if self.radius_start <= 0 or self.radius_end <= 0:
            raise InputError("radius bounds must be positive")
        if self.radius_end > self.radius_start:
            raise InputError("radius_end must not exceed radius_start")


@dataclass
class TrackerParams:
    """Smoothing factors for the per-unit activity trackers (all in (0,1))."""

    gamma_w: float = 0.9
    gamma_v: float = 0.9
    gamma_a: float = 0.9

    def validate(self) -> None:
        for label, g in (("gamma_w", self.gamma_w), ("gamma_v", self.gamma_v),
                         ("gamma_a", self.gamma_a)):
            if not (0.0 < g < 1.0):
                raise InputError(f"{label} must lie strictly inside (0,1)")


@dataclass
class Unit:
    """One lattice cell: reference vector, assignment set, error and activity state."""

    row: int
    col: int
    weight: np.ndarray
    assigned: list[int] = field(default_factory=list)
    qe: float = 0.0
    mqe: float = 0.0
    wd: float = 0.0
    va: float = 0.0
    act: float = 0.0
    child: int | None = None


class MapGrid:
    """A rows x cols lattice of units at one node of the hierarchy.

    ``units[r][c]`` is ``None`` where a unit was eliminated.  ``parent``
    is ``(parent_map_id, (row, col))`` for every non-root map.
    """

    def __init__(self, map_id: int, rows: int, cols: int, layer: int,
                 parent: tuple[int, tuple[int, int]] | None,
                 weights: np.ndarray):
        if rows < 1 or cols < 1:
            raise InputError("map must have at least one row and column")
        self.map_id = map_id
        self.rows = rows
        self.cols = cols
        self.layer = layer
        self.parent = parent
        self.units: list[list[Unit | None]] = [
            [Unit(r, c, np.array(weights[r, c], dtype=np.float64))
             for c in range(cols)]
            for r in range(rows)
        ]
        self.mqe_map = 0.0
        self.status = "new"
        self.phases = 0
        self.n_samples = 0
        self.qe_history: list[dict] = []

    # -- lattice access -------------------------------------------------

    def unit_at(self, row: int, col: int) -> Unit | None:
        if 0 <= row < self.rows and 0 <= col < self.cols:
            return self.units[row][col]
        return None

    def iter_units(self):
        """Yield alive units in row-major order."""
        for r in range(self.rows):
            for c in range(self.cols):
                u = self.units[r][c]
                if u is not None:
                    yield u

    def alive_count(self) -> int:
        return sum(1 for _ in self.iter_units())

    def winner_units(self) -> list[Unit]:
        """Units with a nonempty assignment set, row-major."""
        return [u for u in self.iter_units() if u.assigned]

    def weights_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """(K, d) weight matrix and (K, 2) coordinate array, row-major alive."""
        alive = list(self.iter_units())
        w = np.stack([u.weight for u in alive])
        coords = np.array([[u.row, u.col] for u in alive], dtype=np.int64)
        return w, coords

    def dim(self) -> int:
        for u in self.iter_units():
            return len(u.weight)
        raise DegenerateMapError("map has no units")

    def clear_stats(self) -> None:
        """Drop assignments and error statistics ahead of a retraining phase."""
        for u in self.iter_units():
            u.assigned = []
            u.qe = 0.0
            u.mqe = 0.0
        self.mqe_map = 0.0


# ---------------------------------------------------------------------------
# Engine operations
# ---------------------------------------------------------------------------


def _features_of(x) -> np.ndarray:
    return x.features if isinstance(x, Sample) else np.asarray(x, dtype=np.float64)


def find_bmu(grid: MapGrid, x) -> tuple[int, int]:
    """Coordinates of the unit nearest to ``x``; ties go row-major."""
    xv = _features_of(x)
    alive = list(grid.iter_units())
    if not alive:
        raise DegenerateMapError("map has no units")
    if len(xv) != len(alive[0].weight):
        raise InputError(
            f"sample dimension {len(xv)} != map dimension {len(alive[0].weight)}"
        )
    best = None
    best_d = math.inf
    for u in alive:
        d = float(np.linalg.norm(xv - u.weight))
        if d < best_d:  # strict: first minimum wins, i.e. row-major tie-break
            best_d = d
            best = u
    return best.row, best.col


def _interp(start: float, end: float, t: int, total_iters: int) -> float:
    if total_iters <= 1:
        return end
    return start + (end - start) * (t / (total_iters - 1))


def neighborhood_coefficient(grid_dist: float, t: int, schedules: Schedules,
                             total_iters: int) -> float:
    """Gaussian pull strength ``lr(t) * exp(-dist^2 / (2 sigma(t)^2))``."""
    if t >= total_iters:
        raise InputError(f"iteration {t} out of range for {total_iters} total")
    lr = _interp(schedules.lr_start, schedules.lr_end, t, total_iters)
    sigma = _interp(schedules.radius_start, schedules.radius_end, t, total_iters)
    return lr * math.exp(-(grid_dist ** 2) / (2.0 * sigma * sigma))


def _py_train_kernel(weights, wd, va, act, X, order, coords,
                     lr0, lr1, s0, s1, gw, gv, ga):
    """Reference training loop; the numba-compiled copy is the fast path."""
    total_iters = order.shape[0]
    n_units, dim = weights.shape
    d2 = np.empty(n_units)
    for t in range(total_iters):
        x = X[order[t]]
        best = 0
        best_d2 = np.inf
        for k in range(n_units):
            s = 0.0
            for j in range(dim):
                diff = x[j] - weights[k, j]
                s += diff * diff
            d2[k] = s
            if s < best_d2:
                best_d2 = s
                best = k
        if total_iters > 1:
            frac = t / (total_iters - 1)
        else:
            frac = 1.0
        lr = lr0 + (lr1 - lr0) * frac
        sigma = s0 + (s1 - s0) * frac
        inv2s2 = 1.0 / (2.0 * sigma * sigma)
        br = coords[best, 0]
        bc = coords[best, 1]
        for k in range(n_units):
            dr = coords[k, 0] - br
            dc = coords[k, 1] - bc
            h = lr * math.exp(-(dr * dr + dc * dc) * inv2s2)
            move = h * math.sqrt(d2[k])
            for j in range(dim):
                weights[k, j] += h * (x[j] - weights[k, j])
            wd[k] = gw * wd[k] + (1.0 - gw) * move
            o = 1.0 if k == best else 0.0
            act[k] = ga * act[k] + (1.0 - ga) * o
            dv = o - act[k]
            va[k] = gv * va[k] + (1.0 - gv) * dv * dv


if os.environ.get("GHSOM_DISABLE_NUMBA"):
    _train_kernel = _py_train_kernel
else:
    try:
        from numba import njit
        _train_kernel = njit(cache=True)(_py_train_kernel)
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _train_kernel = _py_train_kernel


def train_map(grid: MapGrid, samples: list[Sample], schedules: Schedules,
              rng_seed, trackers: TrackerParams | None = None) -> MapGrid:
    """Run one training phase over ``samples``, in place.

    Each of ``schedules.epochs`` passes presents the samples in a freshly
    shuffled order drawn from ``rng_seed``.  Every presentation pulls all
    units toward the sample with the Gaussian neighborhood coefficient and
    advances the per-unit walking-distance / activation trackers.  The same
    (map, samples, schedules, seed) always produces bit-identical weights.
    """
    schedules.validate()
    trackers = trackers or TrackerParams()
    trackers.validate()
    if not samples:
        grid.status = "warning:empty-sample-set"
        return grid
    dim = grid.dim()
    for s in samples:
        if len(s.features) != dim:
            raise InputError(
                f"sample {s.id} dimension {len(s.features)} != map dimension {dim}"
            )

    alive = list(grid.iter_units())
    weights = np.stack([u.weight for u in alive])
    coords = np.array([[u.row, u.col] for u in alive], dtype=np.int64)
    wd = np.array([u.wd for u in alive])
    va = np.array([u.va for u in alive])
    act = np.array([u.act for u in alive])
    X = np.stack([s.features for s in samples])

    rng = np.random.default_rng(rng_seed)
    n = len(samples)
    order = np.concatenate([rng.permutation(n) for _ in range(schedules.epochs)])

    _train_kernel(weights, wd, va, act, X, order, coords,
                  float(schedules.lr_start), float(schedules.lr_end),
                  float(schedules.radius_start), float(schedules.radius_end),
                  float(trackers.gamma_w), float(trackers.gamma_v),
                  float(trackers.gamma_a))

    for k, u in enumerate(alive):
        u.weight = weights[k]
        u.wd = float(wd[k])
        u.va = float(va[k])
        u.act = float(act[k])
    grid.phases += 1
    grid.status = "trained"
    return grid


def assign_and_score(grid: MapGrid, samples: list[Sample]) -> MapGrid:
    """Assign every sample to its BMU and recompute qe / mqe per unit."""
    grid.clear_stats()
    grid.n_samples = len(samples)
    if not samples:
        return grid
    alive = list(grid.iter_units())
    weights = np.stack([u.weight for u in alive])
    dists_sum = np.zeros(len(alive))
    for s in samples:
        d = np.linalg.norm(weights - s.features, axis=1)
        k = int(np.argmin(d))  # first minimum = row-major tie-break
        alive[k].assigned.append(s.id)
        dists_sum[k] += float(d[k])
    for k, u in enumerate(alive):
        if u.assigned:
            u.qe = float(dists_sum[k])
            u.mqe = u.qe / len(u.assigned)
    grid.mqe_map = map_mqe(grid) if grid.winner_units() else 0.0
    return grid


def map_mqe(grid: MapGrid) -> float:
    """Mean of the summed quantization errors over the map's winner units."""
    winners = grid.winner_units()
    if not winners:
        raise DegenerateMapError(f"map {grid.map_id} has no winner units")
    return sum(u.qe for u in winners) / len(winners)


def layer0_stats(features: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Virtual layer-0 statistics: global mean, its mean error and summed error."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError("dataset must be a nonempty (n, d) matrix")
    m0 = X.mean(axis=0)
    dists = np.linalg.norm(X - m0, axis=1)
    mqe0 = float(dists.mean())
    qe0 = float(dists.sum())
    return m0, mqe0, qe0
