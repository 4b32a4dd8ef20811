"""The hierarchy controller: train, grow horizontally, stratify, restrain.

Each map trains in phases.  After a phase the map either satisfies the
horizontal stop rule (its mean winner-unit error fell under ``tau1`` times
the parent unit's error) or receives one structural edit and retrains.
Once a map converges, its high-error winner units are expanded into 2x2
child maps over their own samples, subject to the interactive restraint
rules, and the procedure recurses depth-first in row-major unit order.
"""

from __future__ import annotations

import datetime as _dt
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import lattice
from .adaptive import (AdaptiveParams, generation_score, indicator_correlation,
                       indicator_sequences, place_generated_unit, should_eliminate)
from .data import Dataset, Sample
from .errors import (DegenerateMapError, GrowthRefused, InputError,
                     UnknownTargetError)
from .policy import InteractiveParams, case1_veto, case2_insert_check
from .som import (MapGrid, Schedules, Unit, assign_and_score, layer0_stats,
                  map_mqe, train_map)

__all__ = [
    "ROW_COLUMN", "UNIT_LEVEL", "HYBRID",
    "GrowthParams", "GhsomParams", "AuditEntry", "Hierarchy",
    "select_error_unit", "insert_row_or_column", "grow_map", "train_hierarchy",
    "require_map", "require_unit", "map_sample_ids",
    "expand_unit_manual", "prune_unit_subtree", "recluster_map",
]

ROW_COLUMN = "row_column"
UNIT_LEVEL = "unit_level"
HYBRID = "hybrid"
GROWTH_MODES = (ROW_COLUMN, UNIT_LEVEL, HYBRID)

TAU1_SUM = "sum"
TAU1_MEAN = "mean"

_SEED_MASK = (1 << 63) - 1
_STREAM_INIT = 0
_STREAM_PHASE = 1
_STREAM_RECLUSTER = 2


@dataclass
class GrowthParams:
    """Horizontal / vertical growth thresholds and safety rails.

    ``tau2=None`` switches stratification off entirely.  ``tau1_reference``
    selects whether the horizontal stop rule compares against the parent
    unit's summed error (as printed in the source algorithm) or its mean.
    """

    tau1: float = 0.07
    tau2: float | None = 0.01
    max_map_units: int = 64
    max_depth: int = 5
    growth_mode: str = ROW_COLUMN
    tau1_reference: str = TAU1_SUM

    def validate(self) -> None:
        if not (0.0 < self.tau1 < 1.0):
            raise InputError("tau1 must lie in (0,1)")
        if self.tau2 is not None and not (0.0 < self.tau2 <= 1.0):
            raise InputError("tau2 must lie in (0,1] or be off")
        if self.max_map_units < 4:
            raise InputError("max_map_units must allow at least the initial 2x2")
        if self.max_depth < 1:
            raise InputError("max_depth must be >= 1")
        if self.growth_mode not in GROWTH_MODES:
            raise InputError(f"growth_mode must be one of {GROWTH_MODES}")
        if self.tau1_reference not in (TAU1_SUM, TAU1_MEAN):
            raise InputError("tau1_reference must be 'sum' or 'mean'")


@dataclass
class GhsomParams:
    """Everything a training run needs, bundled."""

    growth: GrowthParams = field(default_factory=GrowthParams)
    schedules: Schedules = field(default_factory=Schedules)
    interactive: InteractiveParams = field(default_factory=InteractiveParams)
    adaptive: AdaptiveParams = field(default_factory=AdaptiveParams)

    def validate(self) -> None:
        self.growth.validate()
        self.schedules.validate()
        self.interactive.validate()
        self.adaptive.validate()

    def copy(self) -> "GhsomParams":
        return GhsomParams(replace(self.growth), replace(self.schedules),
                           replace(self.interactive), replace(self.adaptive))


@dataclass
class AuditEntry:
    """One growth decision with the statistics that triggered it.

    ``ts`` is the wall-clock moment the decision was taken.  It goes into
    exported audit files but never into model files, which stay
    byte-identical for a given seed.
    """

    seq: int
    map_id: int
    unit: tuple[int, int] | None
    rule: str
    lhs: float
    rhs: float
    action: str
    manual: bool = False
    ts: float = 0.0

    def as_line(self) -> str:
        stamp = _dt.datetime.fromtimestamp(self.ts, tz=_dt.timezone.utc)
        unit = f"({self.unit[0]},{self.unit[1]})" if self.unit else "-"
        flag = " manual" if self.manual else ""
        return (f"{stamp.isoformat()}\tseq={self.seq}\tmap={self.map_id}\t"
                f"unit={unit}\t{self.rule}\tlhs={self.lhs!r}\trhs={self.rhs!r}\t"
                f"{self.action}{flag}")


class Hierarchy:
    """The whole model: layer-0 statistics, the map tree, parameters, audit."""

    def __init__(self, m0: np.ndarray, mqe0: float, qe0: float,
                 params: GhsomParams, seed: int, n_samples: int, dim: int,
                 dataset_name: str = ""):
        self.m0 = np.asarray(m0, dtype=np.float64)
        self.mqe0 = mqe0
        self.qe0 = qe0
        self.params = params
        self.seed = seed
        self.n_samples = n_samples
        self.dim = dim
        self.dataset_name = dataset_name
        self.feature_names: list[str] | None = None
        self.norm_kind: str | None = None
        self.norm_a: np.ndarray | None = None
        self.norm_b: np.ndarray | None = None
        self.maps: dict[int, MapGrid] = {}
        self.audit: list[AuditEntry] = []
        self.next_map_id = 0

    @property
    def root(self) -> MapGrid:
        return self.maps[0]

    def add_map(self, rows: int, cols: int, layer: int,
                parent: tuple[int, tuple[int, int]] | None,
                weights: np.ndarray) -> MapGrid:
        grid = MapGrid(self.next_map_id, rows, cols, layer, parent, weights)
        self.maps[grid.map_id] = grid
        self.next_map_id += 1
        return grid

    def audit_append(self, map_id: int, unit, rule: str, lhs: float, rhs: float,
                     action: str, manual: bool = False) -> AuditEntry:
        entry = AuditEntry(len(self.audit), map_id, unit, rule,
                           float(lhs), float(rhs), action, manual,
                           ts=time.time())
        self.audit.append(entry)
        return entry

    def subtree_ids(self, map_id: int) -> list[int]:
        """The map and all its descendants, depth-first row-major."""
        out = [map_id]
        for u in self.maps[map_id].iter_units():
            if u.child is not None:
                out.extend(self.subtree_ids(u.child))
        return out

    def prune_subtree(self, map_id: int) -> list[int]:
        """Drop the subtree rooted at ``map_id`` from the model; returns ids."""
        ids = self.subtree_ids(map_id)
        for mid in ids:
            del self.maps[mid]
        for grid in self.maps.values():
            for u in grid.iter_units():
                if u.child == map_id:
                    u.child = None
        return ids

    def repair_child_links(self, grid: MapGrid) -> None:
        """Refresh child maps' parent coordinates after units shifted."""
        for u in grid.iter_units():
            if u.child is not None and u.child in self.maps:
                self.maps[u.child].parent = (grid.map_id, (u.row, u.col))

    def depth(self) -> int:
        return max(g.layer for g in self.maps.values())

    def validate_tree(self) -> None:
        """Raise if parent/child links are not a well-formed tree."""
        seen = set()
        stack = [(0, 1)]
        while stack:
            mid, layer = stack.pop()
            if mid in seen:
                raise InputError(f"map {mid} reachable twice: not a tree")
            seen.add(mid)
            grid = self.maps[mid]
            if grid.layer != layer:
                raise InputError(f"map {mid} has layer {grid.layer}, expected {layer}")
            for u in grid.iter_units():
                if u.child is not None:
                    child = self.maps[u.child]
                    if child.parent != (mid, (u.row, u.col)):
                        raise InputError(f"map {u.child} has a stale parent link")
                    stack.append((u.child, layer + 1))
        if seen != set(self.maps):
            raise InputError(f"orphan maps: {sorted(set(self.maps) - seen)}")


# ---------------------------------------------------------------------------
# Growth operations
# ---------------------------------------------------------------------------


def select_error_unit(grid: MapGrid) -> tuple[tuple[int, int], tuple[int, int]]:
    """The highest-error winner unit and its most dissimilar lattice neighbor."""
    winners = grid.winner_units()
    if not winners:
        raise DegenerateMapError(f"map {grid.map_id} has no winner units")
    e = sorted(winners, key=lambda u: (-u.qe, u.row, u.col))[0]
    neigh = sorted(lattice.neighbors4(grid, e.row, e.col),
                   key=lambda u: (u.row, u.col))
    if not neigh:
        raise GrowthRefused(f"unit ({e.row},{e.col}) has no lattice neighbor")
    d = sorted(neigh, key=lambda u: (-float(np.linalg.norm(u.weight - e.weight)),
                                     u.row, u.col))[0]
    return (e.row, e.col), (d.row, d.col)


def insert_row_or_column(grid: MapGrid, e: tuple[int, int], d: tuple[int, int],
                         max_units: int | None = None) -> MapGrid:
    """Insert a full column (same-row pair) or row (same-column pair) between e and d."""
    if abs(e[0] - d[0]) + abs(e[1] - d[1]) != 1:
        raise InputError(f"{e} and {d} are not lattice 4-neighbors")
    if e[0] == d[0]:
        lattice.insert_column(grid, min(e[1], d[1]), max_units)
    else:
        lattice.insert_row(grid, min(e[0], d[0]), max_units)
    grid.status = "grown"
    return grid


class _Trainer:
    """Internal driver binding a hierarchy to its dataset during construction."""

    def __init__(self, hierarchy: Hierarchy, samples_by_id: dict[int, Sample],
                 progress=None):
        self.h = hierarchy
        self.samples_by_id = samples_by_id
        self.progress = progress

    # -- seeds ----------------------------------------------------------

    def _phase_seed(self, grid: MapGrid) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            (self.h.seed & _SEED_MASK, grid.map_id, _STREAM_PHASE, grid.phases))

    # -- phases ---------------------------------------------------------

    def _train_phase(self, grid: MapGrid, samples: list[Sample]) -> None:
        p = self.h.params
        train_map(grid, samples, p.schedules, self._phase_seed(grid),
                  trackers=p.adaptive)
        assign_and_score(grid, samples)
        total_qe = sum(u.qe for u in grid.iter_units())
        point = {
            "phase": grid.phases,
            "n_units": grid.alive_count(),
            "mqe_map": grid.mqe_map,
            "mean_sample_qe": total_qe / len(samples) if samples else 0.0,
        }
        grid.qe_history.append(point)
        if self.progress is not None:
            self.progress({"kind": "phase", "map_id": grid.map_id,
                           "layer": grid.layer, **point})

    # -- horizontal growth ---------------------------------------------

    def _growth_step(self, grid: MapGrid) -> None:
        g = self.h.params.growth
        if g.growth_mode in (ROW_COLUMN, HYBRID):
            e, d = select_error_unit(grid)
            insert_row_or_column(grid, e, d, g.max_map_units)
            return
        winners = grid.winner_units()
        scored = sorted(winners, key=lambda u: (-generation_score(u, grid),
                                                u.row, u.col))
        if not scored:
            raise DegenerateMapError(f"map {grid.map_id} has no winner units")
        best = scored[0]
        score = generation_score(best, grid)
        self.h.audit_append(grid.map_id, (best.row, best.col), "generation",
                            score, self.h.params.adaptive.theta_g,
                            "generate" if score > self.h.params.adaptive.theta_g
                            else "stop")
        if score <= self.h.params.adaptive.theta_g:
            raise GrowthRefused("no unit tops the generation threshold")
        hood = [(best.row, best.col)] + [
            (u.row, u.col) for u in lattice.neighbors8(grid, best.row, best.col)]
        place_generated_unit(grid, hood, g.max_map_units)

    def _grow(self, grid: MapGrid, samples: list[Sample], parent_qe: float) -> None:
        g = self.h.params.growth
        ref = parent_qe if g.tau1_reference == TAU1_SUM else parent_qe / len(samples)
        self._train_phase(grid, samples)
        while True:
            mqe = grid.mqe_map
            threshold = g.tau1 * ref
            if not (mqe >= threshold and mqe > 0):
                grid.status = "converged"
                self.h.audit_append(grid.map_id, None, "horizontal-growth",
                                    mqe, threshold, "stop")
                break
            self.h.audit_append(grid.map_id, None, "horizontal-growth",
                                mqe, threshold, "grow")
            try:
                self._growth_step(grid)
            except GrowthRefused as exc:
                grid.status = f"refused:{exc}"
                break
            grid.clear_stats()
            self._train_phase(grid, samples)
        if g.growth_mode == HYBRID:
            self._elimination_sweep(grid, samples)

    def _elimination_sweep(self, grid: MapGrid, samples: list[Sample]) -> None:
        adaptive = self.h.params.adaptive
        doomed = []
        for u in grid.iter_units():
            flag, reason = should_eliminate(u, grid, adaptive)
            if flag:
                doomed.append(((u.row, u.col), reason, u.va))
        changed = False
        for coords, reason, va in sorted(doomed, reverse=True):
            if grid.alive_count() <= 1:
                break
            u = grid.unit_at(*coords)
            if u.child is not None and u.child in self.h.maps:
                self.h.prune_subtree(u.child)
            lattice.remove_unit(grid, *coords)
            self.h.audit_append(grid.map_id, coords, f"eliminate-{reason}",
                                va, adaptive.theta_e, "eliminate")
            changed = True
        if changed:
            self.h.repair_child_links(grid)
            grid.clear_stats()
            self._train_phase(grid, samples)

    # -- interactive restraint -----------------------------------------

    def _is_candidate(self, grid: MapGrid, unit: Unit) -> bool:
        g = self.h.params.growth
        return (g.tau2 is not None and unit.qe > 0
                and unit.qe >= g.tau2 * self.h.qe0
                and grid.layer < g.max_depth)

    def _policy_pass(self, grid: MapGrid, samples: list[Sample]) -> None:
        """One restraint round over the scored map, before stratification.

        Every winner unit that will not get a child this round (it failed
        the stratification test or was vetoed for holding too few samples)
        is checked for an outsized error share; each hit receives one
        adjacent insertion.  The map retrains once at the end of the pass
        so the final stratification decisions see fresh statistics.
        """
        p = self.h.params
        if p.growth.tau2 is None:
            return
        decisions = []
        total = sum(w.qe for w in grid.winner_units())
        for u in grid.winner_units():
            candidate = self._is_candidate(grid, u)
            vetoed = candidate and case1_veto(u, self.h.n_samples,
                                             p.interactive.alpha)
            if vetoed:
                self.h.audit_append(grid.map_id, (u.row, u.col), "case1-veto",
                                    len(u.assigned),
                                    p.interactive.alpha * self.h.n_samples, "veto")
            if candidate and not vetoed:
                continue
            fires = case2_insert_check(u, grid, p.growth.tau1, p.interactive.beta)
            self.h.audit_append(grid.map_id, (u.row, u.col), "case2-insert",
                                u.qe, p.interactive.beta * p.growth.tau1 * total,
                                "insert" if fires else "skip")
            if fires:
                decisions.append(u)
        inserted = False
        for u in decisions:
            hood = [(u.row, u.col)] + [
                (n.row, n.col) for n in lattice.neighbors8(grid, u.row, u.col)]
            try:
                place_generated_unit(grid, hood, p.growth.max_map_units,
                                     anchor=(u.row, u.col))
            except GrowthRefused as exc:
                grid.status = f"refused:{exc}"
                break
            inserted = True
        if inserted:
            grid.clear_stats()
            self._train_phase(grid, samples)

    # -- vertical stratification ---------------------------------------

    def _child_weights(self, grid: MapGrid, unit: Unit) -> np.ndarray:
        """2x2 child seeds: the parent weight nudged a quarter of the way
        toward the mean of the matching vertical/horizontal neighbors."""
        m = unit.weight
        up = lattice.mirrored_neighbor_weight(grid, unit.row, unit.col, (-1, 0))
        down = lattice.mirrored_neighbor_weight(grid, unit.row, unit.col, (1, 0))
        left = lattice.mirrored_neighbor_weight(grid, unit.row, unit.col, (0, -1))
        right = lattice.mirrored_neighbor_weight(grid, unit.row, unit.col, (0, 1))
        w = np.empty((2, 2, len(m)))
        for i, vert in enumerate((up, down)):
            for j, horz in enumerate((left, right)):
                w[i, j] = m + 0.25 * (0.5 * (vert + horz) - m)
        return w

    def _stratify(self, grid: MapGrid, samples: list[Sample]) -> list[MapGrid]:
        p = self.h.params
        specs: list[tuple[int, int]] = []
        for u in grid.winner_units():
            if not self._is_candidate(grid, u):
                continue
            if p.interactive.enabled and case1_veto(u, self.h.n_samples,
                                                    p.interactive.alpha):
                self.h.audit_append(grid.map_id, (u.row, u.col), "case1-veto",
                                    len(u.assigned),
                                    p.interactive.alpha * self.h.n_samples, "veto")
                continue
            self.h.audit_append(grid.map_id, (u.row, u.col), "stratify",
                                u.qe, (p.growth.tau2 or 0.0) * self.h.qe0, "expand")
            specs.append((u.row, u.col))
        children = []
        for coords in specs:
            u = grid.unit_at(*coords)
            child = self.h.add_map(2, 2, grid.layer + 1,
                                   (grid.map_id, coords),
                                   self._child_weights(grid, u))
            u.child = child.map_id
            children.append(child)
            self._build(child, [self.samples_by_id[i] for i in u.assigned], u.qe)
        return children

    # -- whole subtrees -------------------------------------------------

    def _build(self, grid: MapGrid, samples: list[Sample], parent_qe: float) -> None:
        if not samples:
            grid.status = "warning:empty-sample-set"
            return
        self._grow(grid, samples, parent_qe)
        if self.h.params.interactive.enabled:
            self._policy_pass(grid, samples)
        self._stratify(grid, samples)


def grow_map(grid: MapGrid, samples: list[Sample], parent_qe: float,
             params: GhsomParams, seed: int = 0, progress=None) -> MapGrid:
    """Grow a single map until its stop rule fires; no stratification."""
    if parent_qe <= 0:
        raise InputError("parent_qe must be positive")
    shell = Hierarchy(np.zeros(grid.dim()), 0.0, 0.0, params, seed,
                      len(samples), grid.dim())
    shell.maps[grid.map_id] = grid
    trainer = _Trainer(shell, {s.id: s for s in samples}, progress)
    trainer._grow(grid, samples, parent_qe)
    return grid


def require_map(h: Hierarchy, map_id: int) -> MapGrid:
    grid = h.maps.get(map_id)
    if grid is None:
        raise UnknownTargetError(f"no map with id {map_id}")
    return grid


def require_unit(grid: MapGrid, row: int, col: int) -> Unit:
    if not (0 <= row < grid.rows and 0 <= col < grid.cols):
        raise UnknownTargetError(
            f"map {grid.map_id} has no unit ({row},{col})")
    unit = grid.unit_at(row, col)
    if unit is None:
        raise UnknownTargetError(
            f"unit ({row},{col}) of map {grid.map_id} was eliminated")
    return unit


def map_sample_ids(grid: MapGrid) -> list[int]:
    """Ids of every sample that entered the map, ascending."""
    ids: set[int] = set()
    for u in grid.iter_units():
        ids.update(u.assigned)
    return sorted(ids)


def expand_unit_manual(h: Hierarchy, samples_by_id: dict[int, Sample],
                       map_id: int, row: int, col: int,
                       progress=None) -> MapGrid:
    """Stratify one unit on demand, overriding the automatic vetoes.

    The human is the policy here: the unit gets a child map regardless of
    what the restraint rules decided, and the audit log records the
    override.
    """
    grid = require_map(h, map_id)
    unit = require_unit(grid, row, col)
    if unit.child is not None:
        raise InputError(
            f"unit ({row},{col}) already has child map {unit.child}")
    if len(unit.assigned) < 2:
        raise InputError(
            f"unit ({row},{col}) holds {len(unit.assigned)} sample(s); "
            "splitting fewer than 2 cannot sharpen the cluster, which is "
            "the same reason such units are vetoed automatically")
    h.audit_append(map_id, (row, col), "expand-unit",
                   len(unit.assigned), 2, "manual override", manual=True)
    trainer = _Trainer(h, samples_by_id, progress)
    child = h.add_map(2, 2, grid.layer + 1, (map_id, (row, col)),
                      trainer._child_weights(grid, unit))
    unit.child = child.map_id
    trainer._build(child, [samples_by_id[i] for i in unit.assigned], unit.qe)
    return child


def prune_unit_subtree(h: Hierarchy, map_id: int, row: int, col: int) -> list[int]:
    """Drop the child subtree under one unit; returns the removed map ids."""
    grid = require_map(h, map_id)
    unit = require_unit(grid, row, col)
    if unit.child is None:
        raise InputError(f"unit ({row},{col}) has no child map to prune")
    ids = h.prune_subtree(unit.child)
    h.audit_append(map_id, (row, col), "prune-subtree",
                   len(ids), 0, "manual override", manual=True)
    return ids


def recluster_map(h: Hierarchy, samples_by_id: dict[int, Sample],
                  map_id: int, nonce: int, params: GhsomParams | None = None,
                  progress=None) -> MapGrid:
    """Rebuild one map and its descendants from a fresh start.

    The map restarts as a 2x2 grid with weights drawn from a stream keyed
    by ``nonce``, then grows and stratifies under ``params`` (the
    hierarchy's own parameters when None).  Maps outside the subtree are
    untouched.
    """
    grid = require_map(h, map_id)
    sids = map_sample_ids(grid)
    for u in grid.iter_units():
        if u.child is not None and u.child in h.maps:
            h.prune_subtree(u.child)
    parent_qe = h.qe0
    if grid.parent is not None:
        pid, (pr, pc) = grid.parent
        parent_qe = require_unit(h.maps[pid], pr, pc).qe
    rng = np.random.default_rng(np.random.SeedSequence(
        (h.seed & _SEED_MASK, map_id, _STREAM_RECLUSTER, nonce & _SEED_MASK)))
    fresh = MapGrid(map_id, 2, 2, grid.layer, grid.parent,
                    rng.uniform(0.0, 1.0, size=(2, 2, h.dim)))
    h.maps[map_id] = fresh
    h.audit_append(map_id, None, "recluster", nonce, 0,
                   "manual override", manual=True)
    saved = h.params
    if params is not None:
        params.validate()
        h.params = params
    try:
        trainer = _Trainer(h, samples_by_id, progress)
        samples = [samples_by_id[i] for i in sids]
        if not samples:
            fresh.status = "warning:empty-sample-set"
        elif parent_qe <= 0:
            trainer._train_phase(fresh, samples)
            fresh.status = "converged"
        else:
            trainer._build(fresh, samples, parent_qe)
    finally:
        h.params = saved
    return fresh


def train_hierarchy(dataset: Dataset, params: GhsomParams, seed: int,
                    progress=None) -> Hierarchy:
    """Train a complete hierarchy over ``dataset``; deterministic per seed."""
    params.validate()
    if dataset.n == 0:
        raise InputError("dataset is empty")
    m0, mqe0, qe0 = layer0_stats(dataset.features)
    h = Hierarchy(m0, mqe0, qe0, params, seed, dataset.n, dataset.dim,
                  dataset_name=dataset.name)
    h.feature_names = list(dataset.feature_names)
    h.norm_kind = dataset.norm_kind
    h.norm_a = np.asarray(dataset.norm_a, dtype=np.float64)
    h.norm_b = np.asarray(dataset.norm_b, dtype=np.float64)
    rng = np.random.default_rng(
        np.random.SeedSequence((seed & _SEED_MASK, 0, _STREAM_INIT)))
    root = h.add_map(2, 2, 1, None, rng.uniform(0.0, 1.0, size=(2, 2, dataset.dim)))
    trainer = _Trainer(h, {s.id: s for s in dataset.samples}, progress)
    samples = list(dataset.samples)
    if qe0 <= 0:
        trainer._train_phase(root, samples)
        root.status = "converged"
        return h
    trainer._build(root, samples, qe0)
    return h
