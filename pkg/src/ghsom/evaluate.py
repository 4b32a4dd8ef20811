"""Quantitative reports over a trained hierarchy.

Error statistics come in two scales: the training scale (min-max normalized,
matching the stored per-unit errors, recomputable from a model file alone)
and the original feature scale (needs the dataset; this is the scale a user
reads, and the scale of the headline leaf-front figures).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import InputError
from .growth import Hierarchy
from .som import Unit

__all__ = [
    "QeReport", "leaf_front", "hierarchy_qe", "model_criterion",
    "unit_color", "class_purity",
]


def leaf_front(h: Hierarchy) -> dict[int, tuple[int, Unit]]:
    """sample id -> (map id, unit) at the deepest map that claims the sample."""
    out: dict[int, tuple[int, Unit]] = {}

    def walk(mid: int) -> None:
        for u in h.maps[mid].iter_units():
            if u.child is not None and u.child in h.maps:
                walk(u.child)
            else:
                for sid in u.assigned:
                    out[sid] = (mid, u)

    walk(0)
    return out


@dataclass
class QeReport:
    """Leaf-front error figures plus a per-map breakdown."""

    total_qe: float
    mean_qe: float
    leaf_unit_mean_qe: float
    n_samples: int
    n_leaf_units: int
    per_map: list[dict] = field(default_factory=list)
    total_qe_orig: float | None = None
    mean_qe_orig: float | None = None
    leaf_unit_mean_qe_orig: float | None = None


def hierarchy_qe(h: Hierarchy, dataset: Dataset | None = None) -> QeReport:
    """Leaf-front quantization error of the whole model.

    The normalized figures come straight from the per-unit sums recorded at
    scoring time, so they are recomputable from a saved model alone.  With
    the dataset at hand, the same figures are also produced in original
    feature units.
    """
    front = leaf_front(h)
    units: dict[tuple[int, int, int], Unit] = {}
    for mid, u in front.values():
        units[(mid, u.row, u.col)] = u
    total = float(sum(u.qe for u in units.values()))
    n = len(front)
    report = QeReport(
        total_qe=total,
        mean_qe=total / n if n else 0.0,
        leaf_unit_mean_qe=total / len(units) if units else 0.0,
        n_samples=n,
        n_leaf_units=len(units),
    )
    for mid in sorted(h.maps):
        g = h.maps[mid]
        winners = g.winner_units()
        report.per_map.append({
            "map_id": mid,
            "layer": g.layer,
            "rows": g.rows,
            "cols": g.cols,
            "n_units": g.alive_count(),
            "n_winners": len(winners),
            "n_samples": g.n_samples,
            "total_qe": float(sum(u.qe for u in winners)),
            "mqe_map": g.mqe_map,
            "status": g.status,
            "qe_history": list(g.qe_history),
        })
    if dataset is not None:
        scale = dataset.norm_b
        per_unit: dict[tuple[int, int, int], float] = {}
        total_orig = 0.0
        for sid, (mid, u) in front.items():
            d = float(np.linalg.norm((u.weight - dataset.features[sid]) * scale))
            total_orig += d
            key = (mid, u.row, u.col)
            per_unit[key] = per_unit.get(key, 0.0) + d
        report.total_qe_orig = total_orig
        report.mean_qe_orig = total_orig / n if n else 0.0
        report.leaf_unit_mean_qe_orig = (
            float(np.mean(list(per_unit.values()))) if per_unit else 0.0)
    return report


def model_criterion(h: Hierarchy, dataset: Dataset) -> float:
    """Parsimony score: n*ln(mean squared leaf error) + 2*units*dim.

    Squared errors are taken in original feature units.  Only the ordering
    between two models on the same dataset is meaningful.  A model with
    zero error returns -inf with a warning rather than raising.
    """
    front = leaf_front(h)
    if not front:
        raise InputError("hierarchy has no assigned samples to score")
    scale = dataset.norm_b
    sq = [float(np.sum(((u.weight - dataset.features[sid]) * scale) ** 2))
          for sid, (_, u) in front.items()]
    mse = float(np.mean(sq))
    p = sum(g.alive_count() for g in h.maps.values()) * h.dim
    if mse <= 0.0:
        warnings.warn("zero quantization error: criterion is -inf")
        return float("-inf")
    return len(front) * float(np.log(mse)) + 2.0 * p


def unit_color(unit: Unit) -> tuple[int, int, int]:
    """First three weight components as an RGB byte triple.

    Missing components (weights shorter than 3) read as mid-gray 0.5.
    Rounding is half-up so 0.5 maps to 128 exactly.
    """
    w = np.asarray(unit.weight, dtype=np.float64).ravel()
    channels = []
    for k in range(3):
        v = float(w[k]) if k < len(w) else 0.5
        v = min(max(v, 0.0), 1.0)
        channels.append(int(np.floor(v * 255.0 + 0.5)))
    return tuple(channels)


def class_purity(h: Hierarchy, dataset: Dataset,
                 layer: int | None = None) -> tuple[dict, float]:
    """Label histograms per unit plus the overall majority-match fraction.

    ``layer=None`` evaluates the leaf front; ``layer=k`` evaluates the
    winner units of the maps at depth ``k`` (the root map is layer 1).
    """
    if dataset.labels is None:
        raise InputError("dataset has no labels to compute purity against")
    groups: dict[tuple[int, int, int], list[int]] = {}
    if layer is None:
        for sid, (mid, u) in leaf_front(h).items():
            groups.setdefault((mid, u.row, u.col), []).append(sid)
    else:
        for g in h.maps.values():
            if g.layer != layer:
                continue
            for u in g.winner_units():
                groups[(g.map_id, u.row, u.col)] = list(u.assigned)
    histograms: dict[tuple[int, int, int], dict[str, int]] = {}
    matched = 0
    total = 0
    for key, sids in groups.items():
        hist: dict[str, int] = {}
        for sid in sids:
            hist[dataset.labels[sid]] = hist.get(dataset.labels[sid], 0) + 1
        histograms[key] = hist
        majority = max(sorted(hist), key=lambda lb: hist[lb])
        matched += hist[majority]
        total += len(sids)
    return histograms, matched / total if total else 0.0
