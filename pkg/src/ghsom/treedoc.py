"""The tree export document: one versioned schema for CLI export, the
session service's read endpoints, and the browser UI.

The document is display-oriented: map geometry, parent/child links, unit
colors and sample counts, plus enough error statistics to label panels.
It deliberately omits weight vectors and assignments; the model file owns
those.
"""

from __future__ import annotations

import json

from .evaluate import unit_color
from .growth import Hierarchy

__all__ = ["SCHEMA_NAME", "SCHEMA_VERSION", "build_tree_document",
           "map_node", "document_json"]

SCHEMA_NAME = "ghsom-tree"
SCHEMA_VERSION = 1


def map_node(h: Hierarchy, map_id: int) -> dict:
    """One map of the hierarchy as a document node."""
    g = h.maps[map_id]
    cells = []
    for r in range(g.rows):
        row = []
        for c in range(g.cols):
            u = g.units[r][c]
            if u is None:
                row.append(None)
                continue
            row.append({
                "row": r,
                "col": c,
                "color": list(unit_color(u)),
                "n_samples": len(u.assigned),
                "qe": u.qe,
                "mqe": u.mqe,
                "child": u.child,
            })
        cells.append(row)
    return {
        "map_id": g.map_id,
        "layer": g.layer,
        "rows": g.rows,
        "cols": g.cols,
        "parent": ({"map_id": g.parent[0], "unit": list(g.parent[1])}
                   if g.parent else None),
        "status": g.status,
        "n_samples": g.n_samples,
        "mqe_map": g.mqe_map,
        "units": cells,
    }


def build_tree_document(h: Hierarchy) -> dict:
    """The whole hierarchy as a display document."""
    return {
        "schema": SCHEMA_NAME,
        "schema_version": SCHEMA_VERSION,
        "dataset": {
            "name": h.dataset_name,
            "feature_names": h.feature_names,
            "n_samples": h.n_samples,
            "dim": h.dim,
        },
        "seed": h.seed,
        "stats": {
            "mqe0": h.mqe0,
            "qe0": h.qe0,
            "depth": h.depth(),
            "n_maps": len(h.maps),
            "n_units": sum(g.alive_count() for g in h.maps.values()),
        },
        "root": 0,
        "maps": [map_node(h, mid) for mid in sorted(h.maps)],
    }


def document_json(doc: dict) -> str:
    """Stable serialization of a document (sorted keys, newline-terminated)."""
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
