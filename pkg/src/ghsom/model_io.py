"""Model persistence: a versioned, digest-protected structured-text format.

A ``.ghsom`` file is a JSON document: a small envelope carrying a format
version and a sha256 digest, and a payload holding the complete hierarchy.
Every float that matters for round-trip exactness (weights, trackers,
errors, normalization constants) is encoded as a hexfloat string, so a
loaded model reproduces assignments and error figures to the last bit.
Files are written atomically and contain no wall-clock state, so a given
trained model always serializes to the same bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from .errors import ModelFormatError
from .growth import AuditEntry, GhsomParams, GrowthParams, Hierarchy
from .adaptive import AdaptiveParams
from .policy import InteractiveParams
from .som import MapGrid, Schedules, Unit

__all__ = ["FORMAT_VERSION", "save_model", "load_model",
           "to_payload", "from_payload", "model_bytes"]

FORMAT_NAME = "ghsom-model"
FORMAT_VERSION = 1


def _hex(x: float) -> str:
    return float(x).hex()


def _unhex(s) -> float:
    try:
        return float.fromhex(s)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad float encoding: {s!r}") from exc


def _hex_vec(v) -> list[str]:
    return [_hex(x) for x in np.asarray(v, dtype=np.float64).ravel()]


def _unhex_vec(vs) -> np.ndarray:
    return np.array([_unhex(s) for s in vs], dtype=np.float64)


def _unit_payload(u: Unit) -> dict:
    return {
        "weight": _hex_vec(u.weight),
        "assigned": [int(i) for i in u.assigned],
        "qe": _hex(u.qe),
        "mqe": _hex(u.mqe),
        "wd": _hex(u.wd),
        "va": _hex(u.va),
        "act": _hex(u.act),
        "child": u.child,
    }


def _unit_from(payload: dict, row: int, col: int) -> Unit:
    u = Unit(row, col, _unhex_vec(payload["weight"]))
    u.assigned = [int(i) for i in payload["assigned"]]
    u.qe = _unhex(payload["qe"])
    u.mqe = _unhex(payload["mqe"])
    u.wd = _unhex(payload["wd"])
    u.va = _unhex(payload["va"])
    u.act = _unhex(payload["act"])
    u.child = payload["child"]
    return u


def _map_payload(g: MapGrid) -> dict:
    return {
        "map_id": g.map_id,
        "rows": g.rows,
        "cols": g.cols,
        "layer": g.layer,
        "parent": [g.parent[0], list(g.parent[1])] if g.parent else None,
        "status": g.status,
        "phases": g.phases,
        "n_samples": g.n_samples,
        "mqe_map": _hex(g.mqe_map),
        "qe_history": [
            {"phase": pt["phase"], "n_units": pt["n_units"],
             "mqe_map": _hex(pt["mqe_map"]),
             "mean_sample_qe": _hex(pt["mean_sample_qe"])}
            for pt in g.qe_history],
        "units": [[_unit_payload(u) if u is not None else None for u in row]
                  for row in g.units],
    }


def _map_from(payload: dict) -> MapGrid:
    rows, cols = payload["rows"], payload["cols"]
    parent = payload["parent"]
    g = MapGrid(payload["map_id"], rows, cols, payload["layer"],
                (parent[0], tuple(parent[1])) if parent else None,
                np.zeros((rows, cols, 1)))
    g.units = [
        [_unit_from(cell, r, c) if cell is not None else None
         for c, cell in enumerate(row)]
        for r, row in enumerate(payload["units"])]
    g.status = payload["status"]
    g.phases = payload["phases"]
    g.n_samples = payload["n_samples"]
    g.mqe_map = _unhex(payload["mqe_map"])
    g.qe_history = [
        {"phase": pt["phase"], "n_units": pt["n_units"],
         "mqe_map": _unhex(pt["mqe_map"]),
         "mean_sample_qe": _unhex(pt["mean_sample_qe"])}
        for pt in payload["qe_history"]]
    return g


def _params_payload(p: GhsomParams) -> dict:
    return {
        "growth": vars(p.growth).copy(),
        "schedules": vars(p.schedules).copy(),
        "interactive": vars(p.interactive).copy(),
        "adaptive": vars(p.adaptive).copy(),
    }


def _params_from(payload: dict) -> GhsomParams:
    return GhsomParams(
        growth=GrowthParams(**payload["growth"]),
        schedules=Schedules(**payload["schedules"]),
        interactive=InteractiveParams(**payload["interactive"]),
        adaptive=AdaptiveParams(**payload["adaptive"]),
    )


# The parameter block is useful on its own (session snapshots, overrides).
params_payload = _params_payload
params_from = _params_from


def to_payload(h: Hierarchy) -> dict:
    """The hierarchy as a JSON-ready dict (no envelope, no digest)."""
    return {
        "dataset_name": h.dataset_name,
        "n_samples": h.n_samples,
        "dim": h.dim,
        "seed": h.seed,
        "m0": _hex_vec(h.m0),
        "mqe0": _hex(h.mqe0),
        "qe0": _hex(h.qe0),
        "feature_names": h.feature_names,
        "norm_kind": h.norm_kind,
        "norm_a": _hex_vec(h.norm_a) if h.norm_a is not None else None,
        "norm_b": _hex_vec(h.norm_b) if h.norm_b is not None else None,
        "next_map_id": h.next_map_id,
        "params": _params_payload(h.params),
        "maps": [_map_payload(h.maps[mid]) for mid in sorted(h.maps)],
        "audit": [
            {"seq": a.seq, "map_id": a.map_id,
             "unit": list(a.unit) if a.unit else None, "rule": a.rule,
             "lhs": _hex(a.lhs), "rhs": _hex(a.rhs), "action": a.action,
             "manual": a.manual}
            for a in h.audit],
    }


def from_payload(payload: dict) -> Hierarchy:
    """Rebuild a hierarchy from its payload dict."""
    try:
        h = Hierarchy(
            m0=_unhex_vec(payload["m0"]),
            mqe0=_unhex(payload["mqe0"]),
            qe0=_unhex(payload["qe0"]),
            params=_params_from(payload["params"]),
            seed=payload["seed"],
            n_samples=payload["n_samples"],
            dim=payload["dim"],
            dataset_name=payload["dataset_name"],
        )
        h.feature_names = payload["feature_names"]
        h.norm_kind = payload["norm_kind"]
        if payload["norm_a"] is not None:
            h.norm_a = _unhex_vec(payload["norm_a"])
        if payload["norm_b"] is not None:
            h.norm_b = _unhex_vec(payload["norm_b"])
        h.next_map_id = payload["next_map_id"]
        for mp in payload["maps"]:
            h.maps[mp["map_id"]] = _map_from(mp)
        for ap in payload["audit"]:
            h.audit.append(AuditEntry(
                ap["seq"], ap["map_id"],
                tuple(ap["unit"]) if ap["unit"] else None, ap["rule"],
                _unhex(ap["lhs"]), _unhex(ap["rhs"]), ap["action"],
                ap["manual"]))
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"model payload is missing or malformed: {exc}") from exc
    return h


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def model_bytes(h: Hierarchy) -> bytes:
    """The exact bytes save_model writes for this hierarchy."""
    payload = to_payload(h)
    digest = hashlib.sha256(_canonical(payload)).hexdigest()
    doc = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "digest": digest,
        "payload": payload,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode() + b"\n"


def save_model(h: Hierarchy, path: str) -> None:
    """Write the hierarchy to ``path`` atomically."""
    data = model_bytes(h)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ghsom-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path: str) -> Hierarchy:
    """Read a model file; refuses wrong versions and corrupted content."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"{path}: not a parseable model file (byte offset {exc.pos}): {exc.msg}")
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ModelFormatError(f"{path}: not a {FORMAT_NAME} file")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: format_version {version} is not supported "
            f"(this build reads version {FORMAT_VERSION})")
    payload = doc.get("payload")
    if payload is None:
        raise ModelFormatError(f"{path}: missing payload")
    digest = hashlib.sha256(_canonical(payload)).hexdigest()
    if digest != doc.get("digest"):
        raise ModelFormatError(f"{path}: content digest mismatch, refusing to load")
    return from_payload(payload)
