"""The live steering backend.

A session holds one dataset, one parameter set, and one hierarchy.  Clients
mutate it through commands (train, expand, prune, recluster, set_params,
undo) and observe it through reads and an event feed.  Every event carries
a strictly increasing revision number so clients can detect gaps and
resync from ``GET /tree``.

Mutating commands are serialized per session; each successful one pushes
the prior state onto a bounded undo ring, appends itself to the command
log, and emits exactly one tree_changed or map_changed event (recluster
emits map_changed then tree_changed, the one documented exception).
Replaying the command log against a session created with the same initial
conditions reproduces the final state exactly.
"""

from __future__ import annotations

import collections
import json
import os
import tempfile
import threading
import uuid
from typing import Any, Iterator

from fastapi import Body, FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response, StreamingResponse

from . import evaluate, model_io, treedoc
from .data import MINMAX, Dataset, load_csv, load_iris
from .errors import GhsomError, InputError, UnknownTargetError
from .growth import (GhsomParams, Hierarchy, expand_unit_manual,
                     prune_unit_subtree, recluster_map, require_map,
                     require_unit, train_hierarchy)

MUTATIONS = ("load_data", "start_train", "expand_unit", "prune_subtree",
             "recluster_map", "set_params", "undo")
READS = ("get_tree", "get_map", "get_unit_samples")
UNDO_RING = 32

_PARAM_KEYS = {
    "growth": ("tau1", "tau2", "max_map_units", "max_depth",
               "growth_mode", "tau1_reference"),
    "schedules": ("epochs", "lr_start", "lr_end", "radius_start", "radius_end"),
    "interactive": ("alpha", "beta", "enabled"),
    "adaptive": ("gamma_w", "gamma_v", "gamma_a",
                 "theta_g", "theta_e", "theta_c"),
}


def _dataset_from_spec(spec: dict) -> Dataset:
    """Build a dataset from a request body block.

    Either ``{"iris": true}`` or ``{"csv": "<text>", "name": ...,
    "label_column": ..., "delimiter": ..., "header": ..., "norm": ...}``.
    """
    if not isinstance(spec, dict):
        raise InputError("dataset spec must be an object")
    norm = spec.get("norm", MINMAX)
    if spec.get("iris"):
        return load_iris(norm_kind=norm)
    if "csv" not in spec:
        raise InputError("dataset spec needs either iris:true or a csv field")
    fd, path = tempfile.mkstemp(suffix=".csv", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(spec["csv"])
        return load_csv(path,
                        delimiter=spec.get("delimiter", ","),
                        header=spec.get("header", True),
                        label_column=spec.get("label_column"),
                        norm_kind=norm,
                        name=spec.get("name", "inline"))
    finally:
        os.unlink(path)


def merge_params(base: GhsomParams, overrides: dict) -> GhsomParams:
    """A validated copy of ``base`` with flat override keys applied."""
    payload = model_io.params_payload(base)
    known = {k for keys in _PARAM_KEYS.values() for k in keys}
    for key, value in overrides.items():
        if key == "interactive" and isinstance(value, bool):
            key = "enabled"
        if key not in known:
            raise InputError(f"unknown parameter {key!r}")
        for block, keys in _PARAM_KEYS.items():
            if key in keys:
                payload[block][key] = value
    merged = model_io.params_from(payload)
    merged.validate()
    return merged


class Session:
    """One steering session: state, event feed, undo ring, command log."""

    def __init__(self, sid: str, dataset_spec: dict | None,
                 param_overrides: dict | None, seed: int):
        self.id = sid
        self.lock = threading.RLock()
        self.changed = threading.Condition(self.lock)
        self.revision = 0
        self.events: list[dict] = []
        self.log: list[dict] = []
        self.snapshots: collections.deque = collections.deque(maxlen=UNDO_RING)
        self.initial = {"dataset": dataset_spec,
                        "params": param_overrides or {},
                        "seed": seed}
        self.seed = seed
        self.params = merge_params(GhsomParams(), param_overrides or {})
        self.dataset: Dataset | None = (
            _dataset_from_spec(dataset_spec) if dataset_spec else None)
        self.hierarchy: Hierarchy | None = None
        self.recluster_count = 0

    # -- event feed -----------------------------------------------------

    def emit(self, kind: str, body: dict) -> dict:
        with self.lock:
            self.revision += 1
            event = {"kind": kind, "revision": self.revision, "body": body}
            self.events.append(event)
            self.changed.notify_all()
            return event

    def events_since(self, since: int) -> list[dict]:
        return [e for e in self.events if e["revision"] > since]

    # -- snapshots ------------------------------------------------------

    def _capture(self) -> dict:
        return {
            "model": (model_io.to_payload(self.hierarchy)
                      if self.hierarchy is not None else None),
            "params": model_io.params_payload(self.params),
            "seed": self.seed,
            "dataset": self.dataset,
            "recluster_count": self.recluster_count,
        }

    def _restore(self, snap: dict) -> None:
        self.hierarchy = (model_io.from_payload(snap["model"])
                          if snap["model"] is not None else None)
        self.params = model_io.params_from(snap["params"])
        self.seed = snap["seed"]
        self.dataset = snap["dataset"]
        self.recluster_count = snap["recluster_count"]

    # -- views ----------------------------------------------------------

    def tree_doc(self) -> dict | None:
        if self.hierarchy is None:
            return None
        return treedoc.build_tree_document(self.hierarchy)

    def dataset_summary(self) -> dict | None:
        d = self.dataset
        if d is None:
            return None
        return {"name": d.name, "n_samples": d.n, "dim": d.dim,
                "feature_names": list(d.feature_names),
                "labeled": d.labels is not None,
                "norm": d.norm_kind}

    def _samples_by_id(self) -> dict[int, Any]:
        return {s.id: s for s in self.dataset.samples}

    def require_hierarchy(self) -> Hierarchy:
        if self.hierarchy is None:
            raise InputError("no trained hierarchy; run start_train first")
        return self.hierarchy

    def require_dataset(self) -> Dataset:
        if self.dataset is None:
            raise InputError("no dataset loaded; run load_data first")
        return self.dataset

    def unit_samples(self, map_id: int, row: int, col: int) -> dict:
        h = self.require_hierarchy()
        dataset = self.require_dataset()
        unit = require_unit(require_map(h, map_id), row, col)
        rows = [{"id": sid,
                 "features": [float(v) for v in dataset.raw(sid)],
                 "label": dataset.labels[sid] if dataset.labels else None}
                for sid in unit.assigned]
        return {"map_id": map_id, "unit": [row, col],
                "qe": unit.qe, "mqe": unit.mqe,
                "color": list(evaluate.unit_color(unit)),
                "child": unit.child,
                "feature_names": list(dataset.feature_names),
                "n_samples": len(rows), "samples": rows}

    # -- command execution ----------------------------------------------

    def apply(self, command: dict) -> dict:
        """Run one command; returns {result, events}; raises on rejection.

        Mutations are atomic: on failure the pre-command state is restored
        and only an error event is emitted by the HTTP layer.
        """
        kind = command.get("kind")
        with self.lock:
            if kind in READS:
                return {"result": self._read(kind, command), "events": []}
            if kind not in MUTATIONS:
                raise InputError(f"unknown command kind {kind!r}")
            emitted: list[dict] = []
            if kind != "undo":
                self.snapshots.append(self._capture())
                emitted.append(self.emit(
                    "snapshot_saved", {"command": kind,
                                       "held": len(self.snapshots)}))
            try:
                result = self._mutate(kind, command, emitted)
            except Exception:
                if kind != "undo":
                    self._restore(self.snapshots.pop())
                raise
            self.log.append(command)
            return {"result": result, "events": emitted}

    def _read(self, kind: str, command: dict) -> Any:
        target = command.get("target") or {}
        if kind == "get_tree":
            return self.tree_doc()
        h = self.require_hierarchy()
        if kind == "get_map":
            require_map(h, int(target.get("map", -1)))
            return treedoc.map_node(h, int(target["map"]))
        row, col = target.get("unit", (-1, -1))
        return self.unit_samples(int(target.get("map", -1)), int(row), int(col))

    def _mutate(self, kind: str, command: dict, emitted: list[dict]) -> Any:
        target = command.get("target") or {}
        payload = command.get("payload") or {}

        def progress(info: dict) -> None:
            emitted.append(self.emit("training_progress", info))

        def tree_event(reason: str, **extra) -> None:
            body = {"reason": reason, "tree": self.tree_doc(), **extra}
            emitted.append(self.emit("tree_changed", body))

        if kind == "load_data":
            self.dataset = _dataset_from_spec(payload)
            self.hierarchy = None
            tree_event("load_data", dataset=self.dataset_summary())
            return self.dataset_summary()

        if kind == "start_train":
            dataset = self.require_dataset()
            if "seed" in payload:
                self.seed = int(payload["seed"])
            self.hierarchy = train_hierarchy(dataset, self.params.copy(),
                                             self.seed, progress)
            tree_event("start_train", seed=self.seed)
            return {"depth": self.hierarchy.depth(),
                    "n_maps": len(self.hierarchy.maps)}

        if kind == "set_params":
            self.params = merge_params(self.params, payload)
            tree_event("set_params", params=model_io.params_payload(self.params))
            return model_io.params_payload(self.params)

        if kind == "undo":
            if not self.snapshots:
                raise InputError("nothing to undo")
            self._restore(self.snapshots.pop())
            tree_event("undo")
            return {"remaining": len(self.snapshots)}

        h = self.require_hierarchy()
        map_id = int(target.get("map", -1))

        if kind == "expand_unit":
            row, col = (int(v) for v in target.get("unit", (-1, -1)))
            child = expand_unit_manual(h, self._samples_by_id(),
                                       map_id, row, col, progress)
            tree_event("expand_unit", map_id=map_id, unit=[row, col],
                       child=child.map_id)
            return {"child": child.map_id}

        if kind == "prune_subtree":
            row, col = (int(v) for v in target.get("unit", (-1, -1)))
            removed = prune_unit_subtree(h, map_id, row, col)
            tree_event("prune_subtree", map_id=map_id, unit=[row, col],
                       removed=removed)
            return {"removed": removed}

        # recluster_map: map_changed for the rebuilt map, then tree_changed
        # for the whole document, the one two-event mutation.
        overrides = {k: v for k, v in payload.items() if k != "seed"}
        params = merge_params(self.params, overrides) if overrides else None
        nonce = int(payload.get("seed", self.recluster_count))
        recluster_map(h, self._samples_by_id(), map_id, nonce, params, progress)
        self.recluster_count += 1
        emitted.append(self.emit(
            "map_changed", {"map_id": map_id, "nonce": nonce,
                            "map": treedoc.map_node(h, map_id)}))
        tree_event("recluster_map", map_id=map_id)
        return {"map_id": map_id, "nonce": nonce}


def create_app() -> FastAPI:
    """A fresh service instance with its own session registry."""
    app = FastAPI(title="ghsom steering service")
    # the browser client may be served from any static host; there is no
    # auth to leak (deploy behind a proxy), so open CORS is fine
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions

    def get_session(sid: str) -> Session:
        session = sessions.get(sid)
        if session is None:
            raise UnknownTargetError(f"no session {sid}")
        return session

    def failure(exc: Exception) -> JSONResponse:
        status = 404 if isinstance(exc, UnknownTargetError) else \
            400 if isinstance(exc, InputError) else 500
        return JSONResponse(status_code=status,
                            content={"ok": False, "error": str(exc)})

    @app.post("/session", status_code=201)
    def create_session(body: dict | None = Body(default=None)) -> Any:
        body = body or {}
        sid = uuid.uuid4().hex[:12]
        try:
            session = Session(sid, body.get("dataset"),
                              body.get("params"), int(body.get("seed", 0)))
        except GhsomError as exc:
            return failure(exc)
        sessions[sid] = session
        return {"ok": True, "session_id": sid, "revision": session.revision,
                "dataset": session.dataset_summary()}

    @app.post("/session/{sid}/command")
    def run_command(sid: str, command: dict = Body(...)) -> Any:
        try:
            session = get_session(sid)
        except GhsomError as exc:
            return failure(exc)
        with session.lock:
            try:
                out = session.apply(command)
            except GhsomError as exc:
                session.emit("error", {"message": str(exc),
                                       "command": command.get("kind")})
                return failure(exc)
            return {"ok": True, "revision": session.revision,
                    "result": out["result"], "events": out["events"]}

    @app.get("/session/{sid}/tree")
    def get_tree(sid: str) -> Any:
        try:
            session = get_session(sid)
        except GhsomError as exc:
            return failure(exc)
        with session.lock:
            return {"ok": True, "revision": session.revision,
                    "tree": session.tree_doc(),
                    "dataset": session.dataset_summary(),
                    "params": model_io.params_payload(session.params)}

    @app.get("/session/{sid}/map/{mid}")
    def get_map(sid: str, mid: int) -> Any:
        try:
            session = get_session(sid)
            with session.lock:
                h = session.require_hierarchy()
                require_map(h, mid)
                return {"ok": True, "revision": session.revision,
                        "map": treedoc.map_node(h, mid)}
        except GhsomError as exc:
            return failure(exc)

    @app.get("/session/{sid}/unit/{mid}/{row}/{col}/samples")
    def get_unit_samples(sid: str, mid: int, row: int, col: int) -> Any:
        try:
            session = get_session(sid)
            with session.lock:
                table = session.unit_samples(mid, row, col)
                return {"ok": True, "revision": session.revision, **table}
        except GhsomError as exc:
            return failure(exc)

    @app.get("/session/{sid}/export")
    def export_model(sid: str) -> Any:
        try:
            session = get_session(sid)
            with session.lock:
                h = session.require_hierarchy()
                return Response(content=model_io.model_bytes(h),
                                media_type="application/json")
        except GhsomError as exc:
            return failure(exc)

    @app.get("/session/{sid}/events")
    def poll_events(sid: str, since: int = 0) -> Any:
        try:
            session = get_session(sid)
        except GhsomError as exc:
            return failure(exc)
        with session.lock:
            return {"ok": True, "revision": session.revision,
                    "events": session.events_since(since)}

    @app.get("/session/{sid}/log")
    def get_log(sid: str) -> Any:
        try:
            session = get_session(sid)
        except GhsomError as exc:
            return failure(exc)
        with session.lock:
            return {"ok": True, "revision": session.revision,
                    "initial": session.initial, "commands": session.log}

    @app.get("/session/{sid}/stream")
    def stream_events(sid: str, since: int = 0) -> Any:
        try:
            session = get_session(sid)
        except GhsomError as exc:
            return failure(exc)

        def feed() -> Iterator[str]:
            cursor = since
            while True:
                with session.lock:
                    fresh = session.events_since(cursor)
                    if not fresh:
                        got = session.changed.wait(timeout=15.0)
                        fresh = session.events_since(cursor)
                        if not fresh and not got:
                            yield ": keep-alive\n\n"
                            continue
                for event in fresh:
                    cursor = event["revision"]
                    yield (f"id: {event['revision']}\n"
                           f"data: {json.dumps(event)}\n\n")

        return StreamingResponse(feed(), media_type="text/event-stream")

    return app
