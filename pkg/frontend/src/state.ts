// Pure session state. The UI renders a function of (last full tree,
// events applied in revision order); applyEvent is the only way state
// advances, so replaying the same inputs gives the same state.

import type { MapNode, SessionEvent, TreeDocument } from "./types.js";

export interface QePoint {
  mapId: number;
  layer: number;
  phase: number;
  nUnits: number;
  mqeMap: number;
}

export interface UiState {
  revision: number;
  tree: TreeDocument | null;
  qeTrail: QePoint[];
  snapshotsHeld: number;
  lastError: string | null;
  // set when an event arrived with a revision gap; the controller owns
  // clearing it by fetching a fresh tree
  resyncNeeded: boolean;
}

export function initialState(revision: number, tree: TreeDocument | null): UiState {
  return {
    revision,
    tree,
    qeTrail: [],
    snapshotsHeld: 0,
    lastError: null,
    resyncNeeded: false,
  };
}

const QE_TRAIL_LIMIT = 400;

function patchMap(tree: TreeDocument, map: MapNode): TreeDocument {
  const maps = tree.maps.map((m) => (m.map_id === map.map_id ? map : m));
  return { ...tree, maps };
}

export function applyEvent(state: UiState, event: SessionEvent): UiState {
  // revision monotonicity: duplicates and replays are dropped
  if (event.revision <= state.revision) {
    return state;
  }
  // a gap means missed events; freeze and wait for a resync rather than
  // apply out-of-order state
  if (event.revision > state.revision + 1 || state.resyncNeeded) {
    if (state.resyncNeeded) return state;
    return { ...state, resyncNeeded: true };
  }

  const body = event.body;
  switch (event.kind) {
    case "tree_changed":
      return {
        ...state,
        revision: event.revision,
        tree: (body.tree as TreeDocument | null) ?? null,
        lastError: null,
      };
    case "map_changed": {
      const map = body.map as MapNode | undefined;
      if (!state.tree || !map) {
        return { ...state, revision: event.revision };
      }
      return { ...state, revision: event.revision, tree: patchMap(state.tree, map) };
    }
    case "training_progress": {
      const point: QePoint = {
        mapId: Number(body.map_id),
        layer: Number(body.layer),
        phase: Number(body.phase),
        nUnits: Number(body.n_units),
        mqeMap: Number(body.mqe_map),
      };
      const qeTrail = [...state.qeTrail, point].slice(-QE_TRAIL_LIMIT);
      return { ...state, revision: event.revision, qeTrail };
    }
    case "snapshot_saved":
      return {
        ...state,
        revision: event.revision,
        snapshotsHeld: Number(body.held ?? state.snapshotsHeld),
      };
    case "error":
      return {
        ...state,
        revision: event.revision,
        lastError: String(body.message ?? "command failed"),
      };
    default:
      // unknown event kinds still advance the revision so the feed
      // stays gap-free when the server grows new kinds
      return { ...state, revision: event.revision };
  }
}

export function applyEvents(state: UiState, events: SessionEvent[]): UiState {
  let s = state;
  for (const event of events) {
    s = applyEvent(s, event);
  }
  return s;
}

export function resynced(state: UiState, revision: number, tree: TreeDocument | null): UiState {
  return { ...state, revision, tree, resyncNeeded: false };
}
