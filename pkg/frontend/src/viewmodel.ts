// Tree document -> display view-model. The view-model is plain data
// with a stable serialization, which is what the replay tests snapshot;
// the DOM layer renders it without adding information of its own.

import type { TreeDocument, UnitCell } from "./types.js";
import { SCHEMA_NAME, SCHEMA_VERSION } from "./types.js";

export interface CellVm {
  row: number;
  col: number;
  rgb: string;
  count: number;
  qe: number;
  child: number | null;
}

export interface PanelVm {
  mapId: number;
  layer: number;
  rows: number;
  cols: number;
  status: string;
  nSamples: number;
  mqeMap: number;
  parentUnit: [number, number] | null;
  cells: (CellVm | null)[][];
  children: PanelVm[];
}

export interface TreeVm {
  dataset: string;
  dim: number;
  nSamples: number;
  seed: number;
  depth: number;
  nMaps: number;
  nUnits: number;
  root: PanelVm;
}

export class SchemaMismatch extends Error {}

function cellVm(cell: UnitCell | null): CellVm | null {
  if (cell === null) return null;
  const [r, g, b] = cell.color;
  return {
    row: cell.row,
    col: cell.col,
    rgb: `rgb(${r},${g},${b})`,
    count: cell.n_samples,
    qe: cell.qe,
    child: cell.child,
  };
}

export function buildTreeVm(doc: TreeDocument): TreeVm {
  if (doc.schema !== SCHEMA_NAME || doc.schema_version !== SCHEMA_VERSION) {
    throw new SchemaMismatch(
      `document is ${doc.schema} v${doc.schema_version}, ` +
      `this client renders ${SCHEMA_NAME} v${SCHEMA_VERSION}`);
  }
  const byId = new Map(doc.maps.map((m) => [m.map_id, m]));

  const panel = (mapId: number): PanelVm => {
    const m = byId.get(mapId);
    if (!m) throw new SchemaMismatch(`document references missing map ${mapId}`);
    const cells = m.units.map((row) => row.map(cellVm));
    const children: PanelVm[] = [];
    for (const row of m.units) {
      for (const cell of row) {
        if (cell && cell.child !== null) {
          children.push(panel(cell.child));
        }
      }
    }
    return {
      mapId: m.map_id,
      layer: m.layer,
      rows: m.rows,
      cols: m.cols,
      status: m.status,
      nSamples: m.n_samples,
      mqeMap: m.mqe_map,
      parentUnit: m.parent ? m.parent.unit : null,
      cells,
      children,
    };
  };

  return {
    dataset: doc.dataset.name,
    dim: doc.dataset.dim,
    nSamples: doc.dataset.n_samples,
    seed: doc.seed,
    depth: doc.stats.depth,
    nMaps: doc.stats.n_maps,
    nUnits: doc.stats.n_units,
    root: panel(doc.root),
  };
}

// Deterministic serialization: keys sorted at every level, so two
// structurally equal view-models stringify identically regardless of
// construction order.
export function stableSerialize(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(stableSerialize).join(",") + "]";
  }
  const obj = value as Record<string, unknown>;
  const keys = Object.keys(obj).sort();
  const parts = keys.map((k) => JSON.stringify(k) + ":" + stableSerialize(obj[k]));
  return "{" + parts.join(",") + "}";
}
