// Protocol types for the steering service. These mirror the documented
// HTTP bodies and the tree display document; nothing here is private to
// this client.

export interface DatasetSummary {
  name: string;
  n_samples: number;
  dim: number;
  feature_names: string[];
  labeled: boolean;
  norm: string;
}

export interface UnitCell {
  row: number;
  col: number;
  color: [number, number, number];
  n_samples: number;
  qe: number;
  mqe: number;
  child: number | null;
}

export interface MapNode {
  map_id: number;
  layer: number;
  rows: number;
  cols: number;
  parent: { map_id: number; unit: [number, number] } | null;
  status: string;
  n_samples: number;
  mqe_map: number;
  units: (UnitCell | null)[][];
}

export interface TreeDocument {
  schema: string;
  schema_version: number;
  dataset: { name: string; feature_names: string[]; n_samples: number; dim: number };
  seed: number;
  stats: { mqe0: number; qe0: number; depth: number; n_maps: number; n_units: number };
  root: number;
  maps: MapNode[];
}

export interface SessionEvent {
  kind: string;
  revision: number;
  body: Record<string, unknown>;
}

export interface SampleRow {
  id: number;
  features: number[];
  label: string | null;
}

export interface UnitSamples {
  map_id: number;
  unit: [number, number];
  qe: number;
  mqe: number;
  color: [number, number, number];
  child: number | null;
  feature_names: string[];
  n_samples: number;
  samples: SampleRow[];
}

export interface SessionCommand {
  kind: string;
  target?: { map?: number; unit?: [number, number] };
  payload?: Record<string, unknown>;
}

export interface CommandResponse {
  ok: boolean;
  revision: number;
  result: unknown;
  events: SessionEvent[];
}

export interface TreeResponse {
  ok: boolean;
  revision: number;
  tree: TreeDocument | null;
  dataset: DatasetSummary | null;
  params: Record<string, Record<string, unknown>>;
}

export interface CreateResponse {
  ok: boolean;
  session_id: string;
  revision: number;
  dataset: DatasetSummary | null;
}

export const SCHEMA_NAME = "ghsom-tree";
export const SCHEMA_VERSION = 1;
