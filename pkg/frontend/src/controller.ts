// Wires transport, state, and rendering together. All user actions and
// all incoming events funnel through this class, in revision order, so
// the rendered page is always a function of (last tree, events).

import {
  applyEvent,
  initialState,
  resynced,
  type UiState,
} from "./state.js";
import { ServiceError, type Transport } from "./transport.js";
import type {
  SessionCommand,
  SessionEvent,
  UnitSamples,
} from "./types.js";
import {
  buildTreeVm,
  SchemaMismatch,
  stableSerialize,
  type TreeVm,
} from "./viewmodel.js";
import {
  renderBanner,
  renderInspector,
  renderSparkline,
  renderTree,
  type UnitRef,
} from "./render.js";

export interface AppDom {
  tree: HTMLElement;
  inspector: HTMLElement;
  status: HTMLElement;
  spark: HTMLElement;
}

export class ExplorerApp {
  state: UiState = initialState(0, null);
  sid: string | null = null;
  selected: UnitRef | null = null;
  inspector: UnitSamples | null = null;
  pending: string | null = null;
  resyncCount = 0;

  private resyncing: Promise<void> | null = null;
  private clickToken = 0;

  constructor(readonly transport: Transport, readonly dom: AppDom) {}

  async createSession(body: Record<string, unknown>): Promise<void> {
    const created = await this.transport.createSession(body);
    this.sid = created.session_id;
    const doc = await this.transport.tree(this.sid);
    this.state = initialState(doc.revision, doc.tree);
    this.selected = null;
    this.inspector = null;
    this.render();
  }

  // -- events ---------------------------------------------------------

  handleEvent(event: SessionEvent): void {
    this.state = applyEvent(this.state, event);
    if (this.state.resyncNeeded) {
      void this.resyncNow();
    }
    this.render();
  }

  // One resync per detected gap: while the tree fetch is in flight all
  // further events are swallowed by the state layer, and late events
  // older than the fetched revision fall to the monotonicity check.
  resyncNow(): Promise<void> {
    if (this.resyncing) return this.resyncing;
    if (!this.sid) return Promise.resolve();
    const sid = this.sid;
    this.resyncing = (async () => {
      try {
        const doc = await this.transport.tree(sid);
        this.state = resynced(this.state, doc.revision, doc.tree);
        this.resyncCount += 1;
      } finally {
        this.resyncing = null;
      }
      this.render();
    })();
    return this.resyncing;
  }

  // resolves once no resync is in flight
  async settle(): Promise<void> {
    while (this.resyncing) {
      await this.resyncing;
    }
  }

  // -- commands -------------------------------------------------------

  async runCommand(command: SessionCommand): Promise<boolean> {
    if (!this.sid) return false;
    this.pending = command.kind;
    this.render();
    try {
      const resp = await this.transport.command(this.sid, command);
      for (const event of resp.events) {
        this.state = applyEvent(this.state, event);
      }
      if (this.state.resyncNeeded) {
        await this.resyncNow();
      }
      return true;
    } catch (err) {
      if (err instanceof ServiceError) {
        this.state = { ...this.state, lastError: err.message };
        return false;
      }
      throw err;
    } finally {
      this.pending = null;
      this.render();
    }
  }

  train(): Promise<boolean> {
    return this.runCommand({ kind: "start_train" });
  }

  expandSelected(): Promise<boolean> {
    if (!this.selected) return Promise.resolve(false);
    const { mapId, row, col } = this.selected;
    return this.runCommand({
      kind: "expand_unit",
      target: { map: mapId, unit: [row, col] },
    });
  }

  pruneSelected(): Promise<boolean> {
    if (!this.selected) return Promise.resolve(false);
    const { mapId, row, col } = this.selected;
    return this.runCommand({
      kind: "prune_subtree",
      target: { map: mapId, unit: [row, col] },
    });
  }

  reclusterSelectedMap(overrides?: Record<string, unknown>): Promise<boolean> {
    if (!this.selected) return Promise.resolve(false);
    return this.runCommand({
      kind: "recluster_map",
      target: { map: this.selected.mapId },
      payload: overrides ?? {},
    });
  }

  undo(): Promise<boolean> {
    return this.runCommand({ kind: "undo" });
  }

  setParams(payload: Record<string, unknown>): Promise<boolean> {
    return this.runCommand({ kind: "set_params", payload });
  }

  // -- inspector ------------------------------------------------------

  async clickUnit(ref: UnitRef): Promise<void> {
    if (!this.sid) return;
    const token = ++this.clickToken;
    this.selected = ref;
    this.render();
    const table = await this.fetchSamples(ref);
    // latest click wins; a slower earlier fetch must not overwrite
    if (token !== this.clickToken) return;
    this.inspector = table;
    this.render();
  }

  private async fetchSamples(ref: UnitRef): Promise<UnitSamples | null> {
    if (!this.sid) return null;
    try {
      return await this.transport.unitSamples(this.sid, ref.mapId, ref.row, ref.col);
    } catch (err) {
      if (err instanceof ServiceError && err.status === 404) {
        // the unit may be gone in a newer revision: resync, retry once
        await this.resyncNow();
        try {
          return await this.transport.unitSamples(this.sid, ref.mapId, ref.row, ref.col);
        } catch {
          return null;
        }
      }
      throw err;
    }
  }

  // -- rendering ------------------------------------------------------

  treeVm(): TreeVm | null {
    return this.state.tree ? buildTreeVm(this.state.tree) : null;
  }

  // stable serialization of what the tree panel currently shows; the
  // steering tests compare this against the server's own document
  treeSerialization(): string | null {
    const vm = this.treeVm();
    return vm ? stableSerialize(vm) : null;
  }

  render(): void {
    let vm: TreeVm | null;
    try {
      vm = this.treeVm();
    } catch (err) {
      if (err instanceof SchemaMismatch) {
        renderBanner(this.dom.tree, err.message);
        this.dom.status.textContent = "schema mismatch";
        return;
      }
      throw err;
    }
    renderTree(this.dom.tree, vm, this.selected, (ref) => void this.clickUnit(ref));
    renderInspector(this.dom.inspector, this.inspector);
    renderSparkline(this.dom.spark, this.state.qeTrail);

    const bits: string[] = [];
    if (this.pending) bits.push(`running ${this.pending}...`);
    if (this.state.snapshotsHeld > 0) bits.push(`${this.state.snapshotsHeld} undo steps`);
    if (this.state.lastError) bits.push(`rejected: ${this.state.lastError}`);
    this.dom.status.textContent = bits.join("  ·  ");
    this.dom.status.classList.toggle("has-error", this.state.lastError !== null);
    this.dom.status.classList.toggle("is-pending", this.pending !== null);
  }
}
