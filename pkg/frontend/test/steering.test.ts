// @vitest-environment jsdom

// Criterion: the scripted steering flow. Load an iris session, click a
// unit (the table must show all four features plus the label), expand
// it, prune it back, re-cluster a map. After every mutation the
// rendered tree must match the server's own export document, and the
// client must issue exactly the documented requests.

import { beforeEach, describe, expect, it } from "vitest";

import { ExplorerApp, type AppDom } from "../src/controller.js";
import type { Transport } from "../src/transport.js";
import type {
  CommandResponse,
  CreateResponse,
  SessionCommand,
  TreeDocument,
  TreeResponse,
  UnitSamples,
} from "../src/types.js";
import { buildTreeVm, stableSerialize } from "../src/viewmodel.js";
import { loadFixture } from "./load.js";

interface MutationStep {
  action: "train" | "expand" | "prune" | "recluster";
  command: SessionCommand;
  response: CommandResponse;
  serverTree: TreeDocument;
}

interface InspectStep {
  action: "inspect";
  target: [number, number, number];
  response: UnitSamples;
}

interface SteeringFixture {
  create: { request: Record<string, unknown>; response: CreateResponse };
  initialTree: TreeResponse;
  steps: (MutationStep | InspectStep)[];
}

const fixture = loadFixture<SteeringFixture>("steering.json");

type Expected =
  | { call: "create"; respond: CreateResponse }
  | { call: "tree"; respond: TreeResponse }
  | { call: "command"; kind: string; respond: CommandResponse }
  | { call: "samples"; target: [number, number, number]; respond: UnitSamples };

// Serves the recorded conversation in order; any out-of-script request
// is a test failure.
class ScriptedTransport implements Transport {
  constructor(private script: Expected[]) {}

  private next(call: string): Expected {
    const expected = this.script.shift();
    if (!expected || expected.call !== call) {
      throw new Error(
        `unscripted ${call}; expected ${expected ? expected.call : "nothing"}`);
    }
    return expected;
  }

  done(): boolean {
    return this.script.length === 0;
  }

  async createSession(): Promise<CreateResponse> {
    const step = this.next("create") as Extract<Expected, { call: "create" }>;
    return step.respond;
  }

  async tree(): Promise<TreeResponse> {
    const step = this.next("tree") as Extract<Expected, { call: "tree" }>;
    return step.respond;
  }

  async command(_sid: string, command: SessionCommand): Promise<CommandResponse> {
    const step = this.next("command") as Extract<Expected, { call: "command" }>;
    expect(command.kind).toBe(step.kind);
    return step.respond;
  }

  async unitSamples(
    _sid: string, mapId: number, row: number, col: number,
  ): Promise<UnitSamples> {
    const step = this.next("samples") as Extract<Expected, { call: "samples" }>;
    expect([mapId, row, col]).toEqual(step.target);
    return step.respond;
  }
}

function buildScript(): Expected[] {
  const script: Expected[] = [
    { call: "create", respond: fixture.create.response },
    { call: "tree", respond: fixture.initialTree },
  ];
  for (const step of fixture.steps) {
    if (step.action === "inspect") {
      script.push({ call: "samples", target: step.target, respond: step.response });
    } else {
      script.push({
        call: "command",
        kind: step.command.kind,
        respond: step.response,
      });
    }
  }
  return script;
}

function serializeDoc(doc: TreeDocument): string {
  return stableSerialize(buildTreeVm(doc));
}

function mutation(action: MutationStep["action"]): MutationStep {
  const step = fixture.steps.find((s) => s.action === action);
  if (!step || step.action === "inspect") throw new Error(`no ${action} step`);
  return step;
}

function inspection(): InspectStep {
  const step = fixture.steps.find((s) => s.action === "inspect");
  if (!step || step.action !== "inspect") throw new Error("no inspect step");
  return step;
}

const flush = () => new Promise((resolve) => setTimeout(resolve, 0));

describe("scripted steering session", () => {
  let dom: AppDom;
  let app: ExplorerApp;
  let transport: ScriptedTransport;

  beforeEach(() => {
    document.body.innerHTML =
      '<div id="t"></div><div id="i"></div><div id="s"></div><div id="q"></div>';
    dom = {
      tree: document.getElementById("t")!,
      inspector: document.getElementById("i")!,
      status: document.getElementById("s")!,
      spark: document.getElementById("q")!,
    };
    transport = new ScriptedTransport(buildScript());
    app = new ExplorerApp(transport, dom);
  });

  it("walks the whole flow against the recorded server", async () => {
    // session starts empty
    await app.createSession(fixture.create.request);
    expect(app.state.tree).toBeNull();
    expect(dom.tree.textContent).toContain("No hierarchy");

    // train: rendered tree must equal the server document
    const train = mutation("train");
    await app.train();
    expect(app.treeSerialization()).toBe(serializeDoc(train.serverTree));
    expect(dom.tree.querySelectorAll(".map-panel").length)
      .toBe(train.serverTree.maps.length);
    expect(dom.spark.querySelector("polyline")).not.toBeNull();

    // click the recorded unit through the DOM
    const ins = inspection();
    const [mid, row, col] = ins.target;
    const btn = dom.tree.querySelector<HTMLButtonElement>(
      `button[data-map="${mid}"][data-row="${row}"][data-col="${col}"]`);
    expect(btn).not.toBeNull();
    btn!.click();
    await flush();

    // the table shows every feature plus the label
    const headers = Array.from(dom.inspector.querySelectorAll("th"))
      .map((th) => th.textContent);
    expect(headers).toEqual(
      ["id", ...ins.response.feature_names, "label"]);
    expect(ins.response.feature_names.length).toBe(4);
    const rows = dom.inspector.querySelectorAll("tbody tr");
    expect(rows.length).toBe(ins.response.n_samples);
    for (const tr of rows) {
      expect(tr.lastElementChild!.textContent).toBe("Setosa");
    }

    // expand the selected unit: a child grid appears
    const expand = mutation("expand");
    const before = app.treeSerialization();
    await app.expandSelected();
    expect(app.treeSerialization()).toBe(serializeDoc(expand.serverTree));
    expect(dom.tree.querySelectorAll(".map-panel").length)
      .toBe(expand.serverTree.maps.length);

    // prune it: the view matches the pre-expand state again
    const prune = mutation("prune");
    await app.pruneSelected();
    expect(app.treeSerialization()).toBe(serializeDoc(prune.serverTree));
    expect(app.treeSerialization()).toBe(before);

    // re-cluster with a pinned nonce
    const recluster = mutation("recluster");
    app.selected = {
      mapId: recluster.command.target!.map!,
      row: 0,
      col: 0,
    };
    await app.reclusterSelectedMap(
      recluster.command.payload as Record<string, unknown>);
    expect(app.treeSerialization()).toBe(serializeDoc(recluster.serverTree));

    expect(transport.done()).toBe(true);
    expect(app.state.lastError).toBeNull();
    expect(app.resyncCount).toBe(0);
  });

  it("keeps the latest click when two race", async () => {
    const ins = inspection();
    const train = mutation("train");
    transport = new ScriptedTransport([
      { call: "create", respond: fixture.create.response },
      { call: "tree", respond: fixture.initialTree },
      { call: "command", kind: "start_train", respond: train.response },
      { call: "samples", target: ins.target, respond: ins.response },
      { call: "samples", target: ins.target, respond: ins.response },
    ]);
    app = new ExplorerApp(transport, dom);
    await app.createSession(fixture.create.request);
    await app.train();

    const [mid, row, col] = ins.target;
    const first = app.clickUnit({ mapId: mid, row, col });
    const second = app.clickUnit({ mapId: mid, row, col });
    await Promise.all([first, second]);
    expect(app.inspector).not.toBeNull();
    expect(app.inspector!.n_samples).toBe(ins.response.n_samples);
    expect(transport.done()).toBe(true);
  });
});
