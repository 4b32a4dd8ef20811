// @vitest-environment jsdom

// Criterion: a revision gap in the event stream triggers exactly one
// resync via the tree endpoint, after which the client state equals the
// server's document.

import { describe, expect, it, vi } from "vitest";

import { ExplorerApp, type AppDom } from "../src/controller.js";
import { initialState } from "../src/state.js";
import type { Transport } from "../src/transport.js";
import type { SessionEvent, TreeDocument, TreeResponse } from "../src/types.js";
import { buildTreeVm, stableSerialize } from "../src/viewmodel.js";
import { loadFixture } from "./load.js";

interface GapFixture {
  initial: { revision: number; tree: TreeDocument };
  events: SessionEvent[];
  resync: TreeResponse;
}

const fixture = loadFixture<GapFixture>("gap.json");

function dom(): AppDom {
  return {
    tree: document.createElement("div"),
    inspector: document.createElement("div"),
    status: document.createElement("div"),
    spark: document.createElement("div"),
  };
}

function appWithGappyFeed() {
  const treeFetch = vi.fn(async () => fixture.resync);
  const transport: Transport = {
    createSession: () => Promise.reject(new Error("not in this test")),
    command: () => Promise.reject(new Error("not in this test")),
    unitSamples: () => Promise.reject(new Error("not in this test")),
    tree: treeFetch,
  };
  const app = new ExplorerApp(transport, dom());
  app.sid = "recorded";
  app.state = initialState(fixture.initial.revision, fixture.initial.tree);
  return { app, treeFetch };
}

describe("gap recovery", () => {
  it("has a real hole in the fixture", () => {
    const revs = fixture.events.map((e) => e.revision);
    const holes = revs.filter((r, i) => i > 0 && r > revs[i - 1] + 1);
    expect(holes.length).toBe(1);
  });

  it("resyncs exactly once and converges to the server tree", async () => {
    const { app, treeFetch } = appWithGappyFeed();
    for (const event of fixture.events) {
      app.handleEvent(event);
    }
    await app.settle();

    expect(treeFetch).toHaveBeenCalledTimes(1);
    expect(app.resyncCount).toBe(1);
    expect(app.state.resyncNeeded).toBe(false);
    expect(app.state.revision).toBe(fixture.resync.revision);

    const rendered = app.treeSerialization();
    const server = stableSerialize(buildTreeVm(fixture.resync.tree!));
    expect(rendered).toBe(server);
  });

  it("drops stale events arriving after the resync", async () => {
    const { app } = appWithGappyFeed();
    for (const event of fixture.events) {
      app.handleEvent(event);
    }
    await app.settle();
    const settled = app.treeSerialization();

    // late duplicates from before the resync point must change nothing
    for (const event of fixture.events) {
      app.handleEvent(event);
    }
    await app.settle();
    expect(app.resyncCount).toBe(1);
    expect(app.treeSerialization()).toBe(settled);
  });
});
