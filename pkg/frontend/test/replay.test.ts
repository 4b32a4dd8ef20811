// Criterion: replaying a recorded (initial tree, event stream) pair
// must produce the same serialized view-model every time, and that
// view-model must equal the one built from the server's final tree.

import { describe, expect, it } from "vitest";

import { applyEvents, initialState } from "../src/state.js";
import type { SessionEvent, TreeDocument } from "../src/types.js";
import { buildTreeVm, stableSerialize } from "../src/viewmodel.js";
import { loadFixture } from "./load.js";

interface ReplayFixture {
  initial: { revision: number; tree: TreeDocument | null };
  events: SessionEvent[];
  finalTree: TreeDocument;
}

const fixture = loadFixture<ReplayFixture>("replay.json");

function replayOnce(): string {
  let state = initialState(fixture.initial.revision, fixture.initial.tree);
  state = applyEvents(state, fixture.events);
  expect(state.resyncNeeded).toBe(false);
  expect(state.tree).not.toBeNull();
  return stableSerialize(buildTreeVm(state.tree!));
}

describe("event replay", () => {
  it("renders to the identical serialized view-model across two runs", () => {
    const first = replayOnce();
    const second = replayOnce();
    expect(second).toBe(first);
  });

  it("converges to the server's own final tree", () => {
    const replayed = replayOnce();
    const serverSide = stableSerialize(buildTreeVm(fixture.finalTree));
    expect(replayed).toBe(serverSide);
  });

  it("ends at the revision of the last event", () => {
    let state = initialState(fixture.initial.revision, fixture.initial.tree);
    state = applyEvents(state, fixture.events);
    const last = fixture.events[fixture.events.length - 1];
    expect(state.revision).toBe(last.revision);
  });

  it("is insensitive to duplicate delivery", () => {
    // the push channel and command responses can hand the client the
    // same event twice; monotonicity must make that a no-op
    let state = initialState(fixture.initial.revision, fixture.initial.tree);
    for (const event of fixture.events) {
      state = applyEvents(state, [event, event]);
    }
    expect(stableSerialize(buildTreeVm(state.tree!))).toBe(replayOnce());
  });
});
