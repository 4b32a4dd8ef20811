// Page bootstrap: session form, steering buttons, parameter drawer,
// and the SSE wiring that keeps the tree live.

import { ExplorerApp } from "./controller.js";
import { HttpTransport } from "./transport.js";
import type { SessionEvent } from "./types.js";

function need(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function numberOrNull(input: HTMLInputElement): number | null {
  const v = input.value.trim();
  return v === "" ? null : Number(v);
}

function boot(): void {
  const params = new URLSearchParams(location.search);
  const base = params.get("api") ?? "http://127.0.0.1:8800";
  const transport = new HttpTransport(base);
  const app = new ExplorerApp(transport, {
    tree: need("tree"),
    inspector: need("inspector"),
    status: need("status"),
    spark: need("spark"),
  });

  let source: EventSource | null = null;

  const connectStream = () => {
    if (!app.sid) return;
    source?.close();
    source = new EventSource(transport.streamUrl(app.sid, app.state.revision));
    source.onmessage = (msg) => {
      try {
        app.handleEvent(JSON.parse(msg.data) as SessionEvent);
      } catch {
        // non-JSON keep-alives are fine to drop
      }
    };
  };

  const datasetSel = need("dataset") as HTMLSelectElement;
  const csvInput = need("csv") as HTMLTextAreaElement;
  const seedInput = need("seed") as HTMLInputElement;

  need("create").addEventListener("click", () => {
    const dataset = datasetSel.value === "iris"
      ? { iris: true }
      : { csv: csvInput.value, name: "pasted", label_column: null };
    void app
      .createSession({ dataset, seed: Number(seedInput.value) || 0 })
      .then(connectStream)
      .catch((err) => {
        need("status").textContent = `session failed: ${err.message ?? err}`;
      });
  });

  need("train").addEventListener("click", () => void app.train());
  need("expand").addEventListener("click", () => void app.expandSelected());
  need("prune").addEventListener("click", () => void app.pruneSelected());
  need("undo").addEventListener("click", () => void app.undo());

  const tau1 = need("tau1") as HTMLInputElement;
  const tau2 = need("tau2") as HTMLInputElement;
  const alpha = need("alpha") as HTMLInputElement;
  const beta = need("beta") as HTMLInputElement;

  need("recluster").addEventListener("click", () => {
    const overrides: Record<string, unknown> = {};
    const t1 = numberOrNull(tau1);
    const t2 = numberOrNull(tau2);
    const a = numberOrNull(alpha);
    const b = numberOrNull(beta);
    if (t1 !== null) overrides.tau1 = t1;
    if (t2 !== null) overrides.tau2 = t2;
    if (a !== null) overrides.alpha = a;
    if (b !== null) overrides.beta = b;
    void app.reclusterSelectedMap(overrides);
  });

  need("apply-params").addEventListener("click", () => {
    const payload: Record<string, unknown> = {};
    const t1 = numberOrNull(tau1);
    const t2 = numberOrNull(tau2);
    const a = numberOrNull(alpha);
    const b = numberOrNull(beta);
    if (t1 !== null) payload.tau1 = t1;
    if (t2 !== null) payload.tau2 = t2;
    if (a !== null) payload.alpha = a;
    if (b !== null) payload.beta = b;
    if (Object.keys(payload).length > 0) void app.setParams(payload);
  });

  datasetSel.addEventListener("change", () => {
    csvInput.style.display = datasetSel.value === "csv" ? "block" : "none";
  });

  app.render();
}

boot();
