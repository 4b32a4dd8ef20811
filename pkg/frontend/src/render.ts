// DOM rendering. Renders the view-model and inspector into containers
// the page owns; the only state here is which unit is highlighted.

import type { QePoint } from "./state.js";
import type { UnitSamples } from "./types.js";
import type { CellVm, PanelVm, TreeVm } from "./viewmodel.js";

export interface UnitRef {
  mapId: number;
  row: number;
  col: number;
}

export type UnitClickHandler = (ref: UnitRef) => void;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderCell(
  panel: PanelVm,
  cell: CellVm | null,
  selected: UnitRef | null,
  onClick: UnitClickHandler,
): HTMLElement {
  if (cell === null) {
    return el("div", "cell cell-hole");
  }
  const btn = el("button", "cell");
  btn.style.background = cell.rgb;
  btn.dataset.map = String(panel.mapId);
  btn.dataset.row = String(cell.row);
  btn.dataset.col = String(cell.col);
  btn.title = `map ${panel.mapId} unit (${cell.row},${cell.col})  ` +
    `${cell.count} samples  qe ${cell.qe.toFixed(4)}`;
  if (selected && selected.mapId === panel.mapId &&
      selected.row === cell.row && selected.col === cell.col) {
    btn.classList.add("selected");
  }
  const badge = el("span", "badge", String(cell.count));
  btn.appendChild(badge);
  if (cell.child !== null) {
    btn.classList.add("has-child");
    btn.appendChild(el("span", "child-mark", "▸"));
  }
  btn.addEventListener("click", () =>
    onClick({ mapId: panel.mapId, row: cell.row, col: cell.col }));
  return btn;
}

function renderPanel(
  panel: PanelVm,
  selected: UnitRef | null,
  onClick: UnitClickHandler,
): HTMLElement {
  const wrap = el("div", "panel-wrap");
  const box = el("div", "map-panel");
  box.dataset.map = String(panel.mapId);

  const title = panel.parentUnit
    ? `map ${panel.mapId} ← unit (${panel.parentUnit[0]},${panel.parentUnit[1]})`
    : `map ${panel.mapId} (root)`;
  const head = el("div", "panel-head", title);
  head.appendChild(el("span", "panel-sub",
    ` L${panel.layer} ${panel.rows}×${panel.cols} ${panel.status}`));
  box.appendChild(head);

  const grid = el("div", "grid");
  grid.style.gridTemplateColumns = `repeat(${panel.cols}, var(--cell))`;
  for (const row of panel.cells) {
    for (const cell of row) {
      grid.appendChild(renderCell(panel, cell, selected, onClick));
    }
  }
  box.appendChild(grid);
  wrap.appendChild(box);

  if (panel.children.length > 0) {
    const kids = el("div", "panel-children");
    for (const child of panel.children) {
      kids.appendChild(renderPanel(child, selected, onClick));
    }
    wrap.appendChild(kids);
  }
  return wrap;
}

export function renderTree(
  container: HTMLElement,
  vm: TreeVm | null,
  selected: UnitRef | null,
  onClick: UnitClickHandler,
): void {
  container.replaceChildren();
  if (vm === null) {
    container.appendChild(el("div", "placeholder",
      "No hierarchy yet. Train to get a tree."));
    return;
  }
  const stats = el("div", "tree-stats",
    `${vm.dataset}: ${vm.nSamples} samples, ${vm.dim} features  ·  ` +
    `depth ${vm.depth}, ${vm.nMaps} maps, ${vm.nUnits} units  ·  seed ${vm.seed}`);
  container.appendChild(stats);
  container.appendChild(renderPanel(vm.root, selected, onClick));
}

export function renderBanner(container: HTMLElement, message: string): void {
  container.replaceChildren();
  const banner = el("div", "banner", message);
  container.appendChild(banner);
}

export function renderInspector(
  container: HTMLElement,
  table: UnitSamples | null,
): void {
  container.replaceChildren();
  if (table === null) {
    container.appendChild(el("div", "placeholder", "Click a unit to inspect it."));
    return;
  }
  const head = el("div", "inspector-head");
  const swatch = el("span", "swatch");
  const [r, g, b] = table.color;
  swatch.style.background = `rgb(${r},${g},${b})`;
  head.appendChild(swatch);
  head.appendChild(el("span", undefined,
    `map ${table.map_id} unit (${table.unit[0]},${table.unit[1]})  ` +
    `qe ${table.qe.toFixed(4)}  mqe ${table.mqe.toFixed(4)}`));
  container.appendChild(head);

  if (table.n_samples === 0) {
    container.appendChild(el("div", "placeholder",
      "This unit holds no samples; it pads the lattice."));
    return;
  }

  const tbl = el("table", "samples");
  const thead = el("thead");
  const hrow = el("tr");
  hrow.appendChild(el("th", undefined, "id"));
  for (const name of table.feature_names) {
    hrow.appendChild(el("th", undefined, name));
  }
  hrow.appendChild(el("th", undefined, "label"));
  thead.appendChild(hrow);
  tbl.appendChild(thead);

  const tbody = el("tbody");
  for (const row of table.samples) {
    const tr = el("tr");
    tr.appendChild(el("td", undefined, String(row.id)));
    for (const v of row.features) {
      tr.appendChild(el("td", undefined, v.toFixed(2)));
    }
    tr.appendChild(el("td", undefined, row.label ?? ""));
    tbody.appendChild(tr);
  }
  tbl.appendChild(tbody);
  container.appendChild(tbl);
}

export function renderSparkline(container: HTMLElement, trail: QePoint[]): void {
  container.replaceChildren();
  if (trail.length < 2) return;
  const w = 220;
  const h = 48;
  const max = Math.max(...trail.map((p) => p.mqeMap));
  const min = Math.min(...trail.map((p) => p.mqeMap));
  const span = max - min || 1;
  const pts = trail
    .map((p, i) => {
      const x = (i / (trail.length - 1)) * (w - 4) + 2;
      const y = h - 4 - ((p.mqeMap - min) / span) * (h - 8);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("width", String(w));
  svg.setAttribute("height", String(h));
  svg.setAttribute("class", "sparkline");
  const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", pts);
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "currentColor");
  line.setAttribute("stroke-width", "1.5");
  svg.appendChild(line);
  container.appendChild(svg);
  container.appendChild(el("span", "spark-label",
    ` map error, last ${trail.length} phases`));
}
