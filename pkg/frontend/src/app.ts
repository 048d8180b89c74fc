// DOM wiring: chat pane on the left, BI dashboard (parameter capture,
// KPI cards, pricing grid) on the right. State lives in state.ts; this
// file only paints it.

import { ApiClient } from "./api.js";
import { allCells, cellKey } from "./grid.js";
import { DashboardState, initialState, renderTurn } from "./state.js";
import { UNKNOWN } from "./types.js";

const api = new ApiClient();
let state: DashboardState = initialState();
let sessionId: string | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node as T;
}

function paintTranscript(): void {
  const pane = el<HTMLDivElement>("transcript");
  pane.innerHTML = "";
  for (const bubble of state.transcript) {
    const div = document.createElement("div");
    div.className = `bubble ${bubble.speaker}`;
    div.textContent = bubble.text;
    pane.appendChild(div);
  }
  pane.scrollTop = pane.scrollHeight;
}

function paintParameters(): void {
  const m = state.memory;
  el<HTMLSpanElement>("param-market").textContent =
    m && m.origin !== UNKNOWN && m.destination !== UNKNOWN
      ? `${m.origin} -> ${m.destination}` : "not set";
  el<HTMLSpanElement>("param-tool").textContent =
    m && m.function_call !== UNKNOWN ? m.function_call : "none yet";
  const bound = m
    ? `${m.price_min === UNKNOWN ? "-" : "$" + m.price_min} to ` +
      `${m.price_max === UNKNOWN ? "-" : "$" + m.price_max}`
    : "- to -";
  el<HTMLSpanElement>("param-bounds").textContent = bound;
  el<HTMLSpanElement>("param-rules").textContent =
    m && m.cardinality !== UNKNOWN ? String(m.cardinality) : "default (1)";
}

function paintKpis(): void {
  el<HTMLSpanElement>("kpi-uplift").textContent =
    state.kpis ? `${state.kpis.uplift_pct >= 0 ? "+" : ""}` +
      `${state.kpis.uplift_pct.toFixed(1)}%` : "-";
  el<HTMLSpanElement>("kpi-conversion").textContent =
    state.kpis ? `${(state.kpis.conversion_rate * 100).toFixed(1)}%` : "-";
  el<HTMLSpanElement>("kpi-revenue").textContent =
    state.kpis ? `$${state.kpis.revenue_per_request.toFixed(2)}` : "-";
}

function paintGrid(): void {
  const [apwLevels, stayLevels, discLevels] = state.schema.levels;
  const table = el<HTMLTableElement>("grid");
  table.innerHTML = "";
  const head = table.insertRow();
  head.insertCell().outerHTML = "<th>advance purchase</th>";
  for (const stay of stayLevels) {
    for (const disc of discLevels) {
      head.insertCell().outerHTML = `<th>${stay} / ${disc}</th>`;
    }
  }
  for (const apw of apwLevels) {
    const row = table.insertRow();
    row.insertCell().outerHTML = `<th>${apw}</th>`;
    for (const stay of stayLevels) {
      for (const disc of discLevels) {
        const price = state.grid[cellKey([apw, stay, disc])];
        const cell = row.insertCell();
        cell.className = price === null ? "cell empty" : "cell priced";
        cell.textContent = price === null ? "" : `$${price.toFixed(0)}`;
      }
    }
  }
  el<HTMLDivElement>("hints").textContent = state.hints.join(" ");
  el<HTMLSpanElement>("grid-market").textContent = state.market ?? "no market";
  const covered = allCells(state.schema)
    .filter((c) => state.grid[cellKey(c)] !== null).length;
  el<HTMLSpanElement>("grid-coverage").textContent =
    `${covered}/${allCells(state.schema).length} segments priced`;
}

function paintAll(): void {
  paintTranscript();
  paintParameters();
  paintKpis();
  paintGrid();
}

async function sendCurrentInput(): Promise<void> {
  const input = el<HTMLInputElement>("chat-input");
  const text = input.value.trim();
  if (!text || sessionId === null) {
    return;
  }
  input.value = "";
  try {
    const resp = await api.chat(sessionId, text);
    state = renderTurn(state, text, resp);
  } catch (err) {
    state = renderTurn(state, text, { error: String(err) });
  }
  paintAll();
}

export async function boot(): Promise<void> {
  sessionId = await api.createSession();
  el<HTMLButtonElement>("chat-send").addEventListener("click", () => {
    void sendCurrentInput();
  });
  el<HTMLInputElement>("chat-input").addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") {
      void sendCurrentInput();
    }
  });
  paintAll();
}

if (typeof document !== "undefined" && document.getElementById("chat-send")) {
  void boot();
}
