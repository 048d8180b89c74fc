// Dashboard state and the per-turn reducer.
//
// The server is the source of truth: every ChatResponse fully determines
// the parameter area (memory mirror), and any policy/KPI attachments
// repaint the grid and the cards. The reducer is pure so it can be
// snapshot-tested without a DOM.

import { CellMap, emptyGrid, emptyRegionHints, expandPolicyToGrid } from "./grid.js";
import {
  ChatResponse,
  DEFAULT_SCHEMA,
  GridSchema,
  KpiJson,
  MemorySnapshot,
  UNKNOWN,
} from "./types.js";

export interface Bubble {
  speaker: "user" | "agent" | "kpi" | "error";
  text: string;
}

export interface DashboardState {
  schema: GridSchema;
  market: string | null;
  kpis: KpiJson | null;
  grid: CellMap;
  transcript: Bubble[];
  memory: MemorySnapshot | null;
  hints: string[];
}

export function initialState(schema: GridSchema = DEFAULT_SCHEMA): DashboardState {
  return {
    schema,
    market: null,
    kpis: null,
    grid: emptyGrid(schema),
    transcript: [],
    memory: null,
    hints: ["No policy yet. Ask for the base policy or an optimization."],
  };
}

function isMalformed(resp: unknown): boolean {
  if (typeof resp !== "object" || resp === null) {
    return true;
  }
  const r = resp as Partial<ChatResponse>;
  return typeof r.reply !== "string" || typeof r.decision_kind !== "string"
    || typeof r.memory !== "object" || r.memory === null;
}

function kpiSummary(kpis: KpiJson): string {
  return (
    `Revenue per request $${kpis.revenue_per_request.toFixed(2)} | ` +
    `conversion ${kpis.conversion_rate >= 0 ? (kpis.conversion_rate * 100).toFixed(1) : "?"}% | ` +
    `uplift ${kpis.uplift_pct >= 0 ? "+" : ""}${kpis.uplift_pct.toFixed(1)}%`
  );
}

function memoryHints(memory: MemorySnapshot): string[] {
  const hints: string[] = [];
  if (memory.origin === UNKNOWN || memory.destination === UNKNOWN) {
    hints.push("Market not set: tell me the origin and destination.");
  }
  return hints;
}

export function renderTurn(
  state: DashboardState,
  userText: string | null,
  resp: unknown,
): DashboardState {
  const transcript = [...state.transcript];
  if (userText !== null) {
    transcript.push({ speaker: "user", text: userText });
  }
  if (isMalformed(resp)) {
    transcript.push({
      speaker: "error",
      text: "The service sent a reply this dashboard could not read.",
    });
    return { ...state, transcript };
  }
  const r = resp as ChatResponse;
  transcript.push({ speaker: "agent", text: r.reply });

  let grid = state.grid;
  let market = state.market;
  if (r.policy) {
    grid = expandPolicyToGrid(r.policy, state.schema);
    market = r.policy.market;
  }
  let kpis = state.kpis;
  if (r.kpis) {
    kpis = r.kpis;
    transcript.push({ speaker: "kpi", text: kpiSummary(r.kpis) });
  }

  const hints = [...memoryHints(r.memory), ...emptyRegionHints(grid, state.schema)];
  return { ...state, market, kpis, grid, transcript, memory: r.memory, hints };
}
