// Expansion of rule-based policies onto the pricing grid.
//
// A cell is one full combination of feature levels. Each rule pins its
// price on every cell matching its conditions; a feature absent from the
// conditions spans that whole dimension. Cells no rule covers stay empty,
// on purpose: blank space is what invites the next optimization request.

import { GridSchema, PolicyJson } from "./types.js";

export type CellMap = Record<string, number | null>;

export function cellKey(levels: string[]): string {
  return levels.join("|");
}

export function allCells(schema: GridSchema): string[][] {
  let combos: string[][] = [[]];
  for (const levels of schema.levels) {
    const next: string[][] = [];
    for (const combo of combos) {
      for (const level of levels) {
        next.push([...combo, level]);
      }
    }
    combos = next;
  }
  return combos;
}

export function emptyGrid(schema: GridSchema): CellMap {
  const grid: CellMap = {};
  for (const cell of allCells(schema)) {
    grid[cellKey(cell)] = null;
  }
  return grid;
}

export function ruleMatchesCell(
  conditions: Record<string, string>,
  schema: GridSchema,
  cell: string[],
): boolean {
  return schema.names.every((name, f) => {
    const wanted = conditions[name];
    return wanted === undefined || wanted === cell[f];
  });
}

export function expandPolicyToGrid(
  policy: PolicyJson,
  schema: GridSchema,
): CellMap {
  const grid = emptyGrid(schema);
  for (const cell of allCells(schema)) {
    for (const rule of policy.rules) {
      if (ruleMatchesCell(rule.conditions, schema, cell)) {
        grid[cellKey(cell)] = rule.price;
      }
    }
  }
  return grid;
}

// Cues for "what is next": empty regions worth differentiating.
export function emptyRegionHints(grid: CellMap, schema: GridSchema): string[] {
  const empties = allCells(schema).filter((c) => grid[cellKey(c)] === null);
  if (empties.length === 0) {
    return [];
  }
  const total = allCells(schema).length;
  if (empties.length === total) {
    return ["No policy yet. Ask for the base policy or an optimization."];
  }
  return [
    `${empties.length} of ${total} segments have no rule yet. ` +
      "Ask to re-optimize with more rules to differentiate them.",
  ];
}
