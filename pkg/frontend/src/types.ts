// Wire contract with the pricing service, mirrored verbatim.

export interface MemorySnapshot {
  function_call: string;
  origin: string;
  destination: string;
  price_min: number | string;
  price_max: number | string;
  cardinality: number | string;
}

export interface PolicyRule {
  conditions: Record<string, string>;
  price: number;
  covered_count: number;
  expected_revenue: number;
}

export interface PolicyJson {
  market: string;
  rules: PolicyRule[];
  objective: number;
  m: number;
  bounds: { min_price: number | null; max_price: number | null };
}

export interface KpiJson {
  revenue_per_request: number;
  conversion_rate: number;
  uplift_pct: number;
}

export interface ChatResponse {
  reply: string;
  decision_kind: string;
  memory: MemorySnapshot;
  policy: PolicyJson | null;
  kpis: KpiJson | null;
  degraded?: boolean;
}

// Pricing-grid dimensions; matches the canonical server schema.
export interface GridSchema {
  names: string[];
  levels: string[][];
}

export const DEFAULT_SCHEMA: GridSchema = {
  names: ["advance_purchase_days", "stay_restriction", "fare_discount_level"],
  levels: [
    ["0-6", "7-20", "21+"],
    ["none", "weekend_stay"],
    ["full", "mid", "deep"],
  ],
};

export const UNKNOWN = "Unknown";
