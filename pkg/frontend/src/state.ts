// Query state and its URL serialization: reloading a deep link reproduces
// the identical view for the same snapshot.

export const DOMAINS = ["transportation", "energy"] as const;
export const TIERS = ["policy", "strategy", "action"] as const;

export type Domain = (typeof DOMAINS)[number];
export type Tier = (typeof TIERS)[number];

export interface QueryState {
  city_id: string;
  domain: Domain;
  tier: Tier;
  k: number;
  common_t: number;
  gap_t: number;
}

export const DEFAULT_STATE: QueryState = {
  city_id: "",
  domain: "transportation",
  tier: "action",
  k: 5,
  common_t: 0.8,
  gap_t: 0.6,
};

export function stateToParams(state: QueryState): URLSearchParams {
  const params = new URLSearchParams();
  params.set("city", state.city_id);
  params.set("domain", state.domain);
  params.set("tier", state.tier);
  params.set("k", String(state.k));
  params.set("common_t", String(state.common_t));
  params.set("gap_t", String(state.gap_t));
  return params;
}

function clampNumber(raw: string | null, fallback: number, min: number, max: number): number {
  if (raw === null) return fallback;
  const value = Number(raw);
  if (!Number.isFinite(value)) return fallback;
  return Math.min(max, Math.max(min, value));
}

export function stateFromParams(params: URLSearchParams): QueryState {
  const domain = params.get("domain");
  const tier = params.get("tier");
  return {
    city_id: params.get("city") ?? "",
    domain: DOMAINS.includes(domain as Domain) ? (domain as Domain) : DEFAULT_STATE.domain,
    tier: TIERS.includes(tier as Tier) ? (tier as Tier) : DEFAULT_STATE.tier,
    k: Math.round(clampNumber(params.get("k"), DEFAULT_STATE.k, 1, 50)),
    common_t: clampNumber(params.get("common_t"), DEFAULT_STATE.common_t, 0.01, 1),
    gap_t: clampNumber(params.get("gap_t"), DEFAULT_STATE.gap_t, 0.01, 1),
  };
}
