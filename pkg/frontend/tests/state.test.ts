import { describe, expect, it } from "vitest";

import {
  DEFAULT_STATE,
  stateFromParams,
  stateToParams,
  type QueryState,
} from "../src/state.js";

describe("query state URL serialization", () => {
  it("round-trips every field", () => {
    const state: QueryState = {
      city_id: "las-vegas",
      domain: "energy",
      tier: "strategy",
      k: 7,
      common_t: 0.75,
      gap_t: 0.4,
    };
    expect(stateFromParams(stateToParams(state))).toEqual(state);
  });

  it("defaults apply for an empty URL", () => {
    expect(stateFromParams(new URLSearchParams(""))).toEqual(DEFAULT_STATE);
  });

  it("k default is five", () => {
    expect(DEFAULT_STATE.k).toBe(5);
  });

  it("invalid enum values fall back to defaults", () => {
    const state = stateFromParams(
      new URLSearchParams("city=x&domain=food&tier=wish"),
    );
    expect(state.domain).toBe("transportation");
    expect(state.tier).toBe("action");
  });

  it("k is clamped to at least one", () => {
    expect(stateFromParams(new URLSearchParams("k=0")).k).toBe(1);
    expect(stateFromParams(new URLSearchParams("k=-3")).k).toBe(1);
    expect(stateFromParams(new URLSearchParams("k=abc")).k).toBe(5);
  });

  it("thresholds are clamped into (0, 1]", () => {
    const state = stateFromParams(new URLSearchParams("common_t=7&gap_t=0"));
    expect(state.common_t).toBe(1);
    expect(state.gap_t).toBe(0.01);
  });
});
