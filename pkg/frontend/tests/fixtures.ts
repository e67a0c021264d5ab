// Shared stubbed API fixtures for the UI tests.

import type { CityInfo, PeerReport } from "../src/api.js";

export const CITIES: CityInfo[] = [
  { city_id: "las-vegas", city_name: "Las Vegas", state: "NV", publication_year: 2021, plan_title: "Las Vegas Climate Equity Plan" },
  { city_id: "chico", city_name: "Chico", state: "CA", publication_year: 2022, plan_title: "Chico Climate Action Plan" },
  { city_id: "ann-arbor", city_name: "Ann Arbor", state: "MI", publication_year: 2020, plan_title: "Ann Arbor Carbon Neutrality Plan" },
  { city_id: "berkeley", city_name: "Berkeley", state: "CA", publication_year: 2023, plan_title: "Berkeley Climate Equity Playbook" },
  { city_id: "laredo", city_name: "Laredo", state: "TX", publication_year: 2019, plan_title: "Laredo Resilience Plan" },
  { city_id: "lansing", city_name: "Lansing", state: "MI", publication_year: 2020, plan_title: "Lansing Climate Plan" },
];

export const REPORT: PeerReport = {
  snapshot: "abc123def4567890",
  target: { city_id: "las-vegas", city_name: "Las Vegas" },
  domain: "transportation",
  tier: "action",
  k: 5,
  thresholds: { common: 0.8, gap: 0.6 },
  peers: [
    { city_id: "chico", city_name: "Chico", similarity: 0.9258200997725514 },
    { city_id: "ann-arbor", city_name: "Ann Arbor", similarity: 0.816496580927726 },
    { city_id: "berkeley", city_name: "Berkeley", similarity: 0.6666666666666667 },
  ],
  common_items: [
    { item_id: "transportation.action.Facilitate Community Workshops", rate: 1.0 },
    { item_id: "transportation.action.Install Electric Vehicle Chargers", rate: 0.8 },
  ],
  gap_items: [
    { item_id: "transportation.action.Develop Bicycle Lanes", rate: 0.6666666666666666 },
  ],
  data_quality: { unknown_counts: { "las-vegas": 0, chico: 0, "ann-arbor": 0, berkeley: 2 } },
};

export interface RecordedRequest {
  url: string;
  signal: AbortSignal | undefined;
  resolve: (body: unknown, status?: number) => void;
}

/**
 * A fetch stub whose responses are resolved manually by the test, so
 * supersession (abort) ordering is fully deterministic. City-list
 * requests resolve immediately; recommend requests are queued.
 */
export function makeFetchStub(cities: CityInfo[] = CITIES) {
  const pending: RecordedRequest[] = [];
  const fetcher = ((input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    if (url.includes("/api/cities")) {
      return Promise.resolve(
        new Response(JSON.stringify({ snapshot: "abc", cities }), { status: 200 }),
      );
    }
    return new Promise<Response>((resolve, reject) => {
      const signal = init?.signal ?? undefined;
      const record: RecordedRequest = {
        url,
        signal,
        resolve: (body, status = 200) =>
          resolve(new Response(JSON.stringify(body), { status })),
      };
      signal?.addEventListener("abort", () => {
        const error = new Error("The operation was aborted.");
        error.name = "AbortError";
        reject(error);
      });
      pending.push(record);
    });
  }) as typeof fetch;
  return { fetcher, pending };
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
