// Typed client for the read-only planmatch JSON API.

export interface CityInfo {
  city_id: string;
  city_name: string;
  state: string;
  publication_year: number | null;
  plan_title: string;
}

export interface PeerEntry {
  city_id: string;
  city_name: string;
  similarity: number;
}

export interface RatedItem {
  item_id: string;
  rate: number;
}

export interface PeerReport {
  snapshot: string;
  target: { city_id: string; city_name: string };
  domain: string;
  tier: string;
  k: number;
  thresholds: { common: number; gap: number };
  peers: PeerEntry[];
  common_items: RatedItem[];
  gap_items: RatedItem[];
  data_quality: { unknown_counts: Record<string, number> };
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly field: string | null,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorFrom(response: Response): Promise<ApiError> {
  let field: string | null = null;
  let message = `request failed with status ${response.status}`;
  try {
    const body = (await response.json()) as {
      error?: { field?: string; message?: string };
    };
    if (body.error) {
      field = body.error.field ?? null;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  return new ApiError(response.status, field, message);
}

export class ApiClient {
  constructor(
    private readonly fetcher: typeof fetch = fetch,
    private readonly baseUrl: string = "",
  ) {}

  async cities(signal?: AbortSignal): Promise<CityInfo[]> {
    const response = await this.fetcher(`${this.baseUrl}/api/cities`, { signal });
    if (!response.ok) throw await errorFrom(response);
    const body = (await response.json()) as { cities: CityInfo[] };
    return body.cities;
  }

  async recommend(
    params: URLSearchParams,
    signal?: AbortSignal,
  ): Promise<PeerReport> {
    const response = await this.fetcher(
      `${this.baseUrl}/api/recommend?${params.toString()}`,
      { signal },
    );
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as PeerReport;
  }
}
