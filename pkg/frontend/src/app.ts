// Controller: wires the search box and query controls to the API,
// keeping the URL in sync and at most one request in flight (a control
// change aborts and supersedes any stale query).

import { ApiClient, ApiError, type CityInfo } from "./api.js";
import { citySearch } from "./search.js";
import {
  DEFAULT_STATE,
  DOMAINS,
  TIERS,
  stateFromParams,
  stateToParams,
  type QueryState,
} from "./state.js";
import { buildViewModel, renderError, renderReport } from "./view.js";

export class App {
  private cities: CityInfo[] = [];
  private state: QueryState = { ...DEFAULT_STATE };
  private inflight: AbortController | null = null;
  /** Total recommend requests issued; tests assert superseding behavior. */
  requestCount = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    private readonly win: Window,
  ) {}

  async init(): Promise<void> {
    this.buildSkeleton();
    try {
      this.cities = await this.api.cities();
    } catch (exc) {
      renderError(
        `Could not load the city list: ${(exc as Error).message}`,
        this.results(),
        null,
        () => void this.init(),
      );
      return;
    }
    this.state = stateFromParams(
      new URLSearchParams(this.win.location.search),
    );
    this.syncControls();
    if (this.state.city_id) {
      // deep link: kick off the query without blocking initialization
      void this.runQuery(this.state);
    }
  }

  private query<T extends HTMLElement>(selector: string): T {
    const node = this.root.querySelector(selector);
    if (!node) throw new Error(`missing element ${selector}`);
    return node as T;
  }

  private results(): HTMLElement {
    return this.query("#results");
  }

  private buildSkeleton(): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";
    this.root.innerHTML = `
      <header>
        <h1>Peer-city policy explorer</h1>
        <p class="tagline">Pick a city, then explore its most similar peers,
        shared practices, and likely gaps.</p>
      </header>
      <form id="controls" autocomplete="off">
        <div class="field city-field">
          <label for="city-input">City</label>
          <input id="city-input" type="text" placeholder="Start typing a city name" />
          <ul id="suggestions" hidden></ul>
        </div>
        <div class="field">
          <label for="domain-select">Domain</label>
          <select id="domain-select"></select>
        </div>
        <div class="field">
          <label for="tier-select">Tier</label>
          <select id="tier-select"></select>
        </div>
        <div class="field">
          <label for="k-slider">Peers (k): <span id="k-value"></span></label>
          <input id="k-slider" type="range" min="1" max="10" step="1" />
        </div>
        <details id="advanced">
          <summary>Advanced thresholds</summary>
          <div class="field">
            <label for="common-input">Common threshold</label>
            <input id="common-input" type="number" min="0.01" max="1" step="0.05" />
          </div>
          <div class="field">
            <label for="gap-input">Gap threshold</label>
            <input id="gap-input" type="number" min="0.01" max="1" step="0.05" />
          </div>
        </details>
      </form>
      <main id="results"></main>
    `;
    const domainSelect = this.query<HTMLSelectElement>("#domain-select");
    for (const domain of DOMAINS) {
      const option = doc.createElement("option");
      option.value = domain;
      option.textContent = domain;
      domainSelect.appendChild(option);
    }
    const tierSelect = this.query<HTMLSelectElement>("#tier-select");
    for (const tier of TIERS) {
      const option = doc.createElement("option");
      option.value = tier;
      option.textContent = tier;
      tierSelect.appendChild(option);
    }

    const cityInput = this.query<HTMLInputElement>("#city-input");
    cityInput.addEventListener("input", () => this.showSuggestions(cityInput.value));
    domainSelect.addEventListener("change", () =>
      this.updateState({ domain: domainSelect.value as QueryState["domain"] }),
    );
    tierSelect.addEventListener("change", () =>
      this.updateState({ tier: tierSelect.value as QueryState["tier"] }),
    );
    const kSlider = this.query<HTMLInputElement>("#k-slider");
    kSlider.addEventListener("input", () =>
      this.updateState({ k: Number(kSlider.value) }),
    );
    const commonInput = this.query<HTMLInputElement>("#common-input");
    commonInput.addEventListener("change", () =>
      this.updateState({ common_t: Number(commonInput.value) }),
    );
    const gapInput = this.query<HTMLInputElement>("#gap-input");
    gapInput.addEventListener("change", () =>
      this.updateState({ gap_t: Number(gapInput.value) }),
    );
  }

  private syncControls(): void {
    this.query<HTMLInputElement>("#city-input").value = this.cityName(
      this.state.city_id,
    );
    this.query<HTMLSelectElement>("#domain-select").value = this.state.domain;
    this.query<HTMLSelectElement>("#tier-select").value = this.state.tier;
    const kSlider = this.query<HTMLInputElement>("#k-slider");
    kSlider.value = String(this.state.k);
    this.query("#k-value").textContent = String(this.state.k);
    this.query<HTMLInputElement>("#common-input").value = String(
      this.state.common_t,
    );
    this.query<HTMLInputElement>("#gap-input").value = String(this.state.gap_t);
  }

  private cityName(cityId: string): string {
    const match = this.cities.find((c) => c.city_id === cityId);
    return match ? match.city_name : cityId;
  }

  showSuggestions(prefix: string): void {
    const list = this.query<HTMLUListElement>("#suggestions");
    const doc = list.ownerDocument;
    list.textContent = "";
    const matches = citySearch(this.cities, prefix);
    list.hidden = matches.length === 0;
    for (const city of matches) {
      const row = doc.createElement("li");
      row.textContent = `${city.city_name}, ${city.state}`;
      row.dataset.cityId = city.city_id;
      row.addEventListener("click", () => {
        list.hidden = true;
        this.query<HTMLInputElement>("#city-input").value = city.city_name;
        void this.updateState({ city_id: city.city_id });
      });
      list.appendChild(row);
    }
  }

  async updateState(patch: Partial<QueryState>): Promise<void> {
    this.state = { ...this.state, ...patch };
    this.query("#k-value").textContent = String(this.state.k);
    if (!this.state.city_id) return;
    await this.runQuery(this.state);
  }

  /** Issue the query for a state, superseding any in-flight request. */
  async runQuery(state: QueryState): Promise<void> {
    this.state = state;
    if (this.inflight) this.inflight.abort();
    const controller = new AbortController();
    this.inflight = controller;
    this.requestCount += 1;
    this.pushUrl(state);
    try {
      const report = await this.api.recommend(
        stateToParams(state),
        controller.signal,
      );
      if (controller.signal.aborted) return; // superseded
      renderReport(buildViewModel(report), this.results());
    } catch (exc) {
      if (controller.signal.aborted) return; // superseded; keep current view
      if (exc instanceof ApiError) {
        renderError(exc.message, this.results(), exc.field);
      } else {
        renderError(
          `Request failed: ${(exc as Error).message}`,
          this.results(),
          null,
          () => void this.runQuery(this.state),
        );
      }
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  private pushUrl(state: QueryState): void {
    const url = `${this.win.location.pathname}?${stateToParams(state).toString()}`;
    this.win.history.replaceState(null, "", url);
  }
}
