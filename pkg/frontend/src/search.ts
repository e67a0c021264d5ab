// Typeahead city filter: case-insensitive prefix on city_name, at most 10
// suggestions, alphabetical.

import type { CityInfo } from "./api.js";

export const MAX_SUGGESTIONS = 10;

export function citySearch(cities: CityInfo[], prefix: string): CityInfo[] {
  if (!prefix) return [];
  const needle = prefix.toLowerCase();
  return cities
    .filter((c) => c.city_name.toLowerCase().startsWith(needle))
    .sort((a, b) => a.city_name.localeCompare(b.city_name))
    .slice(0, MAX_SUGGESTIONS);
}
