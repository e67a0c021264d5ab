// View model and DOM rendering. The UI does no recommendation math:
// every number shown is the raw value of an API response field (bar
// widths are presentation only).

import type { PeerReport } from "./api.js";

export interface ViewModel {
  snapshot: string;
  targetName: string;
  targetId: string;
  peers: { cityId: string; cityName: string; similarity: number }[];
  commonItems: { itemId: string; rate: number }[];
  gapItems: { itemId: string; rate: number }[];
  unknownCounts: Record<string, number>;
}

export function buildViewModel(report: PeerReport): ViewModel {
  return {
    snapshot: report.snapshot,
    targetName: report.target.city_name,
    targetId: report.target.city_id,
    peers: report.peers.map((p) => ({
      cityId: p.city_id,
      cityName: p.city_name,
      similarity: p.similarity,
    })),
    commonItems: report.common_items.map((i) => ({
      itemId: i.item_id,
      rate: i.rate,
    })),
    gapItems: report.gap_items.map((i) => ({ itemId: i.item_id, rate: i.rate })),
    unknownCounts: report.data_quality.unknown_counts,
  };
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function itemLabel(itemId: string): string {
  // item ids are "domain.tier.Theme Label"; show the label part
  const parts = itemId.split(".");
  return parts.length >= 3 ? parts.slice(2).join(".") : itemId;
}

function renderItemList(
  doc: Document,
  title: string,
  cssClass: string,
  items: { itemId: string; rate: number }[],
  emptyNote: string,
): HTMLElement {
  const section = el(doc, "section", `items ${cssClass}`);
  section.appendChild(el(doc, "h3", undefined, title));
  if (items.length === 0) {
    section.appendChild(el(doc, "p", "empty-note", emptyNote));
    return section;
  }
  const list = el(doc, "ul");
  for (const item of items) {
    const row = el(doc, "li", "item-row");
    row.dataset.itemId = item.itemId;
    row.appendChild(el(doc, "span", "item-label", itemLabel(item.itemId)));
    const rate = el(doc, "span", "item-rate", String(item.rate));
    rate.dataset.rate = String(item.rate);
    row.appendChild(rate);
    list.appendChild(row);
  }
  section.appendChild(list);
  return section;
}

export function renderReport(vm: ViewModel, container: HTMLElement): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  container.dataset.snapshot = vm.snapshot;

  const heading = el(
    doc,
    "h2",
    "results-heading",
    `Cities most similar to ${vm.targetName}`,
  );
  container.appendChild(heading);

  const peerSection = el(doc, "section", "peers");
  if (vm.peers.length === 0) {
    peerSection.appendChild(
      el(
        doc,
        "p",
        "empty-note",
        "No peers: this plan has no comparable evaluation data.",
      ),
    );
  } else {
    const list = el(doc, "ol", "peer-list");
    for (const peer of vm.peers) {
      const row = el(doc, "li", "peer-row");
      row.dataset.cityId = peer.cityId;
      row.appendChild(el(doc, "span", "peer-name", peer.cityName));
      const bar = el(doc, "div", "similarity-bar");
      const fill = el(doc, "div", "similarity-fill");
      fill.style.width = `${Math.max(0, Math.min(1, peer.similarity)) * 100}%`;
      bar.appendChild(fill);
      row.appendChild(bar);
      const value = el(doc, "span", "similarity-value", String(peer.similarity));
      value.dataset.similarity = String(peer.similarity);
      row.appendChild(value);
      list.appendChild(row);
    }
    peerSection.appendChild(list);
  }
  container.appendChild(peerSection);

  container.appendChild(
    renderItemList(
      doc,
      "Commonly adopted by peers (also in this plan)",
      "common-items",
      vm.commonItems,
      "No items cleared the common threshold.",
    ),
  );
  container.appendChild(
    renderItemList(
      doc,
      "Likely gaps (adopted by peers, absent here)",
      "gap-items",
      vm.gapItems,
      "No gap items at the current threshold.",
    ),
  );

  const unknownEntries = Object.entries(vm.unknownCounts).filter(([, n]) => n > 0);
  const quality = el(doc, "section", "data-quality");
  quality.appendChild(el(doc, "h3", undefined, "Data quality"));
  if (unknownEntries.length === 0) {
    quality.appendChild(
      el(doc, "p", "empty-note", "No unknown verdicts among these cities."),
    );
  } else {
    const list = el(doc, "ul");
    for (const [cityId, count] of unknownEntries) {
      const row = el(
        doc,
        "li",
        "unknown-count",
        `${cityId}: ${count} unknown verdict${count === 1 ? "" : "s"} counted as absent`,
      );
      row.dataset.cityId = cityId;
      row.dataset.unknown = String(count);
      list.appendChild(row);
    }
    quality.appendChild(list);
  }
  container.appendChild(quality);
}

export function renderError(
  message: string,
  container: HTMLElement,
  field: string | null = null,
  onRetry: (() => void) | null = null,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  const banner = el(doc, "div", "error-banner");
  if (field) banner.dataset.field = field;
  banner.appendChild(el(doc, "p", "error-message", message));
  if (onRetry) {
    const button = el(doc, "button", "retry-button", "Retry");
    button.addEventListener("click", onRetry);
    banner.appendChild(button);
  }
  container.appendChild(banner);
}
