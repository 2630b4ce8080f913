import type { ItemFlow } from "./state.js";
import type { Summary, TagState } from "./types.js";
import { REASON_CODES, REASON_DESCRIPTIONS } from "./types.js";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function tagLabel(state: TagState): string {
  switch (state.status) {
    case "untagged":
      return "·";
    case "pending":
      return "…";
    case "queued":
      return "⌛ queued";
    case "tagged":
      return state.tag === 1 ? "1" : `0 ${state.reason ?? ""}`.trim();
  }
}

export interface ViewOptions {
  hideHeadword: boolean;
}

export function renderItem(root: HTMLElement, flow: ItemFlow, opts: ViewOptions): void {
  root.textContent = "";
  const head = el("div", "item-head");
  head.appendChild(
    el("span", "headword", opts.hideHeadword ? "(hidden — press h)" : flow.item.headword),
  );
  head.appendChild(el("span", "dialect", flow.item.dialect));
  head.appendChild(el("span", "sampa", flow.item.sampa));
  root.appendChild(head);

  const list = el("ol", "candidates");
  for (const candidate of flow.item.candidates) {
    const state = flow.state(candidate.rank);
    const row = el("li", "candidate");
    row.dataset.rank = String(candidate.rank);
    if (candidate.rank === flow.focus) row.classList.add("focused");
    if (state.status === "tagged") row.classList.add(state.tag === 1 ? "good" : "bad");
    row.appendChild(el("span", "rank", String(candidate.rank)));
    row.appendChild(el("span", "text", candidate.text));
    row.appendChild(el("span", "tag-state", tagLabel(state)));
    list.appendChild(row);
  }
  root.appendChild(list);

  const next = el("button", "next-item", "next item (n)") as HTMLButtonElement;
  next.id = "next-item";
  next.disabled = !flow.allAcked();
  root.appendChild(next);
}

export function renderReasonPicker(root: HTMLElement, visible: boolean): void {
  root.textContent = "";
  if (!visible) {
    root.classList.remove("open");
    return;
  }
  root.classList.add("open");
  root.appendChild(el("div", "picker-title", "why is it wrong?"));
  const list = el("ol", "reasons");
  REASON_CODES.forEach((code, i) => {
    const row = el("li", "reason");
    row.dataset.code = code;
    row.appendChild(el("kbd", undefined, String(i + 1)));
    row.appendChild(el("span", "code", code));
    row.appendChild(el("span", "hint", REASON_DESCRIPTIONS[code]));
    list.appendChild(row);
  });
  root.appendChild(list);
  root.appendChild(el("div", "picker-help", "esc to cancel"));
}

export function renderRubric(root: HTMLElement): void {
  root.textContent = "";
  root.appendChild(el("h2", undefined, "tagging rubric"));
  root.appendChild(
    el(
      "p",
      undefined,
      "Tag 1 when the writing is a plausible spontaneous spelling of the pronunciation. Tag 0 when:",
    ),
  );
  const list = el("ul");
  for (const code of REASON_CODES) {
    list.appendChild(el("li", undefined, `${code}: ${REASON_DESCRIPTIONS[code]}`));
  }
  root.appendChild(list);
  root.appendChild(
    el("p", "keys", "keys: 1 correct · 0 wrong (then 1-4 reason) · ↑/↓ move · n next · h headword"),
  );
}

export function renderProgress(
  root: HTMLElement,
  done: number,
  total: number,
  summary: Summary | null,
): void {
  root.textContent = "";
  const counter = el("div", "progress-counter");
  counter.id = "progress-counter";
  counter.textContent = `${done} / ${total} items complete`;
  root.appendChild(counter);

  if (summary === null) {
    root.appendChild(el("div", "summary-missing", "summary unavailable (local counts only)"));
    return;
  }
  const dialects = Object.keys(summary.dialects);
  if (dialects.length === 0) return;
  const table = document.createElement("table");
  table.className = "summary";
  const head = el("tr");
  head.appendChild(el("th", undefined, "rank"));
  for (const d of dialects) head.appendChild(el("th", undefined, d));
  table.appendChild(head);
  for (let r = 0; r < summary.top_k; r++) {
    const row = el("tr");
    row.appendChild(el("td", undefined, String(r + 1)));
    for (const d of dialects) {
      row.appendChild(el("td", undefined, summary.dialects[d]?.per_rank[r] ?? ""));
    }
    table.appendChild(row);
  }
  const totalRow = el("tr", "total-row");
  totalRow.appendChild(el("td", undefined, "total"));
  for (const d of dialects) {
    totalRow.appendChild(el("td", undefined, summary.dialects[d]?.total ?? ""));
  }
  table.appendChild(totalRow);
  root.appendChild(table);
}

export function renderBanner(root: HTMLElement, message: string | null): void {
  root.textContent = message ?? "";
  root.classList.toggle("visible", message !== null);
}
