import { ApiClient, ApiError } from "./api.js";
import { RetryQueue } from "./queue.js";
import { ItemFlow } from "./state.js";
import type { ReasonCode, SessionInfo, Summary, TagResponse } from "./types.js";
import { REASON_CODES } from "./types.js";
import {
  renderBanner,
  renderItem,
  renderProgress,
  renderReasonPicker,
  renderRubric,
} from "./view.js";

interface Panels {
  item: HTMLElement;
  picker: HTMLElement;
  progress: HTMLElement;
  rubric: HTMLElement;
  banner: HTMLElement;
}

/** The annotation screen: one item at a time, keyboard-first.
 *
 * All evaluation numbers come from the service summary endpoint; the UI only
 * counts its own completed items. Tag state flips to 1/0 on server
 * acknowledgment, never before.
 */
export class App {
  private session: SessionInfo | null = null;
  private flow: ItemFlow | null = null;
  private pickerOpen = false;
  private hideHeadword = false;
  private done = 0;
  private total = 0;
  private summary: Summary | null = null;
  private finished = false;
  private readonly queue: RetryQueue;
  private readonly panels: Panels;

  constructor(
    root: HTMLElement,
    private readonly api: ApiClient,
    retryMs = 2000,
  ) {
    root.textContent = "";
    this.panels = {
      banner: root.appendChild(make("div", "banner")),
      item: root.appendChild(make("main", "item-panel")),
      picker: root.appendChild(make("div", "reason-picker")),
      progress: root.appendChild(make("aside", "progress-panel")),
      rubric: root.appendChild(make("aside", "rubric-panel")),
    };
    renderRubric(this.panels.rubric);
    this.queue = new RetryQueue(
      (s) => this.api.submitTag(s),
      (pending) =>
        renderBanner(
          this.panels.banner,
          pending > 0 ? `offline — ${pending} tag(s) queued, retrying` : null,
        ),
      retryMs,
    );
    root.ownerDocument.addEventListener("keydown", (event) => this.handleKey(event));
  }

  async start(annotator: string, dialect?: string): Promise<void> {
    this.session = await this.api.createSession(annotator, dialect);
    this.total = this.session.queue_length;
    this.done = 0;
    await this.loadCurrentItem();
    await this.refreshSummary();
    this.renderAll();
  }

  private async loadCurrentItem(): Promise<void> {
    if (!this.session) return;
    const resp = await this.api.items(this.session.id, 1);
    const item = resp.items[0];
    if (!item) {
      this.flow = null;
      this.finished = true;
      return;
    }
    this.flow = new ItemFlow(item, this.session.top_k);
  }

  handleKey(event: KeyboardEvent): void {
    if (this.pickerOpen) {
      this.handlePickerKey(event);
      return;
    }
    if (!this.flow) return;
    switch (event.key) {
      case "1":
        event.preventDefault();
        void this.submit(this.flow.focus, 1);
        break;
      case "0":
        event.preventDefault();
        if (this.flow.state(this.flow.focus).status !== "pending") {
          this.pickerOpen = true;
          this.renderAll();
        }
        break;
      case "ArrowDown":
      case "j":
        event.preventDefault();
        this.flow.moveFocus(1);
        this.renderAll();
        break;
      case "ArrowUp":
      case "k":
        event.preventDefault();
        this.flow.moveFocus(-1);
        this.renderAll();
        break;
      case "n":
      case "Enter":
        event.preventDefault();
        void this.nextItem();
        break;
      case "h":
        event.preventDefault();
        this.hideHeadword = !this.hideHeadword;
        this.renderAll();
        break;
    }
  }

  private handlePickerKey(event: KeyboardEvent): void {
    if (event.key === "Escape") {
      event.preventDefault();
      this.pickerOpen = false;
      this.renderAll();
      return;
    }
    const index = Number(event.key) - 1;
    const reason = index >= 0 && index < REASON_CODES.length ? REASON_CODES[index] : undefined;
    if (reason && this.flow) {
      event.preventDefault();
      this.pickerOpen = false;
      void this.submit(this.flow.focus, 0, reason);
    }
  }

  private async submit(rank: number, tag: 0 | 1, reason?: ReasonCode): Promise<void> {
    if (!this.flow || !this.session) return;
    const flow = this.flow;
    const current = flow.state(rank);
    if (current.status === "pending" || current.status === "queued") return;
    const overwrite = current.status === "tagged";
    flow.markPending(rank);
    flow.advanceFocus(); // optimistic; rolled back on rejection
    this.renderAll();

    const submission = {
      session_id: this.session.id,
      item_id: flow.item.item_id,
      rank,
      tag,
      client_ts: Date.now() / 1000,
      ...(reason ? { reason } : {}),
      ...(overwrite ? { overwrite } : {}),
    };
    try {
      this.acknowledge(flow, rank, await this.api.submitTag(submission));
    } catch (err) {
      if (err instanceof ApiError) {
        flow.markUntagged(rank);
        flow.focus = rank;
        renderBanner(this.panels.banner, `rejected: ${err.message}`);
        this.renderAll();
      } else {
        // network failure: queue, keep going, flush later
        flow.markQueued(rank);
        this.queue.enqueue({
          submission,
          onAck: (resp) => this.acknowledge(flow, rank, resp),
          onReject: (message) => {
            flow.markUntagged(rank);
            renderBanner(this.panels.banner, `rejected: ${message}`);
            this.renderAll();
          },
        });
        this.renderAll();
      }
    }
  }

  private acknowledge(flow: ItemFlow, rank: number, resp: TagResponse): void {
    flow.markAcked(rank, resp.record.tag, resp.record.reason);
    if (this.queue.pending === 0) renderBanner(this.panels.banner, null);
    if (flow.allAcked()) {
      this.done += 1;
      void this.refreshSummary().then(() => this.renderAll());
    }
    this.renderAll();
  }

  private async nextItem(): Promise<void> {
    if (!this.flow || !this.flow.allAcked()) return;
    await this.loadCurrentItem();
    this.renderAll();
  }

  private async refreshSummary(): Promise<void> {
    try {
      this.summary = await this.api.summary(this.session?.dialect ?? undefined);
    } catch {
      this.summary = null; // degrade to local counts
    }
  }

  flushQueue(): Promise<void> {
    return this.queue.flush();
  }

  private renderAll(): void {
    if (this.flow) {
      renderItem(this.panels.item, this.flow, { hideHeadword: this.hideHeadword });
      const button = this.panels.item.querySelector<HTMLButtonElement>("#next-item");
      button?.addEventListener("click", () => void this.nextItem());
    } else if (this.finished) {
      this.panels.item.textContent = "all items tagged — thank you";
    }
    renderReasonPicker(this.panels.picker, this.pickerOpen);
    renderProgress(this.panels.progress, this.done, this.total, this.summary);
  }
}

function make(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}
