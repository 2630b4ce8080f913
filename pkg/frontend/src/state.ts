import type { ItemPayload, ReasonCode, TagState } from "./types.js";

/** Tag states and focus for the item on screen. Tagged states come from
 * server acknowledgments only; pending/queued are display hints. */
export class ItemFlow {
  readonly tags = new Map<number, TagState>();
  focus = 1;

  constructor(
    readonly item: ItemPayload,
    readonly topK: number,
  ) {
    for (let r = 1; r <= topK; r++) this.tags.set(r, { status: "untagged" });
    // a resumed session may already have acknowledged tags on this item
    for (const [rankText, record] of Object.entries(item.tagged ?? {})) {
      const rank = Number(rankText);
      if (rank >= 1 && rank <= topK) {
        this.tags.set(rank, { status: "tagged", tag: record.tag, reason: record.reason });
      }
    }
    this.focus = this.firstUntagged() ?? 1;
  }

  state(rank: number): TagState {
    return this.tags.get(rank) ?? { status: "untagged" };
  }

  firstUntagged(from = 1): number | null {
    for (let r = from; r <= this.topK; r++) {
      if (this.state(r).status === "untagged") return r;
    }
    for (let r = 1; r < from; r++) {
      if (this.state(r).status === "untagged") return r;
    }
    return null;
  }

  advanceFocus(): void {
    const next = this.firstUntagged(this.focus + 1);
    if (next !== null) this.focus = next;
  }

  moveFocus(delta: number): void {
    const next = this.focus + delta;
    if (next >= 1 && next <= this.topK) this.focus = next;
  }

  markPending(rank: number): void {
    this.tags.set(rank, { status: "pending" });
  }

  markQueued(rank: number): void {
    this.tags.set(rank, { status: "queued" });
  }

  markUntagged(rank: number): void {
    this.tags.set(rank, { status: "untagged" });
  }

  markAcked(rank: number, tag: 0 | 1, reason?: ReasonCode): void {
    this.tags.set(rank, { status: "tagged", tag, reason });
  }

  /** "next item" is enabled only when every rank carries an acknowledged tag. */
  allAcked(): boolean {
    for (let r = 1; r <= this.topK; r++) {
      if (this.state(r).status !== "tagged") return false;
    }
    return true;
  }
}
