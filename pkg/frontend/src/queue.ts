import type { TagSubmission, TagResponse } from "./types.js";

export interface QueueEntry {
  submission: TagSubmission;
  onAck: (resp: TagResponse) => void;
  onReject: (message: string) => void;
}

/** Holds submissions that failed on the network and replays them in order.
 * Replays set the overwrite flag, so delivery is at-least-once with
 * server-side last-write-wins. HTTP rejections are not retried. */
export class RetryQueue {
  private entries: QueueEntry[] = [];
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly send: (submission: TagSubmission) => Promise<TagResponse>,
    private readonly onStateChange: (pending: number) => void,
    private readonly retryMs = 2000,
  ) {}

  get pending(): number {
    return this.entries.length;
  }

  enqueue(entry: QueueEntry): void {
    this.entries.push(entry);
    this.onStateChange(this.entries.length);
    this.schedule();
  }

  private schedule(): void {
    if (this.timer === null && this.entries.length > 0) {
      this.timer = setTimeout(() => {
        this.timer = null;
        void this.flush();
      }, this.retryMs);
    }
  }

  async flush(): Promise<void> {
    while (this.entries.length > 0) {
      const entry = this.entries[0]!;
      try {
        const resp = await this.send({ ...entry.submission, overwrite: true });
        this.entries.shift();
        entry.onAck(resp);
      } catch (err) {
        if (err instanceof TypeError) {
          // still offline: keep the entry, try again later
          this.onStateChange(this.entries.length);
          this.schedule();
          return;
        }
        this.entries.shift();
        entry.onReject(err instanceof Error ? err.message : String(err));
      }
      this.onStateChange(this.entries.length);
    }
  }
}
