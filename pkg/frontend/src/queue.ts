import { ApiClient, ApiError, NetworkError } from "./api.js";
import type { RatingRecord } from "./types.js";

export type SubmitOutcome = "stored" | "queued" | "duplicate";

/**
 * At-most-once submission with an offline queue.
 *
 * A rating that cannot reach the server is kept (optionally in
 * localStorage, so a reload loses nothing) and replayed in order on the
 * next flush. The server's (rater, task) uniqueness key makes the replay
 * idempotent: a 409 on flush means the rating already landed and counts
 * as delivered.
 */
export class SubmitQueue {
  private pendingRecords: RatingRecord[] = [];

  constructor(
    private api: ApiClient,
    private storage?: Storage,
    private storageKey = "rating-queue",
  ) {
    if (this.storage) {
      const raw = this.storage.getItem(this.storageKey);
      if (raw) {
        try {
          this.pendingRecords = JSON.parse(raw) as RatingRecord[];
        } catch {
          this.pendingRecords = [];
        }
      }
    }
  }

  pending(): RatingRecord[] {
    return [...this.pendingRecords];
  }

  private persist(): void {
    this.storage?.setItem(this.storageKey, JSON.stringify(this.pendingRecords));
  }

  private enqueue(record: RatingRecord): void {
    this.pendingRecords.push(record);
    this.persist();
  }

  /** Submit one rating; network failures queue it instead of losing it. */
  async submit(record: RatingRecord): Promise<SubmitOutcome> {
    if (this.pendingRecords.length > 0) {
      // keep server order identical to rating order
      this.enqueue(record);
      await this.flush();
      return this.pendingRecords.length === 0 ? "stored" : "queued";
    }
    try {
      await this.api.submit(record);
      return "stored";
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) return "duplicate";
      if (err instanceof NetworkError) {
        this.enqueue(record);
        return "queued";
      }
      throw err;
    }
  }

  /** Replay queued ratings in order; stops at the first network failure. */
  async flush(): Promise<number> {
    let delivered = 0;
    while (this.pendingRecords.length > 0) {
      const record = this.pendingRecords[0];
      try {
        await this.api.submit(record);
        delivered += 1;
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          delivered += 1; // already stored server-side
        } else if (err instanceof NetworkError) {
          break;
        } else {
          // unprocessable rating (unknown task, bad score): drop it rather
          // than wedging the queue
          this.pendingRecords.shift();
          this.persist();
          throw err;
        }
      }
      this.pendingRecords.shift();
      this.persist();
    }
    return delivered;
  }
}
