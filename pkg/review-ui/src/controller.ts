/** Queue walking and the submit flow.
 *
 * Every judgment lives on the review service; this controller only holds
 * the latest server snapshot for display and re-fetches it after each
 * write, so a page refresh (or a second judge) never loses anything.
 */

import { ApiError, ServiceUnreachable } from "./api.js";
import type { Judgment, JudgmentSubmission, QueuePayload, ReviewItemView, Summary } from "./types.js";

/** Structural seam over ApiClient so tests can swap in a fake service. */
export interface ReviewApi {
  fetchQueue(judge: string): Promise<QueuePayload>;
  submitJudgment(submission: JudgmentSubmission): Promise<Judgment>;
  fetchSummary(judge?: string): Promise<Summary>;
}

/** The service has no sampled items at all (distinct from "all judged"). */
export class EmptyQueue extends Error {
  constructor() {
    super("the review queue has no items");
    this.name = "EmptyQueue";
  }
}

/** Fetch the judge's queue snapshot, refusing to proceed on an empty one. */
export async function loadQueue(api: ReviewApi, judge: string): Promise<QueuePayload> {
  const queue = await api.fetchQueue(judge);
  if (queue.items.length === 0) throw new EmptyQueue();
  return queue;
}

export type Phase = "idle" | "loading" | "ready" | "done" | "empty" | "failed";

export class ReviewController {
  readonly judge: string;
  items: ReviewItemView[] = [];
  cursor = 0;
  summary: Summary | null = null;
  phase: Phase = "idle";
  /** Connection-level failure shown in the retry banner. */
  banner: string | null = null;
  /** Server rejection of the last submit, shown next to the form. */
  submitError: string | null = null;
  busy = false;

  private readonly api: ReviewApi;

  constructor(api: ReviewApi, judge: string) {
    this.api = api;
    this.judge = judge;
  }

  /** The item under the cursor, or null outside the ready phase. */
  current(): ReviewItemView | null {
    if (this.phase !== "ready") return null;
    return this.items[this.cursor] ?? null;
  }

  unjudgedCount(): number {
    return this.items.filter((item) => item.current_judgment === null).length;
  }

  async load(): Promise<void> {
    this.phase = "loading";
    this.banner = null;
    this.submitError = null;
    try {
      const queue = await loadQueue(this.api, this.judge);
      this.items = queue.items;
      this.summary = await this.api.fetchSummary(this.judge);
    } catch (err) {
      if (err instanceof EmptyQueue) {
        this.items = [];
        this.phase = "empty";
        return;
      }
      this.fail(err);
      return;
    }
    const idx = this.firstUnjudged(0);
    if (idx === -1) {
      this.cursor = 0;
      this.phase = "done";
    } else {
      this.cursor = idx;
      this.phase = "ready";
    }
  }

  /** Send the judgment for the current item, then re-sync from the service.
   *
   * The category string goes through untouched: the service is the only
   * party that decides whether it is acceptable, and its rejection text is
   * surfaced verbatim in submitError.
   */
  async submit(category: string, note: string): Promise<boolean> {
    const item = this.current();
    if (!item || this.busy) return false;
    this.busy = true;
    this.submitError = null;
    try {
      await this.api.submitJudgment({
        record_id: item.record_id,
        category,
        judge: this.judge,
        note,
      });
      await this.resync(item.record_id);
      return true;
    } catch (err) {
      if (err instanceof ApiError) {
        this.submitError = err.message;
      } else {
        this.fail(err);
      }
      return false;
    } finally {
      this.busy = false;
    }
  }

  next(): void {
    this.step(1);
  }

  prev(): void {
    this.step(-1);
  }

  private async resync(judgedRecordId: string): Promise<void> {
    const queue = await this.api.fetchQueue(this.judge);
    this.items = queue.items;
    this.summary = await this.api.fetchSummary(this.judge);
    const from = this.items.findIndex((item) => item.record_id === judgedRecordId);
    const next = this.items.length === 0 ? -1 : this.firstUnjudged((from + 1) % this.items.length);
    if (next === -1) {
      this.cursor = Math.max(0, from);
      this.phase = "done";
    } else {
      this.cursor = next;
      this.phase = "ready";
    }
  }

  private firstUnjudged(from: number): number {
    const n = this.items.length;
    for (let step = 0; step < n; step += 1) {
      const idx = (from + step) % n;
      if (this.items[idx]?.current_judgment === null) return idx;
    }
    return -1;
  }

  private step(delta: number): void {
    if (this.items.length === 0) return;
    if (this.phase === "done") {
      // reopen the judged queue at an edge so earlier calls can be revised
      this.cursor = delta > 0 ? 0 : this.items.length - 1;
      this.phase = "ready";
      return;
    }
    if (this.phase !== "ready") return;
    this.cursor = (this.cursor + delta + this.items.length) % this.items.length;
  }

  private fail(err: unknown): void {
    this.phase = "failed";
    this.banner =
      err instanceof ServiceUnreachable
        ? "review service unreachable; retry once it is back up"
        : err instanceof Error
          ? err.message
          : String(err);
  }
}
