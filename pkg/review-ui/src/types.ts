/** Payload shapes of the review service, mirrored field for field.
 *
 * The service owns the judgment taxonomy; nothing in this client
 * interprets or validates categories.
 */

export interface Judgment {
  record_id: string;
  category: string;
  judge: string;
  note: string;
  timestamp: number;
}

/** One queue entry as served by GET /api/queue. Read-only on this side. */
export interface ReviewItemView {
  record_id: string;
  prompt: string;
  document_text: string;
  output_text: string;
  predicted_label: string | null;
  compliance: string;
  gold_label: string | null;
  current_judgment: Judgment | null;
}

export interface QueuePayload {
  items: ReviewItemView[];
  unjudged: number;
}

/** GET /api/summary. Counts and proportions are computed server-side. */
export interface Summary {
  counts: Record<string, number>;
  proportions: Record<string, number>;
  judged: number;
  unjudged_records: number;
  judges: string[];
}

/** Body of POST /api/judgment. The service stamps the timestamp. */
export interface JudgmentSubmission {
  record_id: string;
  category: string;
  judge: string;
  note: string;
}
