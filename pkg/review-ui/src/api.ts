/** Thin typed client for the three review service routes. */

import type { Judgment, JudgmentSubmission, QueuePayload, Summary } from "./types.js";

/** The service could not be reached at all (network refused, DNS, ...). */
export class ServiceUnreachable extends Error {
  readonly reason: unknown;

  constructor(reason: unknown) {
    super("review service unreachable");
    this.name = "ServiceUnreachable";
    this.reason = reason;
  }
}

/** The service answered with a non-2xx status; message comes from its body. */
export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly token: string | null;
  private readonly fetchImpl: FetchLike;

  constructor(base = "", token: string | null = null, fetchImpl?: FetchLike) {
    this.base = base.replace(/\/+$/, "");
    this.token = token;
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  async fetchQueue(judge: string): Promise<QueuePayload> {
    const query = judge ? `?judge=${encodeURIComponent(judge)}` : "";
    const payload = await this.request(`/api/queue${query}`);
    return payload as QueuePayload;
  }

  async submitJudgment(submission: JudgmentSubmission): Promise<Judgment> {
    const payload = (await this.request("/api/judgment", {
      method: "POST",
      body: JSON.stringify(submission),
    })) as { ok: boolean; judgment: Judgment };
    return payload.judgment;
  }

  async fetchSummary(judge?: string): Promise<Summary> {
    const query = judge ? `?judge=${encodeURIComponent(judge)}` : "";
    const payload = await this.request(`/api/summary${query}`);
    return payload as Summary;
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const headers: Record<string, string> = {};
    if (init?.method === "POST") headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    let response: Response;
    try {
      response = await this.fetchImpl(this.base + path, { ...init, headers });
    } catch (reason) {
      throw new ServiceUnreachable(reason);
    }
    let payload: unknown = null;
    try {
      payload = await response.json();
    } catch {
      payload = null;
    }
    if (!response.ok) {
      const message =
        payload !== null && typeof payload === "object" && "error" in payload
          ? String((payload as { error: unknown }).error)
          : `request failed with status ${response.status}`;
      throw new ApiError(response.status, message);
    }
    return payload;
  }
}
