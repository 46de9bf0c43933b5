import { Arm, SessionResult, SessionState } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

/** Typed client for the calibration service; the fetch implementation is
 * injectable so tests can run without a network. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    const body = await res.text();
    if (!res.ok) {
      let detail = body;
      try {
        detail = (JSON.parse(body) as { error?: string }).error ?? body;
      } catch {
        /* not json */
      }
      throw new ApiError(res.status, detail);
    }
    return JSON.parse(body) as T;
  }

  getSession(): Promise<SessionState> {
    return this.json<SessionState>("/api/v1/session");
  }

  /** URL the audio element streams; the response is audio/wav. */
  stimulusUrl(item: string, arm: Arm): string {
    return `${this.baseUrl}/api/v1/stimulus?item=${encodeURIComponent(item)}&arm=${arm}`;
  }

  postResponse(trialId: number, heardDifference: boolean): Promise<SessionState> {
    return this.json<SessionState>("/api/v1/response", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ trial_id: trialId, heard_difference: heardDifference }),
    });
  }

  getResult(): Promise<SessionResult> {
    return this.json<SessionResult>("/api/v1/result");
  }

  commitResult(): Promise<SessionResult> {
    return this.json<SessionResult>("/api/v1/result", { method: "POST", body: "{}" });
  }
}
