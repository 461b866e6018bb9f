/**
 * Typed fetch client for the checker service.
 *
 * All compute endpoints may answer 202 with a job ticket when the
 * server goes over its inline budget; `compute` hides the poll loop so
 * callers always resolve to the final payload. Errors are surfaced
 * verbatim as ApiError carrying the service's {code, message, detail}.
 */

import type {
  ApiFailure,
  ComputeRequestBody,
  FootprintsResponse,
  JobAccepted,
  OverhangRequestBody,
  OverhangResponse,
  OverlapsResponse,
  StoreysResponse,
  UploadResponse,
} from "./types.js";

export const DEFAULT_BASE_URL = "http://127.0.0.1:8000";

const DEFAULT_POLL_INTERVAL_MS = 300;
const MAX_POLL_ATTEMPTS = 600;

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ClientOptions {
  fetchFn?: FetchLike;
  pollIntervalMs?: number;
}

export class ApiError extends Error {
  public readonly status: number;
  public readonly code: string;
  public readonly detail: unknown;

  constructor(status: number, failure: ApiFailure) {
    super(failure.message);
    this.name = "ApiError";
    this.status = status;
    this.code = failure.code;
    this.detail = failure.detail ?? null;
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export class CheckerClient {
  public readonly baseUrl: string;
  private readonly fetchFn: FetchLike;
  private readonly pollIntervalMs: number;

  constructor(baseUrl: string = DEFAULT_BASE_URL, options: ClientOptions = {}) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchFn = options.fetchFn ?? ((url, init) => fetch(url, init));
    this.pollIntervalMs = options.pollIntervalMs ?? DEFAULT_POLL_INTERVAL_MS;
  }

  public modelsUrl(): string {
    return `${this.baseUrl}/models`;
  }

  public storeysUrl(sessionId: string): string {
    return `${this.baseUrl}/models/${sessionId}/storeys`;
  }

  public footprintsUrl(sessionId: string): string {
    return `${this.baseUrl}/models/${sessionId}/footprints`;
  }

  public overlapsUrl(sessionId: string): string {
    return `${this.baseUrl}/models/${sessionId}/overlaps`;
  }

  public overhangUrl(sessionId: string): string {
    return `${this.baseUrl}/models/${sessionId}/overhang`;
  }

  /** Poll paths arrive server-relative, e.g. "/models/abc/jobs/123". */
  public jobUrl(pollPath: string): string {
    return `${this.baseUrl}${pollPath}`;
  }

  public async upload(
    fileName: string,
    payload: string | ArrayBuffer,
  ): Promise<UploadResponse> {
    const response = await this.fetchFn(this.modelsUrl(), {
      method: "POST",
      headers: {
        "content-type": "application/octet-stream",
        "x-filename": fileName,
      },
      body: payload,
    });
    return await this.decode<UploadResponse>(response);
  }

  public async storeys(sessionId: string): Promise<StoreysResponse> {
    const response = await this.fetchFn(this.storeysUrl(sessionId));
    return await this.decode<StoreysResponse>(response);
  }

  public async footprints(
    sessionId: string,
    body: ComputeRequestBody,
  ): Promise<FootprintsResponse> {
    return await this.compute<FootprintsResponse>(
      this.footprintsUrl(sessionId), body);
  }

  public async overlaps(
    sessionId: string,
    body: ComputeRequestBody,
  ): Promise<OverlapsResponse> {
    return await this.compute<OverlapsResponse>(
      this.overlapsUrl(sessionId), body);
  }

  public async overhang(
    sessionId: string,
    body: OverhangRequestBody,
  ): Promise<OverhangResponse> {
    return await this.compute<OverhangResponse>(
      this.overhangUrl(sessionId), body);
  }

  private async compute<T>(url: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(url, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (response.status === 202) {
      const ticket = (await response.json()) as JobAccepted;
      return await this.poll<T>(ticket.poll);
    }
    return await this.decode<T>(response);
  }

  private async poll<T>(pollPath: string): Promise<T> {
    for (let attempt = 0; attempt < MAX_POLL_ATTEMPTS; attempt++) {
      const response = await this.fetchFn(this.jobUrl(pollPath));
      if (response.status !== 202) {
        return await this.decode<T>(response);
      }
      if (this.pollIntervalMs > 0) {
        await sleep(this.pollIntervalMs);
      }
    }
    throw new ApiError(504, {
      code: "poll-timeout",
      message: "job did not finish before the client gave up",
      detail: pollPath,
    });
  }

  private async decode<T>(response: Response): Promise<T> {
    if (response.ok) {
      return (await response.json()) as T;
    }
    let failure: ApiFailure = {
      code: `http-${response.status}`,
      message: response.statusText || "request failed",
      detail: null,
    };
    try {
      const parsed = (await response.json()) as Partial<ApiFailure>;
      if (parsed && typeof parsed.code === "string"
          && typeof parsed.message === "string") {
        failure = {
          code: parsed.code,
          message: parsed.message,
          detail: parsed.detail ?? null,
        };
      }
    } catch {
      // non-JSON error body: keep the synthetic failure
    }
    throw new ApiError(response.status, failure);
  }
}
