// Wire client for the login service. The transport is injectable so tests
// can swap fetch for an in-memory server.

import type { ChallengePayload } from "./state";

export type Transport = (path: string, init: RequestInit) => Promise<Response>;

export interface LoginResult {
  session_id: string;
  outcome: string;
  challenge?: ChallengePayload;
}

export interface AnswerResult {
  outcome: string;
  challenge?: ChallengePayload;
  reason?: string;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  private transport: Transport;

  constructor(private baseUrl: string = "", transport?: Transport) {
    this.transport = transport ?? ((path, init) => fetch(this.baseUrl + path, init));
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await this.transport(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (res.status === 204) return undefined as T;
    const data = await res.json();
    if (!res.ok) {
      throw new ApiError(res.status, data.error ?? res.statusText);
    }
    return data as T;
  }

  pair(deviceId: string, credential: string): Promise<{ device_id: string; shared_secret: string }> {
    return this.post("/pair", { device_id: deviceId, credential });
  }

  login(
    deviceId: string,
    sharedSecret: string,
    format: string,
    forceLength?: number,
  ): Promise<LoginResult> {
    return this.post("/login", {
      device_id: deviceId,
      shared_secret: sharedSecret,
      format,
      force_length: forceLength ?? null,
    });
  }

  rendered(sessionId: string, challengeId: string): Promise<void> {
    return this.post("/rendered", { session_id: sessionId, challenge_id: challengeId });
  }

  answer(
    sessionId: string,
    body: { order?: number[]; selected?: number[] },
    clickCount: number,
    idempotencyKey: string,
  ): Promise<AnswerResult> {
    return this.post("/answer", {
      session_id: sessionId,
      ...body,
      click_count: clickCount,
      idempotency_key: idempotencyKey,
    });
  }

  imageUrl(path: string): string {
    return this.baseUrl + path;
  }
}
