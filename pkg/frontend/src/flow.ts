// Login flow: one session at a time, one in-flight submission at a time.
// Wrong arrangements swap in the fresh challenge without a reload; a network
// failure leaves the submission pending so it can be resent under the same
// idempotency key and never counts twice.

import { ApiClient, AnswerResult } from "./api";
import { ChallengePayload, ChallengeView, answerBody, createView } from "./state";

export type FlowPhase =
  | "idle"
  | "challenged"
  | "submitting"
  | "retry_pending"
  | "accepted"
  | "locked_out"
  | "fallback_required";

function newIdempotencyKey(): string {
  return `sub-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
}

export class LoginFlow {
  phase: FlowPhase = "idle";
  view: ChallengeView | null = null;
  sessionId: string | null = null;
  private pendingKey: string | null = null;

  constructor(
    private api: ApiClient,
    private deviceId: string,
    private sharedSecret: string,
  ) {}

  async start(format: string, forceLength?: number): Promise<FlowPhase> {
    const login = await this.api.login(this.deviceId, this.sharedSecret, format, forceLength);
    this.sessionId = login.session_id;
    if (login.outcome !== "challenged" || !login.challenge) {
      this.phase = "fallback_required";
      return this.phase;
    }
    this.adoptChallenge(login.challenge);
    return this.phase;
  }

  private adoptChallenge(payload: ChallengePayload): void {
    this.view = createView(payload);
    this.phase = "challenged";
    this.pendingKey = null;
  }

  async beaconRendered(): Promise<void> {
    if (this.sessionId && this.view) {
      await this.api.rendered(this.sessionId, this.view.challengeId);
    }
  }

  // Resolves to the new phase. On network failure the submission stays
  // pending: call submit() again to resend with the same idempotency key.
  async submit(): Promise<FlowPhase> {
    if (!this.sessionId || !this.view || this.phase === "accepted" || this.phase === "locked_out") {
      throw new Error(`nothing to submit in phase ${this.phase}`);
    }
    const key = this.pendingKey ?? newIdempotencyKey();
    this.pendingKey = key;
    this.phase = "submitting";
    let result: AnswerResult;
    try {
      result = await this.api.answer(
        this.sessionId,
        answerBody(this.view),
        this.view.clickCount,
        key,
      );
    } catch (err) {
      this.phase = "retry_pending";
      throw err;
    }
    this.pendingKey = null;
    switch (result.outcome) {
      case "accepted":
        this.phase = "accepted";
        break;
      case "retry_with_new_challenge":
        this.adoptChallenge(result.challenge!);
        break;
      case "retry":
        this.phase = "challenged";
        break;
      case "locked_out":
        this.phase = "locked_out";
        break;
      default:
        this.phase = "fallback_required";
    }
    return this.phase;
  }
}
