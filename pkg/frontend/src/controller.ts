// Orchestrates the API client, the state machine and the request gate.
// The controller owns no ranking logic: recommendation lists land in the
// state exactly as the service returned them, and stale recommend
// responses (superseded by a newer turn or settings change) are dropped.

import type { ApiClient } from "./api.js";
import { ApiError } from "./api.js";
import { createRequestGate } from "./gate.js";
import { initialState, transition, type UiEvent, type UiState } from "./state.js";

export type Listener = (state: UiState) => void;

export class ChatController {
  private state: UiState = initialState();
  private readonly log: UiEvent[] = [];
  private readonly gate = createRequestGate();
  private readonly listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  getState(): UiState {
    return this.state;
  }

  /** The applied event log; folding it reproduces `getState()` exactly. */
  getLog(): readonly UiEvent[] {
    return this.log;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    listener(this.state);
    return () => {
      const at = this.listeners.indexOf(listener);
      if (at >= 0) this.listeners.splice(at, 1);
    };
  }

  private apply(event: UiEvent): void {
    this.state = transition(this.state, event);
    this.log.push(event);
    for (const listener of this.listeners) listener(this.state);
  }

  private fail(error: unknown): void {
    const message =
      error instanceof ApiError
        ? error.message
        : error instanceof Error
          ? `network error: ${error.message}`
          : "network error";
    this.apply({ kind: "banner_shown", message });
  }

  async start(): Promise<void> {
    try {
      const sessionId = await this.api.createSession();
      this.gate.reset();
      this.apply({ kind: "session_started", sessionId });
      await this.refresh();
    } catch (error) {
      this.fail(error);
    }
  }

  /** Post a turn, then refresh recommendations. The transcript is only
   * appended after the service accepted the turn, so it never diverges. */
  async sendTurn(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed || !this.state.sessionId) return;
    try {
      await this.api.postTurn(this.state.sessionId, "seeker", trimmed);
      this.apply({ kind: "turn_appended", role: "seeker", text: trimmed });
    } catch (error) {
      this.fail(error);
      return;
    }
    await this.refresh();
  }

  async markLiked(itemId: string): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      const liked = await this.api.markLiked(this.state.sessionId, itemId);
      this.apply({ kind: "liked_marked", liked });
    } catch (error) {
      this.fail(error);
      return;
    }
    await this.refresh();
  }

  async setUserSelect(userSelect: boolean): Promise<void> {
    if (userSelect === this.state.userSelect) return;
    this.apply({ kind: "settings_changed", userSelect });
    await this.refresh();
  }

  async setK(k: number): Promise<void> {
    if (!Number.isInteger(k) || k < 1 || k === this.state.k) return;
    this.apply({ kind: "settings_changed", k });
    await this.refresh();
  }

  dismissBanner(): void {
    this.apply({ kind: "banner_dismissed" });
  }

  private async refresh(): Promise<void> {
    if (!this.state.sessionId) return;
    const token = this.gate.next();
    this.apply({ kind: "recommend_requested" });
    try {
      const items = await this.api.recommend(
        this.state.sessionId,
        this.state.k,
        this.state.userSelect,
      );
      if (!this.gate.isLatest(token)) return; // superseded; drop silently
      this.apply({ kind: "recommendations_received", items });
    } catch (error) {
      if (this.gate.isLatest(token)) this.fail(error);
    }
  }
}
