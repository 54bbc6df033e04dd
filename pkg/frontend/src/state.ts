import type { Question } from "./types";

export type Phase = "quiz" | "result" | "demographics" | "thanks";

const ORDER: Phase[] = ["quiz", "result", "demographics", "thanks"];

/**
 * One participant's pass through the flow. Phases only move forward
 * (quiz -> result -> demographics -> thanks); going back would desync the
 * UI from the backend's immutable session.
 */
export class UiSession {
  phase: Phase = "quiz";
  answeredCount = 0;
  currentQuestion: Question | null = null;

  constructor(readonly sessionId: string) {}

  advance(to: Phase): void {
    if (ORDER.indexOf(to) <= ORDER.indexOf(this.phase)) {
      throw new Error(`phase cannot move ${this.phase} -> ${to}`);
    }
    this.phase = to;
  }
}
