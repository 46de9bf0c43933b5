/** In-memory replica of the calibration service for headless tests:
 * same 2-down-1-up staircase, same wire format. */

import { FetchLike } from "../src/api.js";
import { SessionState } from "../src/types.js";

class MockStaircase {
  alpha: number;
  consecutiveNo = 0;
  lastDirection = 0;
  reversals: number[] = [];

  constructor(
    start: number,
    readonly step: number,
    readonly targetReversals: number,
  ) {
    this.alpha = start;
  }

  get done(): boolean {
    return this.reversals.length >= this.targetReversals;
  }

  respond(heard: boolean): void {
    if (this.done) return;
    if (heard) {
      this.move(-1);
      this.consecutiveNo = 0;
    } else if (++this.consecutiveNo >= 2) {
      this.move(+1);
      this.consecutiveNo = 0;
    }
  }

  private move(direction: number): void {
    if (this.lastDirection && direction !== this.lastDirection) {
      this.reversals.push(this.alpha);
    }
    this.lastDirection = direction;
    this.alpha *= direction > 0 ? this.step : 1 / this.step;
  }

  resolved(): number {
    if (!this.reversals.length) return this.alpha;
    const s = this.reversals.reduce((acc, a) => acc + Math.log(a), 0);
    return Math.exp(s / this.reversals.length);
  }
}

export class MockService {
  trialId = 0;
  itemIndex = 0;
  staircases: MockStaircase[];
  stimulusRequests: string[] = [];
  committed: number | null = null;

  constructor(
    readonly items: string[] = ["tone0", "tone1"],
    start = 0.5,
    step = 1.25,
    reversals = 6,
  ) {
    this.staircases = items.map(() => new MockStaircase(start, step, reversals));
  }

  get done(): boolean {
    return this.itemIndex >= this.items.length;
  }

  state(): SessionState {
    return {
      done: this.done,
      trial_id: this.trialId,
      item: this.done ? null : this.items[this.itemIndex],
      item_index: this.itemIndex,
      n_items: this.items.length,
      reversals: this.done ? null : this.staircases[this.itemIndex].reversals.length,
      target_reversals: this.staircases[0].targetReversals,
    };
  }

  currentAlpha(): number {
    return this.staircases[Math.min(this.itemIndex, this.items.length - 1)].alpha;
  }

  result() {
    const perItem: Record<string, number> = {};
    this.items.forEach((name, i) => {
      perItem[name] = this.staircases[i].resolved();
    });
    return { alpha: Math.min(...Object.values(perItem)), per_item: perItem };
  }

  /** fetch-compatible handler covering the /api/v1 surface. */
  fetch: FetchLike = async (url, init) => {
    const u = new URL(url, "http://mock");
    const json = (code: number, body: unknown) =>
      new Response(JSON.stringify(body), { status: code });
    if (u.pathname === "/api/v1/session" && (!init || init.method === undefined)) {
      return json(200, this.state());
    }
    if (u.pathname === "/api/v1/stimulus") {
      if (this.done) return json(409, { error: "session complete" });
      this.stimulusRequests.push(u.search);
      return new Response(new Blob([new Uint8Array(44)]), {
        status: 200,
        headers: { "Content-Type": "audio/wav" },
      });
    }
    if (u.pathname === "/api/v1/response" && init?.method === "POST") {
      const body = JSON.parse(String(init.body)) as {
        trial_id: number;
        heard_difference: boolean;
      };
      if (this.done) return json(409, { error: "session complete" });
      if (body.trial_id !== this.trialId) {
        return json(409, { error: "out-of-order response" });
      }
      const sc = this.staircases[this.itemIndex];
      sc.respond(body.heard_difference);
      this.trialId += 1;
      if (sc.done) this.itemIndex += 1;
      return json(200, this.state());
    }
    if (u.pathname === "/api/v1/result") {
      if (!this.done) return json(409, { error: "session not complete" });
      if (init?.method === "POST") this.committed = this.result().alpha;
      return json(200, this.result());
    }
    return json(404, { error: "not found" });
  };
}
