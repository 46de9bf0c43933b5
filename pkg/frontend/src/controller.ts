import { ApiClient } from "./api.js";
import { ArmPlayer } from "./player.js";
import { SessionResult, toTrialView } from "./types.js";

/** Drives one listening session against the service.
 *
 * The client is stateless with respect to the staircase: every judgment
 * round-trips through GET /session, so a page refresh resumes exactly
 * where the server says.  One response is in flight at a time.
 */
export class SessionController {
  private inFlight = false;
  private committed = false;

  constructor(
    private readonly api: ApiClient,
    private readonly player: ArmPlayer,
    private readonly render: {
      trial: (t: ReturnType<typeof toTrialView>, busy: boolean) => void;
      complete: (r: SessionResult | null, committed: boolean) => void;
      error: (message: string) => void;
    },
  ) {}

  /** Fetch state and render; called at start and after every response. */
  async refresh(): Promise<void> {
    let state;
    try {
      state = await this.api.getSession();
    } catch (err) {
      this.render.error(err instanceof Error ? err.message : String(err));
      return;
    }
    if (state.done) {
      let result: SessionResult | null = null;
      try {
        result = await this.api.getResult();
      } catch {
        result = null;
      }
      this.render.complete(result, this.committed);
      return;
    }
    this.render.trial(toTrialView(state), this.inFlight);
  }

  async play(arm: "A" | "B"): Promise<void> {
    const state = await this.api.getSession();
    if (state.done || state.item === null) return;
    await this.player.play(this.api.stimulusUrl(state.item, arm));
  }

  async judge(heardDifference: boolean): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      const state = await this.api.getSession();
      if (!state.done) {
        this.player.stop();
        await this.api.postResponse(state.trial_id, heardDifference);
      }
    } catch (err) {
      this.render.error(err instanceof Error ? err.message : String(err));
      this.inFlight = false;
      return;
    }
    this.inFlight = false;
    await this.refresh();
  }

  async commit(): Promise<SessionResult | null> {
    try {
      const result = await this.api.commitResult();
      this.committed = true;
      this.render.complete(result, true);
      return result;
    } catch (err) {
      this.render.error(err instanceof Error ? err.message : String(err));
      return null;
    }
  }
}
