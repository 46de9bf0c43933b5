/** Wire types of the calibration service (/api/v1). */

export interface SessionState {
  done: boolean;
  trial_id: number;
  item: string | null;
  item_index: number;
  n_items: number;
  reversals: number | null;
  target_reversals: number;
}

export interface SessionResult {
  alpha: number;
  per_item: Record<string, number>;
}

export type Arm = "A" | "B";

/** What one trial exposes to the listener: two playable arms whose
 * mapping to original/stimulus stays server-side until the session is
 * over, plus progress. */
export interface TrialView {
  trialId: number;
  item: string;
  arms: Arm[];
  reversals: number;
  targetReversals: number;
  itemIndex: number;
  nItems: number;
}

export function toTrialView(s: SessionState): TrialView {
  if (s.done || s.item === null) {
    throw new Error("session is complete; no trial to show");
  }
  return {
    trialId: s.trial_id,
    item: s.item,
    arms: ["A", "B"],
    reversals: s.reversals ?? 0,
    targetReversals: s.target_reversals,
    itemIndex: s.item_index,
    nItems: s.n_items,
  };
}
