import { SessionResult, TrialView } from "./types.js";

/** Renders trial and completion screens.  Everything interactive is a
 * <button>, so the whole flow is keyboard-operable, and nothing in the
 * DOM identifies which arm carries the stimulus. */
export class CalibrationView {
  onPlay: ((arm: "A" | "B") => void) | null = null;
  onJudge: ((heardDifference: boolean) => void) | null = null;
  onCommit: (() => void) | null = null;
  onRetry: (() => void) | null = null;

  constructor(private readonly root: HTMLElement) {}

  renderTrial(trial: TrialView, busy: boolean): void {
    this.root.innerHTML = "";
    const card = el("div", "trial-card");

    const head = el("p", "trial-head");
    head.textContent =
      `Item ${trial.itemIndex + 1} of ${trial.nItems}: ${trial.item} - ` +
      `trial ${trial.trialId + 1}, ${trial.reversals}/${trial.targetReversals} reversals`;
    card.appendChild(head);

    const playRow = el("div", "play-row");
    for (const arm of trial.arms) {
      const btn = el("button", "play-btn") as HTMLButtonElement;
      btn.textContent = `Play ${arm}`;
      btn.dataset.arm = arm;
      btn.addEventListener("click", () => this.onPlay?.(arm));
      playRow.appendChild(btn);
    }
    card.appendChild(playRow);

    const prompt = el("p", "prompt");
    prompt.textContent = "Do A and B sound different?";
    card.appendChild(prompt);

    const judgeRow = el("div", "judge-row");
    const same = el("button", "judge-btn") as HTMLButtonElement;
    same.textContent = "Same";
    same.dataset.judgement = "same";
    same.disabled = busy;
    same.addEventListener("click", () => this.onJudge?.(false));
    const diff = el("button", "judge-btn") as HTMLButtonElement;
    diff.textContent = "Different";
    diff.dataset.judgement = "different";
    diff.disabled = busy;
    diff.addEventListener("click", () => this.onJudge?.(true));
    judgeRow.append(same, diff);
    card.appendChild(judgeRow);

    this.root.appendChild(card);
  }

  renderComplete(result: SessionResult | null, committed: boolean): void {
    this.root.innerHTML = "";
    const card = el("div", "done-card");
    const head = el("p", "done-head");
    head.textContent = "Session complete";
    card.appendChild(head);
    if (result) {
      const alpha = el("p", "alpha-result");
      alpha.textContent = `Resolved alpha: ${result.alpha.toPrecision(4)}`;
      card.appendChild(alpha);
      const list = el("ul", "per-item");
      for (const [item, a] of Object.entries(result.per_item)) {
        const li = el("li", "per-item-row");
        li.textContent = `${item}: ${a.toPrecision(4)}`;
        list.appendChild(li);
      }
      card.appendChild(list);
    }
    const commit = el("button", "commit-btn") as HTMLButtonElement;
    commit.textContent = committed ? "Committed to config" : "Commit alpha";
    commit.disabled = committed;
    commit.addEventListener("click", () => this.onCommit?.());
    card.appendChild(commit);
    this.root.appendChild(card);
  }

  renderError(message: string): void {
    this.root.innerHTML = "";
    const card = el("div", "error-card");
    const text = el("p", "error-text");
    text.textContent = `Service error: ${message}`;
    card.appendChild(text);
    const retry = el("button", "retry-btn") as HTMLButtonElement;
    retry.textContent = "Retry";
    retry.addEventListener("click", () => this.onRetry?.());
    card.appendChild(retry);
    this.root.appendChild(card);
  }
}

function el(tag: string, cls: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = cls;
  return node;
}
