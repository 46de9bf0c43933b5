// @vitest-environment happy-dom
import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import { ArmPlayer } from "../src/player.js";
import { CalibrationView } from "../src/view.js";
import { MockService } from "./mock_service.js";

class StubPlayer implements ArmPlayer {
  played: string[] = [];
  play(url: string): Promise<void> {
    this.played.push(url);
    return Promise.resolve();
  }
  stop(): void {}
}

function wire(svc: MockService) {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const api = new ApiClient("http://mock", svc.fetch);
  const view = new CalibrationView(root);
  const player = new StubPlayer();
  const controller = new SessionController(api, player, {
    trial: (t, busy) => view.renderTrial(t, busy),
    complete: (r, committed) => view.renderComplete(r, committed),
    error: (m) => view.renderError(m),
  });
  view.onPlay = (arm) => void controller.play(arm);
  view.onJudge = (heard) => void controller.judge(heard);
  view.onCommit = () => void controller.commit();
  view.onRetry = () => void controller.refresh();
  return { root, controller, player, view };
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("SessionController", () => {
  it("runs a scripted session to completion and commits alpha", async () => {
    const svc = new MockService(["tone0", "tone1"], 0.5, 1.25, 6);
    const { root, controller, player } = wire(svc);
    await controller.refresh();

    const trueAlpha = 0.07;
    let guard = 0;
    while (!svc.done && guard++ < 500) {
      await controller.play("A");
      await controller.play("B");
      const heard = svc.currentAlpha() > trueAlpha;
      await controller.judge(heard);
    }
    expect(svc.done).toBe(true);
    expect(player.played.length).toBeGreaterThan(0);

    // completion screen shows the resolved alpha and a commit control
    expect(root.querySelector(".alpha-result")?.textContent).toContain(
      "Resolved alpha",
    );
    (root.querySelector(".commit-btn") as HTMLButtonElement).click();
    await new Promise((r) => setTimeout(r, 0));
    expect(svc.committed).not.toBeNull();
    expect(svc.committed!).toBeGreaterThanOrEqual(trueAlpha / 1.25);
    expect(svc.committed!).toBeLessThanOrEqual(trueAlpha * 1.25);
  });

  it("keeps the arm mapping blind before a response", async () => {
    const svc = new MockService(["tone0"]);
    const { root, controller } = wire(svc);
    await controller.refresh();
    const html = root.innerHTML.toLowerCase();
    // nothing in the DOM may identify the stimulus arm or the probe level
    expect(html).not.toContain("stimulus");
    expect(html).not.toContain("original");
    expect(html).not.toContain("alpha");
    const buttons = [...root.querySelectorAll("button")];
    const armButtons = buttons.filter((b) => b.dataset.arm);
    expect(armButtons.map((b) => b.dataset.arm)).toEqual(["A", "B"]);
    for (const b of armButtons) {
      expect(Object.keys(b.dataset)).toEqual(["arm"]);
    }
  });

  it("is keyboard operable: every control is a real button", async () => {
    const svc = new MockService(["tone0"]);
    const { root, controller } = wire(svc);
    await controller.refresh();
    const interactive = root.querySelectorAll(
      "button, [onclick], [role=button]",
    );
    expect(interactive.length).toBeGreaterThanOrEqual(4); // A, B, same, diff
    for (const node of interactive) {
      expect(node.tagName).toBe("BUTTON"); // natively focusable + Enter/Space
      expect(node.textContent?.trim()).toBeTruthy();
    }
  });

  it("resumes mid-session from server state after a reload", async () => {
    const svc = new MockService(["tone0"], 0.5, 1.25, 4);
    const first = wire(svc);
    await first.controller.refresh();
    await first.controller.judge(true);
    await first.controller.judge(false);
    const trialBefore = svc.trialId;

    // a fresh controller (page reload) picks up exactly where we were
    const second = wire(svc);
    await second.controller.refresh();
    const head = second.root.querySelector(".trial-head")?.textContent ?? "";
    expect(head).toContain(`trial ${trialBefore + 1}`);
    await second.controller.judge(true);
    expect(svc.trialId).toBe(trialBefore + 1);
  });

  it("renders a retryable error when the service is unreachable", async () => {
    const failing = new ApiClient("http://mock", async () => {
      throw new Error("connection refused");
    });
    const root = document.createElement("div");
    document.body.appendChild(root);
    const view = new CalibrationView(root);
    const controller = new SessionController(failing, new StubPlayer(), {
      trial: (t, busy) => view.renderTrial(t, busy),
      complete: (r, c) => view.renderComplete(r, c),
      error: (m) => view.renderError(m),
    });
    await controller.refresh();
    expect(root.querySelector(".error-text")?.textContent).toContain(
      "connection refused",
    );
    expect(root.querySelector(".retry-btn")).not.toBeNull();
  });
});
