import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { HtmlAudioPlayer } from "./player.js";
import { CalibrationView } from "./view.js";

function bootstrap(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app root");
  const api = new ApiClient(window.location.origin);
  const view = new CalibrationView(root);
  const controller = new SessionController(api, new HtmlAudioPlayer(), {
    trial: (t, busy) => view.renderTrial(t, busy),
    complete: (r, committed) => view.renderComplete(r, committed),
    error: (m) => view.renderError(m),
  });
  view.onPlay = (arm) => void controller.play(arm);
  view.onJudge = (heard) => void controller.judge(heard);
  view.onCommit = () => void controller.commit();
  view.onRetry = () => void controller.refresh();
  void controller.refresh();
}

document.addEventListener("DOMContentLoaded", bootstrap);
