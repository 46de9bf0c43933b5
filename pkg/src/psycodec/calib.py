"""Listening-test calibration: adaptive staircases per corpus item and a
small JSON-over-HTTP service the browser client drives.

The staircase is 2-down-1-up with a multiplicative step: two consecutive
"no difference" responses raise the probe level, any "difference"
lowers it.  A session resolves each item's threshold as the geometric
mean of its reversal points and commits the smallest item threshold.
"""

import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from . import config as configmod
from .container import read_wav
from .noise import _splitmix64
from .psycho import MaskingParams, build_masking, stimulus

DEFAULT_STEP = 1.25
DEFAULT_REVERSALS = 8
DEFAULT_START_ALPHA = 0.5


@dataclass
class Staircase:
    """2-down-1-up multiplicative staircase over the probe level alpha."""

    alpha: float = DEFAULT_START_ALPHA
    step: float = DEFAULT_STEP
    target_reversals: int = DEFAULT_REVERSALS
    consecutive_no: int = 0
    last_direction: int = 0  # +1 louder, -1 quieter
    reversals: list = field(default_factory=list)

    @property
    def done(self) -> bool:
        return len(self.reversals) >= self.target_reversals

    def respond(self, heard_difference: bool) -> None:
        if self.done:
            return
        if heard_difference:
            self._move(-1)
            self.consecutive_no = 0
        else:
            self.consecutive_no += 1
            if self.consecutive_no >= 2:
                self._move(+1)
                self.consecutive_no = 0

    def _move(self, direction: int) -> None:
        if self.last_direction and direction != self.last_direction:
            self.reversals.append(self.alpha)
        self.last_direction = direction
        self.alpha *= self.step if direction > 0 else 1.0 / self.step

    def resolved_alpha(self) -> float:
        if not self.reversals:
            return self.alpha
        return float(np.exp(np.mean(np.log(self.reversals))))


@dataclass
class CalibrationSession:
    """One listener working through the corpus, one item at a time."""

    items: list                      # (name, signal, sample_rate)
    seed: int = 0
    start_alpha: float = DEFAULT_START_ALPHA
    step: float = DEFAULT_STEP
    reversals: int = DEFAULT_REVERSALS
    item_index: int = 0
    trial_id: int = 0
    responses: list = field(default_factory=list)
    staircases: list = field(init=False)
    _models: dict = field(default_factory=dict)

    def __post_init__(self):
        self.staircases = [
            Staircase(alpha=self.start_alpha, step=self.step,
                      target_reversals=self.reversals)
            for _ in self.items
        ]

    @property
    def done(self) -> bool:
        return self.item_index >= len(self.items)

    def current(self) -> Staircase:
        return self.staircases[self.item_index]

    def state(self) -> dict:
        if self.done:
            return {"done": True, "trial_id": self.trial_id,
                    "n_items": len(self.items),
                    "item_index": len(self.items), "item": None,
                    "reversals": None, "target_reversals": self.reversals}
        sc = self.current()
        return {
            "done": False,
            "trial_id": self.trial_id,
            "item": self.items[self.item_index][0],
            "item_index": self.item_index,
            "n_items": len(self.items),
            "reversals": len(sc.reversals),
            "target_reversals": sc.target_reversals,
        }

    def arm_is_stimulus(self, arm: str) -> bool:
        # per-trial randomized arm assignment, derivable only server-side
        bit = int(_splitmix64(self.seed ^ 0xA11B, 1,
                              offset=self.trial_id)[0] & np.uint64(1))
        return (arm == "B") == (bit == 0)

    def _model(self, index: int, params: MaskingParams):
        if index not in self._models:
            name, sig, rate = self.items[index]
            self._models[index] = build_masking(sig, rate, params)
        return self._models[index]

    def render_arm(self, arm: str, params: MaskingParams) -> np.ndarray:
        if self.done:
            raise ValueError("session complete")
        name, sig, rate = self.items[self.item_index]
        if not self.arm_is_stimulus(arm):
            return sig
        model = self._model(self.item_index, params)
        out, _ = stimulus(sig, model, self.current().alpha,
                          seed=self.seed + 7919 * self.trial_id)
        return out

    def respond(self, trial_id: int, heard_difference: bool) -> None:
        if self.done:
            raise ValueError("session complete")
        if trial_id != self.trial_id:
            raise ValueError(
                f"out-of-order response: expected trial {self.trial_id}, got {trial_id}")
        self.responses.append((trial_id, bool(heard_difference)))
        sc = self.current()
        sc.respond(heard_difference)
        self.trial_id += 1
        if sc.done:
            self.item_index += 1

    def result(self) -> dict:
        per_item = {
            name: self.staircases[i].resolved_alpha()
            for i, (name, _, _) in enumerate(self.items)
        }
        # the conservative choice: the smallest threshold over the corpus
        alpha = min(per_item.values()) if per_item else self.start_alpha
        return {"alpha": alpha, "per_item": per_item}


def load_corpus(corpus_dir) -> list:
    items = []
    for p in sorted(Path(corpus_dir).glob("*.wav")):
        sig, rate = read_wav(p)
        items.append((p.stem, sig, rate))
    if not items:
        raise FileNotFoundError(f"no WAV files in {corpus_dir}")
    return items


def _wav_bytes(signal: np.ndarray, rate: int) -> bytes:
    import io
    import wave

    q = np.clip(np.rint(signal), -32768, 32767).astype("<i2")
    bio = io.BytesIO()
    with wave.open(bio, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(rate))
        w.writeframes(q.tobytes())
    return bio.getvalue()


class CalibrationServer:
    """Single-session HTTP server for the calibration UI.

    API (prefix /api/v1): GET /session, GET /stimulus?item=<name>&arm=A|B,
    POST /response {"trial_id": int, "heard_difference": bool},
    GET/POST /result.  Requests are handled one at a time.
    """

    def __init__(self, corpus_dir, params: MaskingParams,
                 config_path=None, port: int = 0, seed: int = 0,
                 ui_dir=None, start_alpha: float = DEFAULT_START_ALPHA,
                 reversals: int = DEFAULT_REVERSALS):
        self.items = load_corpus(corpus_dir)
        self.params = params
        self.config_path = config_path
        self.ui_dir = Path(ui_dir) if ui_dir else None
        self.session = CalibrationSession(
            items=self.items, seed=seed, start_alpha=start_alpha,
            reversals=reversals)
        self.session_active = True
        self.lock = threading.Lock()
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _json(self, code: int, obj) -> None:
                body = json.dumps(obj).encode()
                self.send_response(code)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_GET(self):
                with server.lock:
                    server.handle_get(self)

            def do_POST(self):
                with server.lock:
                    server.handle_post(self)

        self.httpd = ThreadingHTTPServer(("127.0.0.1", port), Handler)
        self.port = self.httpd.server_address[1]
        self._thread = None

    # -- request handling -------------------------------------------------

    def handle_get(self, req) -> None:
        url = urlparse(req.path)
        if url.path == "/api/v1/session":
            req._json(200, self.session.state())
        elif url.path == "/api/v1/stimulus":
            qs = parse_qs(url.query)
            arm = qs.get("arm", [""])[0].upper()
            item = qs.get("item", [""])[0]
            st = self.session.state()
            if st["done"]:
                req._json(409, {"error": "session complete"})
                return
            if arm not in ("A", "B") or item != st["item"]:
                req._json(400, {"error": "bad arm or item"})
                return
            sig = self.session.render_arm(arm, self.params)
            rate = self.items[self.session.item_index][2]
            body = _wav_bytes(sig, rate)
            req.send_response(200)
            req.send_header("Content-Type", "audio/wav")
            req.send_header("Content-Length", str(len(body)))
            req.end_headers()
            req.wfile.write(body)
        elif url.path == "/api/v1/result":
            if not self.session.done:
                req._json(409, {"error": "session not complete"})
                return
            req._json(200, self.session.result())
        else:
            self.serve_ui(req, url.path)

    def handle_post(self, req) -> None:
        url = urlparse(req.path)
        length = int(req.headers.get("Content-Length", 0) or 0)
        raw = req.rfile.read(length) if length else b"{}"
        try:
            payload = json.loads(raw.decode() or "{}")
        except json.JSONDecodeError:
            req._json(400, {"error": "bad json"})
            return
        if url.path == "/api/v1/session":
            req._json(409, {"error": "a session is already active"})
        elif url.path == "/api/v1/response":
            try:
                self.session.respond(int(payload["trial_id"]),
                                     bool(payload["heard_difference"]))
            except (KeyError, ValueError) as exc:
                req._json(409, {"error": str(exc)})
                return
            req._json(200, self.session.state())
        elif url.path == "/api/v1/result":
            if not self.session.done:
                req._json(409, {"error": "session not complete"})
                return
            result = self.session.result()
            if self.config_path is not None:
                cfg = configmod.load_config(self.config_path)
                cfg["alpha"] = repr(result["alpha"])
                configmod.save_config(cfg, self.config_path)
            req._json(200, result)
        else:
            req._json(404, {"error": "not found"})

    def serve_ui(self, req, path: str) -> None:
        if self.ui_dir is None:
            req._json(404, {"error": "no ui assets configured"})
            return
        rel = "index.html" if path in ("", "/") else path.lstrip("/")
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) \
                or not target.is_file():
            req._json(404, {"error": "not found"})
            return
        ctype = {
            ".html": "text/html", ".js": "text/javascript",
            ".css": "text/css", ".map": "application/json",
        }.get(target.suffix, "application/octet-stream")
        body = target.read_bytes()
        req.send_response(200)
        req.send_header("Content-Type", ctype)
        req.send_header("Content-Length", str(len(body)))
        req.end_headers()
        req.wfile.write(body)

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever,
                                        daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def serve_forever(self) -> None:
        try:
            self.httpd.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            self.httpd.server_close()
