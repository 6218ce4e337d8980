"""Local vote-collection service backing the observer voting panel.

Plain-JSON HTTP endpoints over the standard-library threading server:

    GET  /plan                     full plan (administrator view)
    GET  /sessions/{k}/playlist    observer-safe cells of session k (1-based)
    GET  /btc/{i}                  observer-safe descriptor of one cell
    POST /observers                {"observer_id": ...}
    POST /votes                    {"observer_id", "btc_index", "score_a", "score_b"}
    GET  /export                   all stored votes

Observer-facing payloads never reveal which configuration (or which side)
is under test; only "A"/"B" labels and phase timing leave the server.
Votes are validated against the plan and fsynced to the append-only store
before the acknowledgment is sent; appends are serialized by a lock.
"""

from __future__ import annotations

import json
import re
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .session import PHASES, SessionPlan, append_vote, export_votes
from .subjective import VoteRecord

_SESSION_RE = re.compile(r"^/sessions/(\d+)/playlist$")
_BTC_RE = re.compile(r"^/btc/(\d+)$")


def _observer_view(plan: SessionPlan, btc_index: int) -> dict:
    timing = plan.timing
    return {
        "btc_index": btc_index,
        "clips": ["A", "B"],
        "phases": [{"phase": p, "seconds": timing.phase_seconds(p)} for p in PHASES],
    }


class VoteService:
    """Owns the HTTP server, the plan, and the append-only vote store."""

    def __init__(self, plan: SessionPlan, store_path: str | Path,
                 host: str = "127.0.0.1", port: int = 0):
        self.plan = plan
        self.store_path = Path(store_path)
        self._write_lock = threading.Lock()
        self._seen: set[tuple[str, int]] = {
            (v.observer_id, v.btc_index) for v in export_votes(self.store_path)}
        self._observers: set[str] = set()
        self._server = ThreadingHTTPServer((host, port), self._make_handler())
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    # request handling -----------------------------------------------------

    def _get(self, path: str) -> tuple[int, dict]:
        if path == "/plan":
            return 200, self.plan.to_json()
        if path == "/export":
            votes = export_votes(self.store_path)
            return 200, {"votes": [{
                "observer_id": v.observer_id,
                "btc_index": v.btc_index,
                "score_a": v.score_a,
                "score_b": v.score_b,
                "timestamp": v.timestamp.isoformat(),
            } for v in votes]}
        match = _SESSION_RE.match(path)
        if match:
            k = int(match.group(1))
            if not 1 <= k <= len(self.plan.sessions):
                return 404, {"error": f"no session {k}"}
            session = self.plan.sessions[k - 1]
            return 200, {
                "session": k,
                "estimated_minutes": self.plan.session_minutes(session),
                "entries": [_observer_view(self.plan, b.btc_index) for b in session],
            }
        match = _BTC_RE.match(path)
        if match:
            index = int(match.group(1))
            if self.plan.btc(index) is None:
                return 404, {"error": f"no BTC {index}"}
            return 200, _observer_view(self.plan, index)
        return 404, {"error": f"unknown path {path}"}

    def _post(self, path: str, body: dict) -> tuple[int, dict]:
        if path == "/observers":
            observer_id = body.get("observer_id")
            if not isinstance(observer_id, str) or not observer_id.strip():
                return 400, {"error": "observer_id must be a non-empty string"}
            self._observers.add(observer_id)
            return 200, {"observer_id": observer_id, "registered": True}
        if path == "/votes":
            return self._accept_vote(body)
        return 404, {"error": f"unknown path {path}"}

    def _accept_vote(self, body: dict) -> tuple[int, dict]:
        observer_id = body.get("observer_id")
        if not isinstance(observer_id, str) or not observer_id.strip():
            return 400, {"error": "observer_id must be a non-empty string"}
        btc_index = body.get("btc_index")
        if not isinstance(btc_index, int) or self.plan.btc(btc_index) is None:
            return 400, {"error": f"unknown btc_index {btc_index!r}"}
        scores = {}
        for name in ("score_a", "score_b"):
            value = body.get(name)
            if not isinstance(value, (int, float)) or not 0 <= value <= 100:
                return 400, {"error": f"{name} must be a number in [0, 100]"}
            scores[name] = float(value)

        with self._write_lock:
            if (observer_id, btc_index) in self._seen:
                return 409, {"error": f"duplicate vote for BTC {btc_index}"}
            vote = VoteRecord(observer_id, btc_index, scores["score_a"],
                              scores["score_b"], datetime.now(timezone.utc))
            append_vote(self.store_path, vote)
            self._seen.add((observer_id, btc_index))
        return 201, {"accepted": True, "btc_index": btc_index}

    def _make_handler(self):
        service = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):  # quiet by default
                pass

            def _reply(self, status: int, payload: dict):
                data = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(data)

            def do_OPTIONS(self):
                self.send_response(204)
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.end_headers()

            def do_GET(self):
                status, payload = service._get(self.path)
                self._reply(status, payload)

            def do_POST(self):
                length = int(self.headers.get("Content-Length") or 0)
                raw = self.rfile.read(length) if length else b""
                try:
                    body = json.loads(raw.decode() or "{}")
                    if not isinstance(body, dict):
                        raise ValueError("body must be a JSON object")
                except (json.JSONDecodeError, ValueError) as exc:
                    self._reply(400, {"error": f"bad request body: {exc}"})
                    return
                status, payload = service._post(self.path, body)
                self._reply(status, payload)

        return Handler


def serve(plan: SessionPlan, store_path: str | Path, port: int,
          host: str = "127.0.0.1") -> VoteService:
    """Start the service on a background thread and return its handle."""
    service = VoteService(plan, store_path, host=host, port=port)
    service.start()
    return service
