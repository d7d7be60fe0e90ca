"""HTTP service for the review workflow, stdlib only.

Routes:
  GET  /api/queue?judge=NAME   queue items in order, each with the judge's
                               current judgment (null when unjudged)
  POST /api/judgment           {record_id, category, judge, note}
  GET  /api/summary?judge=NAME proportions + coverage; all-zero when empty
  GET  /<path>                 static assets when a directory is configured

All state lives server-side in the JudgmentStore. An optional shared token
guards the /api/ routes (Authorization: Bearer <token>).
"""

from __future__ import annotations

import json
import mimetypes
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .errors import HarnessError, InvalidCategory, NoJudgments, UnknownRecord
from .triage import CATEGORIES, JudgmentStore, record_judgment, summarize


def _empty_summary(store: JudgmentStore) -> dict:
    return {
        "counts": {c: 0 for c in CATEGORIES},
        "proportions": {c: 0.0 for c in CATEGORIES},
        "judged": 0,
        "unjudged_records": len(store.queue),
        "judges": [],
    }


def _make_handler(store: JudgmentStore, static_dir: str | None, token: str | None):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # keep test output clean
            pass

        def _send_json(self, status: int, payload: dict) -> None:
            body = json.dumps(payload, sort_keys=True).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _authorized(self, path: str) -> bool:
            if token is None or not path.startswith("/api/"):
                return True
            return self.headers.get("Authorization") == f"Bearer {token}"

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type, Authorization")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            parsed = urlparse(self.path)
            if not self._authorized(parsed.path):
                self._send_json(401, {"error": "missing or invalid token"})
                return
            query = parse_qs(parsed.query)
            judge = query.get("judge", [None])[0]
            if parsed.path == "/api/queue":
                items = []
                unjudged = 0
                for item in store.queue.items:
                    current = store.judgment_for(item.record_id, judge) if judge else None
                    if current is None:
                        unjudged += 1
                    payload = item.to_dict()
                    payload["current_judgment"] = current.to_dict() if current else None
                    items.append(payload)
                self._send_json(200, {"items": items, "unjudged": unjudged})
            elif parsed.path == "/api/summary":
                try:
                    summary = summarize(store, judge).to_dict()
                except NoJudgments:
                    summary = _empty_summary(store)
                self._send_json(200, summary)
            elif static_dir is not None:
                self._send_static(parsed.path)
            else:
                self._send_json(404, {"error": "not found"})

        def do_POST(self):
            parsed = urlparse(self.path)
            if not self._authorized(parsed.path):
                self._send_json(401, {"error": "missing or invalid token"})
                return
            if parsed.path != "/api/judgment":
                self._send_json(404, {"error": "not found"})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                raw = json.loads(self.rfile.read(length) or b"{}")
                judgment = record_judgment(
                    store,
                    record_id=raw["record_id"],
                    category=raw["category"],
                    judge=raw["judge"],
                    note=raw.get("note", ""),
                )
            except UnknownRecord as exc:
                self._send_json(404, {"error": str(exc)})
                return
            except (InvalidCategory, KeyError, json.JSONDecodeError, ValueError) as exc:
                self._send_json(400, {"error": f"bad judgment: {exc}"})
                return
            except HarnessError as exc:
                self._send_json(400, {"error": str(exc)})
                return
            self._send_json(200, {"ok": True, "judgment": judgment.to_dict()})

        def _send_static(self, path: str) -> None:
            rel = path.lstrip("/") or "index.html"
            root = os.path.realpath(static_dir)
            full = os.path.realpath(os.path.join(root, rel))
            if not full.startswith(root + os.sep) and full != root:
                self._send_json(404, {"error": "not found"})
                return
            if os.path.isdir(full):
                full = os.path.join(full, "index.html")
            if not os.path.isfile(full):
                self._send_json(404, {"error": "not found"})
                return
            ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
            with open(full, "rb") as handle:
                body = handle.read()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler


class ReviewServer:
    """ThreadingHTTPServer wrapper; port 0 picks an ephemeral port."""

    def __init__(
        self,
        store: JudgmentStore,
        static_dir: str | None = None,
        token: str | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        self._httpd = ThreadingHTTPServer((host, port), _make_handler(store, static_dir, token))
        self._thread: threading.Thread | None = None

    @property
    def host(self) -> str:
        return self._httpd.server_address[0]

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def serve_forever(self) -> None:
        self._httpd.serve_forever(poll_interval=0.05)

    def start_background(self) -> None:
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )
        self._thread.start()

    def shutdown(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
