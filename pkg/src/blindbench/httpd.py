"""JSON-over-HTTP front end for the benchmark service.

Routes (token-authenticated calls take the join token in the
``X-Join-Token`` request header):

    POST /v1/sessions                      body: session config
    POST /v1/sessions/<id>/join            header token
    POST /v1/sessions/<id>/push            header token, body: message
    GET  /v1/sessions/<id>/poll?cursor=K   header token
    GET  /v1/sessions/<id>/status

Errors come back as {"error": <stable code>, "detail": <text>} with a
matching HTTP status, so clients can re-raise the typed exception.
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .errors import BlindbenchError, SchemaViolation
from .service import BenchmarkService

_STATUS_FOR = {
    "SCHEMA_VIOLATION": 400,
    "BUDGET_EXCEEDED": 400,
    "PEER_GROUP_TOO_SMALL": 400,
    "WEAK_KEY_REJECTED": 400,
    "PLAINTEXT_OUT_OF_RANGE": 400,
    "INVALID_GROUP_ELEMENT": 400,
    "NOT_ENROLLED": 403,
    "UNKNOWN_SESSION": 404,
    "PHASE_VIOLATION": 409,
    "DUPLICATE_MESSAGE": 409,
    "SESSION_RATE_LIMITED": 429,
    "CORRUPT_LOG": 500,
}

_SESSION_PATH = re.compile(r"^/v1/sessions/([0-9a-f]+)/(join|push|poll|status)$")

_MAX_BODY = 64 * 1024 * 1024


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    service: BenchmarkService = None  # set by make_server

    def log_message(self, fmt, *args):  # silence per-request stderr noise
        pass

    def _reply(self, status: int, obj: dict) -> None:
        blob = json.dumps(obj).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(blob)))
        self.end_headers()
        self.wfile.write(blob)

    def _fail(self, exc: BlindbenchError) -> None:
        status = _STATUS_FOR.get(exc.code, 400)
        self._reply(status, {"error": exc.code, "detail": str(exc)})

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        if length > _MAX_BODY:
            raise SchemaViolation("request body too large")
        raw = self.rfile.read(length) if length else b"{}"
        try:
            data = json.loads(raw.decode())
        except (UnicodeDecodeError, ValueError) as exc:
            raise SchemaViolation(f"request body is not JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise SchemaViolation("request body must be a JSON object")
        return data

    def _token(self) -> str:
        return self.headers.get("X-Join-Token", "")

    def do_POST(self):
        try:
            if self.path == "/v1/sessions":
                self._reply(200, self.service.create_session(self._body()))
                return
            match = _SESSION_PATH.match(self.path)
            if match is None:
                self._reply(404, {"error": "unknown-route",
                                  "detail": self.path})
                return
            session_id, op = match.groups()
            if op == "join":
                self._body()  # accept and ignore an empty JSON body
                self._reply(200, self.service.join(session_id, self._token()))
            elif op == "push":
                body = self._body()
                if "message" not in body:
                    raise SchemaViolation("push body needs a message field")
                self._reply(200, self.service.push(
                    session_id, self._token(), body["message"]))
            else:
                self._reply(405, {"error": "method-not-allowed", "detail": op})
        except BlindbenchError as exc:
            self._fail(exc)

    def do_GET(self):
        try:
            parsed = urlparse(self.path)
            match = _SESSION_PATH.match(parsed.path)
            if match is None:
                self._reply(404, {"error": "unknown-route",
                                  "detail": parsed.path})
                return
            session_id, op = match.groups()
            if op == "status":
                self._reply(200, self.service.status(session_id))
            elif op == "poll":
                query = parse_qs(parsed.query)
                try:
                    cursor = int(query.get("cursor", ["0"])[0])
                except ValueError as exc:
                    raise SchemaViolation("cursor must be an integer") from exc
                self._reply(200, self.service.poll(
                    session_id, self._token(), cursor))
            else:
                self._reply(405, {"error": "method-not-allowed", "detail": op})
        except BlindbenchError as exc:
            self._fail(exc)


def make_server(service: BenchmarkService, host: str = "127.0.0.1",
                port: int = 0) -> ThreadingHTTPServer:
    """Build (but do not start) an HTTP server bound to the service."""
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)


def serve_background(service: BenchmarkService, host: str = "127.0.0.1",
                     port: int = 0) -> tuple[ThreadingHTTPServer, threading.Thread]:
    """Start a server on a daemon thread; returns (server, thread)."""
    server = make_server(service, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread
