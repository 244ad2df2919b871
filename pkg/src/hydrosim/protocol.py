"""Newline-delimited JSON session protocol over TCP or stdio.

One JSON object per line. Requests: {"v": 1, "id": ..., "op": ..., payload
fields...}; responses echo the id with {"ok": true, "payload": ...} or
{"ok": false, "error": {"type": ..., "message": ...}}. Every connection
owns an isolated Session; client errors always produce a structured error
response, never a disconnect. The 'shutdown' op closes the connection.
"""
from __future__ import annotations

import json
import logging
import socket
import socketserver
import sys

from .config import ConfigError
from .dynamics import DivergenceError
from .session import Session, SessionConfig, SessionStateError

log = logging.getLogger("hydrosim.protocol")

PROTOCOL_VERSION = 1

OPS = ("configure", "reset", "step_action", "step_thrusters", "observe", "shutdown")


def _error(req_id, err_type, message):
    return {"v": PROTOCOL_VERSION, "id": req_id, "ok": False,
            "error": {"type": err_type, "message": str(message)}}


def _ok(req_id, payload):
    return {"v": PROTOCOL_VERSION, "id": req_id, "ok": True, "payload": payload}


def encode(message: dict) -> bytes:
    return (json.dumps(message, sort_keys=True, separators=(",", ":")) + "\n").encode()


class SessionHandler:
    """Dispatches one parsed request dict to a Session; never raises."""

    def __init__(self):
        self.session = Session()
        self.closed = False

    def handle_line(self, line: str) -> dict:
        try:
            req = json.loads(line)
        except json.JSONDecodeError as exc:
            return _error(None, "parse_error", f"invalid JSON: {exc}")
        if not isinstance(req, dict):
            return _error(None, "parse_error", "request must be a JSON object")
        req_id = req.get("id")
        op = req.get("op")
        if op not in OPS:
            return _error(req_id, "protocol_error", f"unknown op {op!r}; expected one of {list(OPS)}")
        try:
            payload = self._dispatch(op, req)
        except ConfigError as exc:
            return _error(req_id, "config_error", exc)
        except SessionStateError as exc:
            return _error(req_id, "state_error", exc)
        except DivergenceError as exc:
            return _error(req_id, "runtime_error", exc)
        except (TypeError, ValueError, KeyError) as exc:
            return _error(req_id, "protocol_error", exc)
        except Exception as exc:  # pragma: no cover - safety net
            log.exception("unexpected error handling %s", op)
            return _error(req_id, "runtime_error", exc)
        return _ok(req_id, payload)

    def _dispatch(self, op, req):
        if op == "configure":
            cfg = SessionConfig.defaults(
                **{
                    k: req[k]
                    for k in ("vehicle", "scenario", "water", "seed", "render",
                              "inline_frames", "session_dir", "physics_dt",
                              "control_period")
                    if k in req
                }
            )
            return self.session.configure(cfg)
        if op == "reset":
            return self.session.reset(seed=req.get("seed"))
        if op == "step_action":
            action = req.get("action", {})
            if not isinstance(action, dict) or "a1" not in action or "a2" not in action:
                raise ValueError("step_action needs action: {a1, a2}")
            return self.session.step_action(float(action["a1"]), float(action["a2"]))
        if op == "step_thrusters":
            if "u" not in req:
                raise ValueError("step_thrusters needs u: [...]")
            return self.session.step_thrusters(req["u"])
        if op == "observe":
            return self.session.observe()
        if op == "shutdown":
            self.closed = True
            return {"bye": True}
        raise AssertionError(op)


class _TCPHandler(socketserver.StreamRequestHandler):
    def handle(self):
        handler = SessionHandler()
        log.info("connection from %s", self.client_address)
        while not handler.closed:
            line = self.rfile.readline()
            if not line:
                break
            text = line.decode("utf-8", errors="replace").strip()
            if not text:
                continue
            self.wfile.write(encode(handler.handle_line(text)))
            self.wfile.flush()
        log.info("connection closed %s", self.client_address)


class ProtocolServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def serve_tcp(host: str = "127.0.0.1", port: int = 7777):
    """Run the TCP server until interrupted; returns the bound server when
    used programmatically via server_forever in a thread."""
    server = ProtocolServer((host, port), _TCPHandler)
    log.info("serving on %s:%d", *server.server_address)
    return server


def serve_stdio(stdin=None, stdout=None):
    """Single-session server over stdio; returns on shutdown or EOF."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    handler = SessionHandler()
    for line in stdin:
        text = line.strip()
        if not text:
            continue
        stdout.write(encode(handler.handle_line(text)).decode())
        stdout.flush()
        if handler.closed:
            break
