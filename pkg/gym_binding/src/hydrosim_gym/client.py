"""Minimal newline-delimited JSON client for the hydrosim session protocol."""
from __future__ import annotations

import json
import socket


class ProtocolError(RuntimeError):
    """Server returned a structured error response."""

    def __init__(self, err: dict):
        super().__init__(f"{err.get('type')}: {err.get('message')}")
        self.type = err.get("type")
        self.message = err.get("message")


class ProtocolClient:
    def __init__(self, host: str = "127.0.0.1", port: int = 7777, timeout: float = 30.0):
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ConnectionError(f"cannot reach hydrosim server at {host}:{port}: {exc}") from exc
        self.sock.settimeout(timeout)
        self.file = self.sock.makefile("rwb")
        self._next_id = 0

    def call(self, op: str, **payload) -> dict:
        """Send one request, return the response payload; raises
        ProtocolError on a structured error."""
        self._next_id += 1
        req = {"v": 1, "id": self._next_id, "op": op, **payload}
        self.file.write((json.dumps(req, sort_keys=True) + "\n").encode())
        self.file.flush()
        line = self.file.readline()
        if not line:
            raise ConnectionError("server closed the connection")
        resp = json.loads(line)
        if resp.get("id") != self._next_id:
            raise ProtocolError({"type": "client_error",
                                 "message": f"response id {resp.get('id')} != request id {self._next_id}"})
        if not resp.get("ok"):
            raise ProtocolError(resp.get("error", {}))
        return resp["payload"]

    def close(self):
        try:
            self.file.close()
            self.sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
