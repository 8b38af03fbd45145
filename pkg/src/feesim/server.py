"""Line-delimited JSON protocol exposing the environment to external agents.

One JSON object per line in each direction; every request gets exactly one
response. Requests: hello, reset{seed}, step{action}, spec, close.
Responses: hello{version,k,bounds,episode_length}, obs{observation},
transition{observation,reward,done,info}, spec{config}, bye, and
error{code,message}. Monetary values travel as integer msat; malformed
input never terminates the session. See docs/protocol.md.

Transports: stdin/stdout (subprocess mode) or a threading TCP server with
one independent session per connection.
"""

from __future__ import annotations

import json
import logging
import socketserver
import threading

import numpy as np

from .env import FeeEnv
from .errors import DimensionMismatchError

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = "1"

E_PARSE = "E_PARSE"
E_ORDER = "E_ORDER"
E_DIM = "E_DIM"
E_INTERNAL = "E_INTERNAL"


def _error(code: str, message: str) -> dict:
    return {"type": "error", "code": code, "message": message}


class Session:
    """Protocol state for one client: hello before reset, reset before step."""

    def __init__(self, env_factory):
        self._env_factory = env_factory
        self.env: FeeEnv | None = None
        self.greeted = False
        self.has_obs = False
        self.closed = False

    def handle(self, request) -> dict:
        try:
            return self._dispatch(request)
        except Exception as exc:  # the server must answer, never crash
            logger.exception("internal error handling %r", request)
            return _error(E_INTERNAL, f"{type(exc).__name__}: {exc}")

    def _dispatch(self, request) -> dict:
        if self.closed:
            return _error(E_ORDER, "session is closed")
        if not isinstance(request, dict) or not isinstance(request.get("type"), str):
            return _error(E_PARSE, "request must be an object with a string 'type'")
        kind = request["type"]
        if kind == "hello":
            return self._hello()
        if kind == "close":
            self.closed = True
            return {"type": "bye"}
        if not self.greeted:
            return _error(E_ORDER, "hello must precede other requests")
        if kind == "spec":
            return {"type": "spec", "config": self.env.config_payload()}
        if kind == "reset":
            return self._reset(request)
        if kind == "step":
            return self._step(request)
        return _error(E_PARSE, f"unknown request type: {kind}")

    def _hello(self) -> dict:
        if self.env is None:
            self.env = self._env_factory()
        self.greeted = True
        return {
            "type": "hello",
            "version": PROTOCOL_VERSION,
            "k": self.env.k,
            "bounds": {
                "fee_rate_upper": self.env.config.fee_rate_upper,
                "base_fee_upper": self.env.config.base_fee_upper,
            },
            "episode_length": self.env.config.episode_length,
        }

    def _reset(self, request) -> dict:
        seed = request.get("seed")
        if seed is not None and not isinstance(seed, int):
            return _error(E_PARSE, "seed must be an integer")
        obs = self.env.reset(seed=seed)
        self.has_obs = True
        return {"type": "obs", "observation": [int(v) for v in obs]}

    def _step(self, request) -> dict:
        if not self.has_obs:
            return _error(E_ORDER, "reset must precede step")
        action = request.get("action")
        if not isinstance(action, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in action
        ):
            return _error(E_PARSE, "action must be a list of numbers")
        if len(action) != 2 * self.env.k:
            return _error(E_DIM, f"action length {len(action)} != 2k={2 * self.env.k}")
        try:
            result = self.env.step(np.asarray(action, dtype=np.float64))
        except DimensionMismatchError as exc:
            return _error(E_DIM, str(exc))
        return {
            "type": "transition",
            "observation": [int(v) for v in result.observation],
            "reward": int(result.reward),
            "done": bool(result.done),
            "info": result.info,
        }


def handle_message(session: Session, request) -> dict:
    """Process one request against the session and return the response."""
    return session.handle(request)


def serve_stream(instream, outstream, env_factory) -> None:
    """Run one session over text streams (subprocess mode)."""
    session = Session(env_factory)
    for line in instream:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            response = _error(E_PARSE, f"invalid JSON: {exc}")
        else:
            response = handle_message(session, request)
        outstream.write(json.dumps(response, separators=(",", ":")) + "\n")
        outstream.flush()
        if response.get("type") == "bye":
            break


class _TCPHandler(socketserver.StreamRequestHandler):
    def handle(self):
        server: ProtocolServer = self.server  # type: ignore[assignment]
        if not server.try_acquire_session():
            payload = json.dumps(_error(E_ORDER, "session limit reached")) + "\n"
            self.wfile.write(payload.encode("utf-8"))
            return
        try:
            instream = (raw.decode("utf-8") for raw in self.rfile)
            serve_stream(instream, _SocketWriter(self.wfile), server.env_factory)
        finally:
            server.release_session()


class _SocketWriter:
    def __init__(self, wfile):
        self._wfile = wfile

    def write(self, text: str):
        self._wfile.write(text.encode("utf-8"))

    def flush(self):
        self._wfile.flush()


class ProtocolServer(socketserver.ThreadingTCPServer):
    """TCP service mode: one session per connection, independent state."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], env_factory, max_sessions: int = 16):
        super().__init__(address, _TCPHandler)
        self.env_factory = env_factory
        self.max_sessions = max_sessions
        self._active = 0
        self._lock = threading.Lock()

    def try_acquire_session(self) -> bool:
        with self._lock:
            if self._active >= self.max_sessions:
                return False
            self._active += 1
            return True

    def release_session(self) -> None:
        with self._lock:
            self._active -= 1
