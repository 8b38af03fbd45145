"""Remote environment handle over the line-delimited JSON protocol.

Connects to a running server (TCP) or owns a server subprocess (spawned
on construction, terminated on close) and exposes the conventional
gym-style reset/step/action_space/observation_space surface. Payloads are
relayed without numerical transformation: observations come back as the
wire's integer msat values, rewards as integer msat.
"""

from __future__ import annotations

import json
import socket
import subprocess

import numpy as np

from .spaces import Box

PROTOCOL_VERSION = "1"


class ClientError(Exception):
    """Base class for client-side failures."""


class ProtocolError(ClientError):
    """The server answered with an error or an unexpected payload."""


class ConnectionLost(ClientError):
    """The transport closed before a response arrived."""


class DimensionError(ClientError):
    """An action does not match the environment's 2k shape."""


class RemoteEnv:
    """Gym-style handle to one remote environment session.

    Exactly one of `command` (a server argv to spawn in subprocess mode)
    or `address` ("host:port" or a (host, port) pair) must be given. The
    hello exchange happens on construction and caches k, the action
    bounds, and the episode length.
    """

    def __init__(self, command=None, address=None, timeout: float = 30.0):
        if (command is None) == (address is None):
            raise ValueError("pass exactly one of command or address")
        self._proc = None
        self._sock = None
        self._closed = False
        if command is not None:
            self._proc = subprocess.Popen(
                list(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
            self._reader = self._proc.stdout
            self._writer = self._proc.stdin
        else:
            if isinstance(address, str):
                host, _, port = address.rpartition(":")
                address = (host or "127.0.0.1", int(port))
            self._sock = socket.create_connection(address, timeout=timeout)
            self._reader = self._sock.makefile("r", encoding="utf-8", newline="\n")
            self._writer = self._sock.makefile("w", encoding="utf-8", newline="\n")

        hello = self._request({"type": "hello"}, expect="hello")
        if hello.get("version") != PROTOCOL_VERSION:
            raise ProtocolError(f"unsupported protocol version: {hello.get('version')}")
        self.k: int = int(hello["k"])
        self.fee_rate_upper = float(hello["bounds"]["fee_rate_upper"])
        self.base_fee_upper = float(hello["bounds"]["base_fee_upper"])
        self.episode_length: int = int(hello["episode_length"])

    # --- transport ---

    def _request(self, payload: dict, expect: str) -> dict:
        if self._closed:
            raise ProtocolError("handle is closed")
        try:
            self._writer.write(json.dumps(payload) + "\n")
            self._writer.flush()
            line = self._reader.readline()
        except (BrokenPipeError, OSError) as exc:
            raise ConnectionLost(str(exc)) from exc
        if not line:
            raise ConnectionLost("server closed the connection")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"unparseable response: {line!r}") from exc
        if response.get("type") == "error":
            raise ProtocolError(f"{response.get('code')}: {response.get('message')}")
        if response.get("type") != expect:
            raise ProtocolError(f"expected {expect}, got {response.get('type')}")
        return response

    # --- gym-style surface ---

    @property
    def action_space(self) -> Box:
        low = np.zeros(2 * self.k)
        high = np.concatenate(
            [np.full(self.k, self.fee_rate_upper), np.full(self.k, self.base_fee_upper)]
        )
        return Box(low=low, high=high)

    @property
    def observation_space(self) -> Box:
        return Box(
            low=np.zeros(2 * self.k),
            high=np.full(2 * self.k, np.inf),
            dtype=np.dtype(np.int64),
        )

    def reset(self, seed: int | None = None) -> np.ndarray:
        payload = {"type": "reset"}
        if seed is not None:
            payload["seed"] = int(seed)
        response = self._request(payload, expect="obs")
        return np.asarray(response["observation"], dtype=np.int64)

    def step(self, action) -> tuple[np.ndarray, int, bool, dict]:
        arr = np.asarray(action, dtype=np.float64)
        if arr.shape != (2 * self.k,):
            raise DimensionError(f"action shape {arr.shape} != (2k={2 * self.k},)")
        response = self._request(
            {"type": "step", "action": [float(v) for v in arr]}, expect="transition"
        )
        observation = np.asarray(response["observation"], dtype=np.int64)
        return observation, int(response["reward"]), bool(response["done"]), response["info"]

    def spec(self) -> dict:
        return self._request({"type": "spec"}, expect="spec")["config"]

    def close(self) -> None:
        if self._closed:
            return
        try:
            self._request({"type": "close"}, expect="bye")
        except ClientError:
            pass
        self._closed = True
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self._proc.terminate()
                self._proc.wait(timeout=10)
        if self._sock is not None:
            self._sock.close()

    def __enter__(self) -> "RemoteEnv":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
