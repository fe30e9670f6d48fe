"""Headless steering client: drives a session from a timed message script.

Lets tests (and offline tools) exercise the full wire protocol with no UI.
A background reader thread queues every server message; the script sends
control messages at their scheduled offsets.
"""

import queue
import socket
import threading
import time

from .protocol import deserialize, serialize
from .ws import WebSocketError, WSConnection, client_handshake


class SteeringClient:
    """One websocket connection to a steering server."""

    def __init__(self, host: str, port: int, connect_timeout: float = 5.0):
        sock = socket.create_connection((host, port), timeout=connect_timeout)
        sock.settimeout(connect_timeout)
        rest = client_handshake(sock, host, port)
        sock.settimeout(None)
        self.conn = WSConnection(sock, server_side=False, initial=rest)
        self._queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self.hello = self.recv_message(timeout=connect_timeout)
        if self.hello is None or self.hello.get("type") != "hello":
            raise WebSocketError(f"expected a hello message, got {self.hello!r}")

    def _pump(self) -> None:
        while self.conn.open:
            try:
                text = self.conn.recv_text()
            except (WebSocketError, OSError):
                break
            if text is None:
                break
            try:
                self._queue.put(deserialize(text))
            except ValueError:
                continue
        self.conn.open = False

    # -------------------------------------------------------------- send

    def send(self, message: dict) -> None:
        self.conn.send_text(serialize(message))

    def send_control(self, direction: float, power: float) -> None:
        self.send({"type": "control", "direction": direction, "power": power})

    def send_verb(self, verb: str) -> None:
        self.send({"type": verb})

    # ----------------------------------------------------------- receive

    def recv_message(self, timeout: float = 5.0):
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            return None

    def drain(self) -> list:
        out = []
        while True:
            try:
                out.append(self._queue.get_nowait())
            except queue.Empty:
                return out

    def close(self) -> None:
        self.conn.close()
        self._reader.join(timeout=2.0)


def run_headless_client(host: str, port: int, script=(), duration: float = 1.0):
    """Connect, play a script of (time_offset, message) pairs, record replies.

    Returns (hello, messages): every server message received inside the
    duration window, in arrival order.
    """
    client = SteeringClient(host, port)
    try:
        pending = sorted(script, key=lambda item: item[0])
        t0 = time.monotonic()
        messages = []
        while True:
            now = time.monotonic() - t0
            if now >= duration:
                break
            while pending and pending[0][0] <= now:
                _, message = pending.pop(0)
                client.send(message)
            msg = client.recv_message(timeout=min(0.05, duration - now))
            if msg is not None:
                messages.append(msg)
        messages.extend(client.drain())
        return client.hello, messages
    finally:
        client.close()
