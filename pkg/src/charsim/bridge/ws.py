"""Minimal RFC 6455 websocket framing over a plain socket.

Covers what a steering session needs: the HTTP upgrade handshake, text
frames with all three payload-length encodings, masking in both roles,
ping/pong, close, and continuation-frame reassembly.  No extensions, no
fragmented control frames, one connection per object.
"""

import base64
import hashlib
import os
import socket
import struct
import threading

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
MAX_MESSAGE_BYTES = 1 << 20
MAX_HEADER_BYTES = 8192

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class WebSocketError(ConnectionError):
    """Handshake failure or an unrecoverable framing violation."""


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise WebSocketError("connection closed mid-frame")
        buf.extend(chunk)
    return bytes(buf)


def _recv_until(sock: socket.socket, marker: bytes, limit: int):
    """Read through marker; returns (head incl. marker, leftover bytes).

    A peer may pipeline frames right behind its handshake, so anything
    past the marker must reach the frame reader instead of being dropped.
    """
    buf = bytearray()
    while marker not in buf:
        if len(buf) > limit:
            raise WebSocketError("header too large")
        chunk = sock.recv(4096)
        if not chunk:
            raise WebSocketError("connection closed during handshake")
        buf.extend(chunk)
    head, _, rest = bytes(buf).partition(marker)
    return head + marker, rest


def accept_key(key: str) -> str:
    digest = hashlib.sha1((key + WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def _parse_headers(raw: bytes) -> dict:
    try:
        text = raw.decode("latin-1")
    except UnicodeDecodeError:
        raise WebSocketError("undecodable handshake") from None
    lines = text.split("\r\n")
    headers = {}
    for line in lines[1:]:
        name, sep, value = line.partition(":")
        if sep:
            headers[name.strip().lower()] = value.strip()
    return headers


def server_handshake(sock: socket.socket) -> bytes:
    """Read the client's upgrade request and answer 101, or refuse.

    Returns any bytes that arrived after the request headers; pass them
    to WSConnection as the initial buffer.
    """
    raw, rest = _recv_until(sock, b"\r\n\r\n", MAX_HEADER_BYTES)
    request_line = raw.split(b"\r\n", 1)[0].decode("latin-1", "replace")
    headers = _parse_headers(raw)
    key = headers.get("sec-websocket-key")
    if (not request_line.startswith("GET ")
            or "websocket" not in headers.get("upgrade", "").lower()
            or key is None):
        sock.sendall(b"HTTP/1.1 400 Bad Request\r\n"
                     b"Connection: close\r\n\r\n")
        raise WebSocketError(f"not a websocket upgrade: {request_line!r}")
    response = (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(key)}\r\n"
        "\r\n")
    sock.sendall(response.encode("latin-1"))
    return rest


def client_handshake(sock: socket.socket, host: str, port: int,
                     path: str = "/") -> bytes:
    """Send the upgrade request and check the 101 response.

    Returns any bytes that arrived after the response headers (a server
    may start sending frames immediately); pass them to WSConnection.
    """
    key = base64.b64encode(os.urandom(16)).decode()
    request = (
        f"GET {path} HTTP/1.1\r\n"
        f"Host: {host}:{port}\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Key: {key}\r\n"
        "Sec-WebSocket-Version: 13\r\n"
        "\r\n")
    sock.sendall(request.encode("latin-1"))
    raw, rest = _recv_until(sock, b"\r\n\r\n", MAX_HEADER_BYTES)
    status = raw.split(b"\r\n", 1)[0].decode("latin-1", "replace")
    headers = _parse_headers(raw)
    if " 101 " not in status + " ":
        raise WebSocketError(f"server refused upgrade: {status!r}")
    if headers.get("sec-websocket-accept") != accept_key(key):
        raise WebSocketError("bad Sec-WebSocket-Accept")
    return rest


def _encode_frame(opcode: int, payload: bytes, mask: bool) -> bytes:
    head = bytearray([0x80 | opcode])
    n = len(payload)
    mask_bit = 0x80 if mask else 0
    if n < 126:
        head.append(mask_bit | n)
    elif n < (1 << 16):
        head.append(mask_bit | 126)
        head += struct.pack(">H", n)
    else:
        head.append(mask_bit | 127)
        head += struct.pack(">Q", n)
    if mask:
        key = os.urandom(4)
        head += key
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return bytes(head) + payload


def _read_frame(read):
    b0, b1 = read(2)
    fin = bool(b0 & 0x80)
    opcode = b0 & 0x0F
    masked = bool(b1 & 0x80)
    n = b1 & 0x7F
    if n == 126:
        (n,) = struct.unpack(">H", read(2))
    elif n == 127:
        (n,) = struct.unpack(">Q", read(8))
    if n > MAX_MESSAGE_BYTES:
        raise WebSocketError(f"frame of {n} bytes exceeds the message cap")
    key = read(4) if masked else None
    payload = read(n)
    if key:
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return fin, opcode, payload


class WSConnection:
    """One open websocket after a successful handshake."""

    def __init__(self, sock: socket.socket, server_side: bool,
                 initial: bytes = b""):
        self.sock = sock
        self.server_side = server_side
        self.open = True
        # bytes the handshake pulled in past the headers
        self._buf = bytearray(initial)
        # frames and reader-thread pongs share the socket
        self._send_lock = threading.Lock()

    def _read(self, n: int) -> bytes:
        take = min(n, len(self._buf))
        out = bytes(self._buf[:take])
        del self._buf[:take]
        if take < n:
            out += _recv_exact(self.sock, n - take)
        return out

    # server frames go unmasked, client frames masked, per the RFC
    def _send(self, opcode: int, payload: bytes) -> None:
        if not self.open:
            raise WebSocketError("connection is closed")
        try:
            with self._send_lock:
                self.sock.sendall(_encode_frame(opcode, payload,
                                                mask=not self.server_side))
        except OSError as e:
            self.open = False
            raise WebSocketError(f"send failed: {e}") from None

    def send_text(self, text: str) -> None:
        self._send(OP_TEXT, text.encode("utf-8"))

    def recv_text(self, timeout: float = None):
        """Next text payload; None on a clean close.

        Control frames are handled inline (ping answered, pong dropped);
        continuation frames are reassembled.  Binary frames are returned
        decoded when they hold UTF-8, since some clients send JSON that way.
        """
        self.sock.settimeout(timeout)
        parts = []
        total = 0
        try:
            while True:
                fin, opcode, payload = _read_frame(self._read)
                if opcode == OP_CLOSE:
                    self._close_quietly(reply=True)
                    return None
                if opcode == OP_PING:
                    self._send(OP_PONG, payload)
                    continue
                if opcode == OP_PONG:
                    continue
                if opcode in (OP_TEXT, OP_BINARY, OP_CONT):
                    if opcode != OP_CONT and parts:
                        raise WebSocketError("interleaved data frames")
                    if opcode == OP_CONT and not parts:
                        raise WebSocketError("continuation with nothing to continue")
                    parts.append(payload)
                    total += len(payload)
                    if total > MAX_MESSAGE_BYTES:
                        raise WebSocketError("fragmented message exceeds the cap")
                    if fin:
                        try:
                            return b"".join(parts).decode("utf-8")
                        except UnicodeDecodeError:
                            raise WebSocketError("payload is not UTF-8") from None
                    continue
                raise WebSocketError(f"unsupported opcode {opcode:#x}")
        finally:
            self.sock.settimeout(None)

    def _close_quietly(self, reply: bool) -> None:
        if self.open and reply:
            try:
                self.sock.sendall(_encode_frame(OP_CLOSE, b"", not self.server_side))
            except OSError:
                pass
        self.open = False

    def close(self) -> None:
        self._close_quietly(reply=True)
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()
