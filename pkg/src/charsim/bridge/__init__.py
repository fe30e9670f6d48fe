"""Live steering sessions: websocket server, wire protocol, headless client."""

from .client import SteeringClient, run_headless_client
from .protocol import (
    PROTOCOL_VERSION,
    ProtocolError,
    deserialize,
    make_error,
    make_frame_message,
    make_hello,
    parse_client_message,
    serialize,
)
from .session import Mailbox, MailboxStream, SteeringServer, run_session
from .ws import WebSocketError, WSConnection, client_handshake, server_handshake

__all__ = [
    "Mailbox",
    "MailboxStream",
    "PROTOCOL_VERSION",
    "ProtocolError",
    "SteeringClient",
    "SteeringServer",
    "WSConnection",
    "WebSocketError",
    "client_handshake",
    "deserialize",
    "make_error",
    "make_frame_message",
    "make_hello",
    "parse_client_message",
    "run_headless_client",
    "run_session",
    "serialize",
    "server_handshake",
]
