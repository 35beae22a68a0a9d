"""Wire protocol: length-prefixed JSON messages over TCP.

Every message carries a schema version ``v``.  Types: LEASE_REQ, LEASE,
RESULT, ACK, HEARTBEAT, JOB_DONE, ERROR.
"""

from __future__ import annotations

import json
import socket
import struct

PROTOCOL_VERSION = 1
_MAX_MESSAGE = 64 * 1024 * 1024


class ProtocolError(RuntimeError):
    pass


def send_msg(sock: socket.socket, msg: dict) -> None:
    msg = {"v": PROTOCOL_VERSION, **msg}
    payload = json.dumps(msg).encode("utf-8")
    sock.sendall(struct.pack(">I", len(payload)) + payload)


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        part = sock.recv(n - len(buf))
        if not part:
            raise ProtocolError("connection closed mid-message")
        buf.extend(part)
    return bytes(buf)


def recv_msg(sock: socket.socket) -> dict:
    (length,) = struct.unpack(">I", _recv_exact(sock, 4))
    if length > _MAX_MESSAGE:
        raise ProtocolError(f"message of {length} bytes exceeds limit")
    msg = json.loads(_recv_exact(sock, length).decode("utf-8"))
    if msg.get("v") != PROTOCOL_VERSION:
        raise ProtocolError(f"protocol version {msg.get('v')}, expected {PROTOCOL_VERSION}")
    return msg


def request(address: tuple[str, int], msg: dict, timeout: float = 10.0) -> dict:
    """One request/response exchange on a fresh connection."""
    with socket.create_connection(address, timeout=timeout) as sock:
        send_msg(sock, msg)
        return recv_msg(sock)
