"""
Length-prefixed binary framing.

Layout (big-endian): length u32 | msg_type u8 | sender u16 | payload, where
length = len(payload) + 3. A zero-payload frame is 7 bytes on the wire.
"""

import socket
import struct

from app.errors import ProtocolError
from app.netsim.models import Frame, MsgType

_HEADER = struct.Struct(">IBH")

HEADER_SIZE = _HEADER.size
MAX_SENDER = 0xFFFF


def frame_size(payload_len: int) -> int:
    """Bytes a frame with this payload occupies on the wire."""
    return HEADER_SIZE + payload_len


def encode_frame(frame: Frame) -> bytes:
    if not 0 <= frame.sender <= MAX_SENDER:
        raise ProtocolError(f"sender id {frame.sender} does not fit in two bytes")
    return _HEADER.pack(frame.length, int(frame.msg_type), frame.sender) + frame.payload


def decode_frame(data: bytes) -> Frame:
    if len(data) < HEADER_SIZE:
        raise ProtocolError("frame shorter than header")
    length, msg_type, sender = _HEADER.unpack_from(data, 0)
    if length != len(data) - 4:
        raise ProtocolError(f"declared length {length} does not match {len(data) - 4} bytes")
    try:
        decoded_type = MsgType(msg_type)
    except ValueError as exc:
        raise ProtocolError(f"unknown message type: {msg_type}") from exc
    return Frame(msg_type=decoded_type, sender=sender, payload=bytes(data[HEADER_SIZE:]))


def _recv_exact(conn: socket.socket, n: int) -> bytes | None:
    buf = bytearray()
    while len(buf) < n:
        chunk = conn.recv(n - len(buf))
        if not chunk:
            return None
        buf.extend(chunk)
    return bytes(buf)


def read_frame(conn: socket.socket) -> bytes | None:
    """Read one raw frame from a stream socket; None on clean close."""
    prefix = _recv_exact(conn, 4)
    if prefix is None:
        return None
    (length,) = struct.unpack(">I", prefix)
    if length < 3:
        raise ProtocolError(f"declared length {length} below header size")
    body = _recv_exact(conn, length)
    if body is None:
        raise ProtocolError("connection closed mid-frame")
    return prefix + body
