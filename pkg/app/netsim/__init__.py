"""Message transport with exact accounting of rounds and bytes."""

from app.netsim.models import MsgType, Frame, TranscriptEntry, PhaseMetrics, MetricsSnapshot
from app.netsim.codec import HEADER_SIZE, encode_frame, decode_frame, frame_size
from app.netsim.ledger import MetricsLedger, ledger_lines, export_ledger
from app.netsim.transport import Transport, DeterministicTransport, SocketTransport, make_transport

__all__ = [
    "MsgType",
    "Frame",
    "TranscriptEntry",
    "PhaseMetrics",
    "MetricsSnapshot",
    "HEADER_SIZE",
    "encode_frame",
    "decode_frame",
    "frame_size",
    "MetricsLedger",
    "ledger_lines",
    "export_ledger",
    "Transport",
    "DeterministicTransport",
    "SocketTransport",
    "make_transport",
]
