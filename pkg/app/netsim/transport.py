"""
Transports behind one interface.

DeterministicTransport queues frames in-process and delivers them in a
seeded order at each quiesce point; SocketTransport moves the same frames
over localhost TCP with one listener thread per node. Both account bytes at
send time, so ledgers match across transports.
"""

import logging
import socket
import threading
from abc import ABC, abstractmethod
from typing import Callable

import numpy as np

from app.errors import ProtocolError, UnknownEndpointError
from app.netsim.codec import decode_frame, encode_frame, read_frame
from app.netsim.ledger import MetricsLedger
from app.netsim.models import Frame, MsgType, TranscriptEntry

logger = logging.getLogger(__name__)

Handler = Callable[[Frame], None]


class Transport(ABC):
    """Routes frames between registered nodes and reports to the ledger."""

    def __init__(self, ledger: MetricsLedger):
        self.ledger = ledger
        self.transcript: list[TranscriptEntry] = []
        self._handlers: dict[int, Handler] = {}
        self._transcript_lock = threading.Lock()

    def register(self, node: int, handler: Handler) -> None:
        self._handlers[node] = handler

    @property
    def nodes(self) -> list[int]:
        return sorted(self._handlers)

    def _check_endpoints(self, src: int, dst: int) -> None:
        for node in (src, dst):
            if node not in self._handlers:
                raise UnknownEndpointError(f"node {node} is not registered")

    def _account(self, src: int, dst: int, msg_type: MsgType, raw: bytes) -> None:
        self.ledger.record_send(src, dst, len(raw))
        with self._transcript_lock:
            self.transcript.append(TranscriptEntry(
                phase=self.ledger.phase,
                round=self.ledger.current_round,
                src=src,
                dst=dst,
                msg_type=msg_type,
                nbytes=len(raw),
            ))

    def send(self, src: int, dst: int, msg_type: MsgType, payload: bytes = b"") -> int:
        """Frame and send a payload; returns bytes put on the wire."""
        self._check_endpoints(src, dst)
        raw = encode_frame(Frame(msg_type=msg_type, sender=src, payload=payload))
        self._account(src, dst, msg_type, raw)
        self._transmit(dst, raw)
        return len(raw)

    def advance_round(self) -> int:
        """Deliver everything outstanding, then close the round."""
        self.quiesce()
        return self.ledger.advance_round()

    @abstractmethod
    def _transmit(self, dst: int, raw: bytes) -> None:
        ...

    @abstractmethod
    def quiesce(self) -> None:
        """Block until no frame is in flight."""

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class DeterministicTransport(Transport):
    """Single-threaded in-process delivery in a seeded global order."""

    def __init__(self, ledger: MetricsLedger, rng: np.random.Generator):
        super().__init__(ledger)
        self._rng = rng
        self._pending: list[tuple[int, bytes]] = []

    def _transmit(self, dst: int, raw: bytes) -> None:
        self._pending.append((dst, raw))

    def quiesce(self) -> None:
        while self._pending:
            batch, self._pending = self._pending, []
            for position in self._rng.permutation(len(batch)):
                dst, raw = batch[position]
                frame = decode_frame(raw)
                self.ledger.record_delivery()
                self._handlers[dst](frame)


class SocketTransport(Transport):
    """Localhost TCP transport; each node listens on its own port."""

    def __init__(self, ledger: MetricsLedger, timeout: float = 60.0):
        super().__init__(ledger)
        self._timeout = timeout
        self._listeners: dict[int, socket.socket] = {}
        self._addresses: dict[int, tuple[str, int]] = {}
        self._connections: dict[int, socket.socket] = {}
        self._node_locks: dict[int, threading.Lock] = {}
        self._send_lock = threading.Lock()
        self._idle = threading.Condition()
        self._threads: list[threading.Thread] = []
        self._errors: list[Exception] = []
        self._closed = False

    def register(self, node: int, handler: Handler) -> None:
        super().register(node, handler)
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind(("127.0.0.1", 0))
        listener.listen()
        self._listeners[node] = listener
        self._addresses[node] = listener.getsockname()
        self._node_locks[node] = threading.Lock()
        thread = threading.Thread(target=self._accept_loop, args=(node, listener), daemon=True)
        thread.start()
        self._threads.append(thread)

    def _accept_loop(self, node: int, listener: socket.socket) -> None:
        while not self._closed:
            try:
                conn, _ = listener.accept()
            except OSError:
                return
            thread = threading.Thread(target=self._serve, args=(node, conn), daemon=True)
            thread.start()
            self._threads.append(thread)

    def _serve(self, node: int, conn: socket.socket) -> None:
        with conn:
            while True:
                try:
                    raw = read_frame(conn)
                except (OSError, ProtocolError) as e:
                    if not self._closed:
                        logger.error(f"Node {node} receive failed: {e}")
                        self._fail(e)
                    return
                if raw is None:
                    return
                try:
                    frame = decode_frame(raw)
                    with self._node_locks[node]:
                        self._handlers[node](frame)
                except Exception as e:
                    logger.error(f"Node {node} handler failed: {e}", exc_info=True)
                    self._fail(e)
                finally:
                    self.ledger.record_delivery()
                    with self._idle:
                        self._idle.notify_all()

    def _fail(self, error: Exception) -> None:
        with self._idle:
            self._errors.append(error)
            self._idle.notify_all()

    def _transmit(self, dst: int, raw: bytes) -> None:
        with self._send_lock:
            conn = self._connections.get(dst)
            if conn is None:
                conn = socket.create_connection(self._addresses[dst], timeout=self._timeout)
                conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                self._connections[dst] = conn
            conn.sendall(raw)

    def quiesce(self) -> None:
        with self._idle:
            done = self._idle.wait_for(
                lambda: self._errors or self.ledger.inflight == 0,
                timeout=self._timeout,
            )
            if self._errors:
                raise self._errors[0]
            if not done:
                raise TimeoutError(f"{self.ledger.inflight} frames undelivered after {self._timeout}s")

    def close(self) -> None:
        self._closed = True
        with self._send_lock:
            for conn in self._connections.values():
                try:
                    conn.close()
                except OSError:
                    pass
            self._connections.clear()
        for listener in self._listeners.values():
            try:
                listener.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                listener.close()
            except OSError:
                pass


def make_transport(mode: str, ledger: MetricsLedger, rng: np.random.Generator) -> Transport:
    """Build the transport named by the run config ("deterministic" or "socket")."""
    if mode == "deterministic":
        return DeterministicTransport(ledger, rng)
    if mode == "socket":
        return SocketTransport(ledger)
    raise ValueError(f"unknown transport mode {mode!r}")
