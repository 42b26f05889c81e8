"""Data models for frames, transcripts and metrics."""

from dataclasses import dataclass
from enum import IntEnum

from pydantic import BaseModel


class MsgType(IntEnum):
    """Closed registry of wire message types."""
    SHARE_VECTOR = 1  # encryption agent -> computation agent
    AGGREGATE_SHARE = 2  # sealed aggregate share, computation agent -> enclave agent
    SELECTION_CONTRIBUTION = 3  # shares of a random contribution
    SELECTION_OPEN = 4  # share of the summed contribution, broadcast
    ATTESTATION = 5  # challenge / report
    REVEAL = 6  # orchestrator -> enclave: reveal-to-one and generation task
    RESULT = 7  # released DP output
    CONTROL = 8


@dataclass(frozen=True, slots=True)
class Frame:
    """One wire frame: 4-byte length, 1-byte type, 2-byte sender, payload."""
    msg_type: MsgType
    sender: int
    payload: bytes = b""

    @property
    def length(self) -> int:
        # length field counts type + sender + payload
        return len(self.payload) + 3


class TranscriptEntry(BaseModel):
    """Audit record of one frame on a directed link."""
    phase: str
    round: int
    src: int
    dst: int
    msg_type: MsgType
    nbytes: int


class PhaseMetrics(BaseModel):
    """Counters of one pipeline phase."""
    phase: str
    time_ms: float = 0.0
    rounds: int = 0
    sent_bytes: dict[int, int] = {}
    received_bytes: dict[int, int] = {}
    global_bytes: int = 0
    frames: int = 0

    def local_bytes(self, node: int) -> int:
        """Bytes sent plus received by one node."""
        return self.sent_bytes.get(node, 0) + self.received_bytes.get(node, 0)


class MetricsSnapshot(BaseModel):
    """Immutable view of a ledger: one entry per phase plus run totals."""
    run_id: str
    player0: int
    phases: list[PhaseMetrics]

    def phase(self, name: str) -> PhaseMetrics:
        for p in self.phases:
            if p.phase == name:
                return p
        raise KeyError(name)

    @property
    def total_time_ms(self) -> float:
        return sum(p.time_ms for p in self.phases)

    @property
    def total_rounds(self) -> int:
        return sum(p.rounds for p in self.phases)

    @property
    def global_bytes(self) -> int:
        return sum(p.global_bytes for p in self.phases)

    @property
    def local_bytes_player0(self) -> int:
        return sum(p.local_bytes(self.player0) for p in self.phases)

    def restricted(self, names: list[str]) -> "MetricsSnapshot":
        """Snapshot limited to some phases (e.g. the MPC phases)."""
        return MetricsSnapshot(
            run_id=self.run_id,
            player0=self.player0,
            phases=[p for p in self.phases if p.phase in names],
        )
