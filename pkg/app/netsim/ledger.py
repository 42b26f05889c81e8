"""
Metrics ledger: wall time, rounds, per-node and global bytes per phase.

The ledger is owned by the transport; agents never touch it directly. A
round is counted at each barrier that closes a step in which frames moved.
"""

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from app.errors import InflightFramesError
from app.netsim.models import MetricsSnapshot, PhaseMetrics

logger = logging.getLogger(__name__)


@dataclass
class _PhaseCounters:
    started: float
    ended: float | None = None
    rounds: int = 0
    frames: int = 0
    global_bytes: int = 0
    sent: dict[int, int] = field(default_factory=dict)
    received: dict[int, int] = field(default_factory=dict)


class MetricsLedger:
    """Per-phase counters for one pipeline run."""

    def __init__(self, run_id: str = "run", player0: int = 0, clock: Callable[[], float] = time.perf_counter):
        self.run_id = run_id
        self.player0 = player0
        self._clock = clock
        self._phases: dict[str, _PhaseCounters] = {}
        self._current: str | None = None
        self._inflight = 0
        self._step_frames = 0
        self._lock = threading.Lock()

    @property
    def phase(self) -> str:
        if self._current is None:
            self.reset("setup")
        return self._current

    @property
    def inflight(self) -> int:
        with self._lock:
            return self._inflight

    @property
    def current_round(self) -> int:
        counters = self._phases.get(self.phase)
        return counters.rounds if counters else 0

    def reset(self, phase: str) -> None:
        """Close the running phase and start fresh counters for `phase`."""
        with self._lock:
            now = self._clock()
            if self._current is not None:
                running = self._phases[self._current]
                if running.ended is None:
                    running.ended = now
            self._phases[phase] = _PhaseCounters(started=now)
            self._current = phase
            self._step_frames = 0

    def record_send(self, src: int, dst: int, nbytes: int) -> None:
        phase = self.phase
        with self._lock:
            counters = self._phases[phase]
            counters.sent[src] = counters.sent.get(src, 0) + nbytes
            counters.received[dst] = counters.received.get(dst, 0) + nbytes
            counters.global_bytes += nbytes
            counters.frames += 1
            self._inflight += 1
            self._step_frames += 1

    def record_delivery(self) -> None:
        with self._lock:
            self._inflight -= 1

    def advance_round(self) -> int:
        """Barrier: count a round if any frame moved since the last barrier."""
        phase = self.phase
        with self._lock:
            if self._inflight:
                raise InflightFramesError(f"{self._inflight} frames still in flight at barrier")
            counters = self._phases[phase]
            if self._step_frames:
                counters.rounds += 1
                self._step_frames = 0
            return counters.rounds

    def close(self) -> None:
        """Stop the running phase's clock."""
        with self._lock:
            if self._current is not None and self._phases[self._current].ended is None:
                self._phases[self._current].ended = self._clock()

    def snapshot(self) -> MetricsSnapshot:
        """Consistent copy of all phase counters; refuses while frames are in flight."""
        with self._lock:
            if self._inflight:
                raise InflightFramesError(f"cannot snapshot with {self._inflight} frames in flight")
            now = self._clock()
            phases = [
                PhaseMetrics(
                    phase=name,
                    time_ms=((c.ended if c.ended is not None else now) - c.started) * 1000.0,
                    rounds=c.rounds,
                    sent_bytes=dict(c.sent),
                    received_bytes=dict(c.received),
                    global_bytes=c.global_bytes,
                    frames=c.frames,
                )
                for name, c in self._phases.items()
            ]
        return MetricsSnapshot(run_id=self.run_id, player0=self.player0, phases=phases)


def ledger_lines(snapshot: MetricsSnapshot) -> list[str]:
    """JSON-lines: {run_id, phase, time_ms, rounds, local_bytes_player0, global_bytes}."""
    return [
        json.dumps({
            "run_id": snapshot.run_id,
            "phase": p.phase,
            "time_ms": round(p.time_ms, 3),
            "rounds": p.rounds,
            "local_bytes_player0": p.local_bytes(snapshot.player0),
            "global_bytes": p.global_bytes,
        })
        for p in snapshot.phases
    ]


def export_ledger(snapshot: MetricsSnapshot, path: str | Path) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for line in ledger_lines(snapshot):
            fh.write(line + "\n")
    logger.info(f"Appended {len(snapshot.phases)} phase records to {path}")
