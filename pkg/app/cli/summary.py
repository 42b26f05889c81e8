"""Summaries of metrics files: mean and sample standard deviation per sweep point."""

import json
import logging
from pathlib import Path
from typing import Sequence

import pandas as pd
from pydantic import BaseModel

from app.errors import ConsistencyViolationError, EmptyInputError

logger = logging.getLogger(__name__)

POINT_KEYS = ["config_digest", "providers", "iterations"]
CONSISTENT_FIELDS = ["mpc_rounds", "mpc_global_bytes"]


class SummaryRow(BaseModel):
    providers: int
    iterations: int
    runs: int
    time_mean: float
    time_std: float
    rounds: int
    global_bytes: float
    mpc_global_bytes: int
    local_bytes_player0: float
    tv_error: float | None = None

    def time_label(self) -> str:
        return f"{self.time_mean:.2f} ± {self.time_std:.2f}"


def read_metrics(paths: Sequence[str | Path]) -> pd.DataFrame:
    rows = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            rows.extend(json.loads(line) for line in fh if line.strip())
    if not rows:
        raise EmptyInputError(f"no metrics records in {', '.join(str(p) for p in paths)}")
    frame = pd.DataFrame(rows)
    for key in POINT_KEYS:
        if key not in frame:
            frame[key] = ""
    return frame


def summarize(paths: Sequence[str | Path], check_consistency: bool = True) -> list[SummaryRow]:
    """
    Aggregate metrics records per sweep point.

    Time is reported in seconds. Rounds and MPC-phase bytes do not depend on
    the protocol seed, so any difference between repetitions is flagged.

    Raises:
        EmptyInputError: the files hold no records
        ConsistencyViolationError: repetitions of a point disagree on rounds or MPC bytes
    """
    frame = read_metrics(paths)
    if "time_s" not in frame:
        frame["time_s"] = frame["time_ms"] / 1000.0
    if "final_tv_error" not in frame:
        frame["final_tv_error"] = None

    rows, violations = [], []
    for key, group in frame.groupby(POINT_KEYS, sort=True):
        for name in CONSISTENT_FIELDS:
            if name in group and group[name].nunique() > 1:
                violations.append(f"{dict(zip(POINT_KEYS, key))}: {name} varies {sorted(group[name].unique())}")
        errors = group["final_tv_error"].dropna()
        std = group["time_s"].std(ddof=1) if len(group) > 1 else 0.0
        rows.append(SummaryRow(
            providers=int(key[1]),
            iterations=int(key[2]),
            runs=len(group),
            time_mean=float(group["time_s"].mean()),
            time_std=float(std),
            rounds=int(group["rounds"].iloc[0]) if "rounds" in group else 0,
            global_bytes=float(group["global_bytes"].mean()) if "global_bytes" in group else 0.0,
            mpc_global_bytes=int(group["mpc_global_bytes"].iloc[0]) if "mpc_global_bytes" in group else 0,
            local_bytes_player0=float(group["local_bytes_player0"].mean()) if "local_bytes_player0" in group else 0.0,
            tv_error=float(errors.median()) if len(errors) else None,
        ))

    if violations:
        for line in violations:
            logger.warning(f"Consistency violation: {line}")
        if check_consistency:
            raise ConsistencyViolationError("; ".join(violations))
    return rows


def format_table(rows: Sequence[SummaryRow]) -> str:
    """Plain-text table, one line per sweep point."""
    header = f"{'providers':>9} {'T':>5} {'runs':>4} {'time (s)':>16} {'rounds':>6} {'MPC bytes':>12} {'global MB':>10} {'TV':>6}"
    lines = [header]
    for row in rows:
        tv = f"{row.tv_error:.3f}" if row.tv_error is not None else "-"
        lines.append(
            f"{row.providers:>9} {row.iterations:>5} {row.runs:>4} {row.time_label():>16} "
            f"{row.rounds:>6} {row.mpc_global_bytes:>12} {row.global_bytes / 1e6:>10.2f} {tv:>6}"
        )
    return "\n".join(lines)
