"""
Privacy budget accountant (basic sequential composition).

A budget is owned by one pipeline run; spends are append-only and the run
aborts with BudgetExceededError rather than overspending.
"""

import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path

from app.dpcore.models import BudgetSpend, PrivacyBudget
from app.errors import BudgetExceededError, NonPositiveEpsilonError

logger = logging.getLogger(__name__)

# absorbs float rounding when a budget is split into many equal parts
_SLACK = 1e-12


def spend(budget: PrivacyBudget, eps: float, mechanism: str = "unspecified") -> PrivacyBudget:
    """
    Charge eps against the budget and record it in the audit log.

    Returns:
        The same budget object, updated in place
    """
    if not eps > 0:
        raise NonPositiveEpsilonError(f"cannot spend epsilon {eps}")
    projected = math.fsum([*(entry.epsilon for entry in budget.log), eps])
    if projected > budget.epsilon_total * (1 + _SLACK):
        raise BudgetExceededError(
            f"spending {eps:.6g} would reach {projected:.6g} > total {budget.epsilon_total:.6g}"
        )
    # spends inside the slack land on the total, never above it
    budget.epsilon_spent = min(projected, budget.epsilon_total)
    budget.log.append(BudgetSpend(
        step=len(budget.log),
        mechanism=mechanism,
        epsilon=eps,
        timestamp=datetime.now(timezone.utc),
    ))
    return budget


def remaining(budget: PrivacyBudget) -> float:
    """Unspent epsilon (never negative)."""
    return max(budget.epsilon_total - budget.epsilon_spent, 0.0)


def audit_log_lines(budget: PrivacyBudget) -> list[str]:
    """JSON-lines rendering: {step, mechanism, epsilon, timestamp}."""
    return [
        json.dumps({
            "step": entry.step,
            "mechanism": entry.mechanism,
            "epsilon": entry.epsilon,
            "timestamp": entry.timestamp.isoformat(),
        })
        for entry in budget.log
    ]


def export_audit_log(budget: PrivacyBudget, path: str | Path) -> None:
    """Write the audit log as JSON-lines."""
    lines = audit_log_lines(budget)
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    logger.info(f"Wrote {len(lines)} budget entries to {path}")
