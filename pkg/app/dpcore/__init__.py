"""Differential-privacy primitives: Laplace, exponential mechanism, budget accountant."""

from app.dpcore.models import PrivacyBudget, BudgetSpend, NoisyMeasurement
from app.dpcore.mechanisms import (
    COUNT_SENSITIVITY,
    laplace_noise,
    laplace_mechanism,
    exponential_probabilities,
    exponential_mechanism,
)
from app.dpcore.accountant import spend, remaining, audit_log_lines, export_audit_log

__all__ = [
    "PrivacyBudget",
    "BudgetSpend",
    "NoisyMeasurement",
    "COUNT_SENSITIVITY",
    "laplace_noise",
    "laplace_mechanism",
    "exponential_probabilities",
    "exponential_mechanism",
    "spend",
    "remaining",
    "audit_log_lines",
    "export_audit_log",
]
