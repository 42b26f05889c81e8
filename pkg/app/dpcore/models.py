"""Data models for privacy accounting and noisy measurements."""

from datetime import datetime

from pydantic import BaseModel, Field, model_validator


class BudgetSpend(BaseModel):
    """One audit-log entry."""
    step: int
    mechanism: str
    epsilon: float
    timestamp: datetime


class PrivacyBudget(BaseModel):
    """Sequential-composition ledger for pure epsilon-DP (delta = 0)."""
    epsilon_total: float = Field(gt=0)
    epsilon_spent: float = 0.0
    log: list[BudgetSpend] = []

    @model_validator(mode="after")
    def _check_spent(self):
        if self.epsilon_spent < 0:
            raise ValueError("epsilon_spent must be nonnegative")
        return self


class NoisyMeasurement(BaseModel):
    """A query answer released through a noise mechanism."""
    query: str
    value: float
    epsilon_used: float = Field(gt=0)
    scale: float = Field(gt=0)
