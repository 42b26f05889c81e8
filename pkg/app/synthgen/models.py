"""Data models for distributions, linear queries and MWEM traces."""

from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel

from app.datamodel.models import Marginal
from app.errors import EmptyWorkloadError

# relative tolerance on total mass after every update
MASS_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Distribution:
    """Nonnegative weights over a discrete domain, summing to the record count n."""
    domain: Marginal
    weights: np.ndarray
    total: float

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        if weights.shape != (self.domain.cell_count,):
            raise ValueError(
                f"distribution has {weights.size} weights, domain has {self.domain.cell_count} cells"
            )
        if not self.total > 0:
            raise ValueError("distribution mass must be positive")
        if (weights < 0).any():
            raise ValueError("distribution weights must be nonnegative")
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)

    @property
    def domain_cells(self) -> int:
        return self.domain.cell_count

    @classmethod
    def uniform(cls, domain: Marginal, total: float) -> "Distribution":
        return cls(domain, np.full(domain.cell_count, total / domain.cell_count), total)

    def normalized(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    def rescaled(self, weights: np.ndarray) -> "Distribution":
        """New distribution with the given weights scaled to this mass."""
        return Distribution(self.domain, weights * (self.total / weights.sum()), self.total)


@dataclass(frozen=True)
class Query:
    """Linear query on one marginal: q(x) = coefficients[cell of x], each in [-1, 1]."""
    id: str
    marginal: Marginal
    coefficients: np.ndarray

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=np.float64)
        if coefficients.shape != (self.marginal.cell_count,):
            raise ValueError("query needs one coefficient per marginal cell")
        if (np.abs(coefficients) > 1).any():
            raise ValueError("query coefficients must lie in [-1, 1]")
        coefficients.flags.writeable = False
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def indicator(cls, marginal: Marginal, cell: int, label: str | None = None) -> "Query":
        coefficients = np.zeros(marginal.cell_count)
        coefficients[cell] = 1.0
        return cls(f"{label or marginal.label()}[{cell}]", marginal, coefficients)


@dataclass(frozen=True)
class Workload:
    """Ordered, non-empty collection of linear queries."""
    queries: tuple[Query, ...]
    _marginals: tuple[Marginal, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.queries:
            raise EmptyWorkloadError("workload has no queries")
        seen: dict[Marginal, None] = {}
        for q in self.queries:
            seen.setdefault(q.marginal, None)
        object.__setattr__(self, "_marginals", tuple(seen))

    @property
    def marginals(self) -> tuple[Marginal, ...]:
        return self._marginals

    def __len__(self) -> int:
        return len(self.queries)


class MwemStep(BaseModel):
    """One MWEM round as written to the trace file."""
    iteration: int
    query_id: str
    noisy_value: float
    tv_error: float | None = None


class MwemTrace(BaseModel):
    """Per-iteration record of an MWEM run; one entry per round."""
    steps: list[MwemStep] = []

    def __len__(self) -> int:
        return len(self.steps)
