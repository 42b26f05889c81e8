"""
Record simulators and provider partition strategies.

Fixed-total splits one dataset evenly across providers; variable-total gives
every provider the same number of records so the total grows with providers.
"""

from typing import Sequence, TypeVar

import numpy as np

from app.datamodel.binning import bin_representative
from app.datamodel.models import AttributeSpec, CategoricalAttribute, NumericAttribute, Record, Schema

T = TypeVar("T")

DEFAULT_SKEW = 0.5


def partition_fixed_total(records: Sequence[T], n_providers: int) -> list[list[T]]:
    """Split records into contiguous chunks whose sizes differ by at most one."""
    if n_providers < 1:
        raise ValueError("need at least one provider")
    base, extra = divmod(len(records), n_providers)
    out, start = [], 0
    for i in range(n_providers):
        size = base + (1 if i < extra else 0)
        out.append(list(records[start:start + size]))
        start += size
    return out


def partition_variable_total(n_providers: int, per_provider: int) -> list[int]:
    """Record count per provider when every provider holds per_provider records."""
    if n_providers < 1:
        raise ValueError("need at least one provider")
    if per_provider < 0:
        raise ValueError("per_provider must be nonnegative")
    return [per_provider] * n_providers


def simulate_uniform(n: int, lo: float, hi: float, rng: np.random.Generator) -> list[Record]:
    """Single-attribute records drawn i.i.d. uniform over [lo, hi)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return [Record(cells=(float(v),)) for v in rng.uniform(lo, hi, size=n)]


def skew_weights(domain_size: int, skew: float) -> np.ndarray:
    """Geometric bin weights skew^b, normalised."""
    if skew <= 0:
        raise ValueError("skew must be positive")
    weights = skew ** np.arange(domain_size, dtype=np.float64)
    return weights / weights.sum()


def simulate_skewed(
    n: int,
    domain: AttributeSpec,
    skew: float,
    rng: np.random.Generator,
) -> list[Record]:
    """
    Single-attribute records whose bin b has probability proportional to skew^b.

    Numeric values are drawn uniformly inside the chosen bin; skew=1 is uniform
    over bins.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    bins = rng.choice(domain.domain_size, size=n, p=skew_weights(domain.domain_size, skew))
    if isinstance(domain, CategoricalAttribute):
        return [Record(cells=(domain.values[b],)) for b in bins]
    offsets = rng.uniform(0.0, 1.0, size=n)
    values = domain.lo + (bins + offsets) * domain.width
    return [Record(cells=(float(min(v, domain.hi)),)) for v in values]


def simulate_schema_records(schema: Schema, n: int, rng: np.random.Generator) -> list[Record]:
    """
    Multi-attribute records with independent uniform bins per attribute.

    Pii attributes get a synthetic identifier; numeric cells take bin
    midpoints. Used for schema-scale runs when no CSV is supplied.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    columns = []
    for index, spec in enumerate(schema.attributes):
        if spec.pii:
            columns.append([f"{spec.name}-{i}" for i in range(n)])
            continue
        bins = rng.integers(0, spec.domain_size, size=n)
        columns.append([bin_representative(spec, int(b)) for b in bins])
    return [Record(cells=tuple(row)) for row in zip(*columns)] if n else []


def numeric_attribute(name: str = "value", lo: float = 0.0, hi: float = 20.0, bins: int = 10) -> NumericAttribute:
    """Single numeric attribute used by the simulated datasets."""
    return NumericAttribute(name=name, lo=lo, hi=hi, bins=bins)


def simulated_schema(lo: float = 0.0, hi: float = 20.0, bins: int = 10) -> Schema:
    """Schema of the one-attribute simulated datasets."""
    return Schema(attributes=[numeric_attribute(lo=lo, hi=hi, bins=bins)])
