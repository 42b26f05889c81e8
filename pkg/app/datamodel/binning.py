"""
Client-side binning and histogram construction.

Numeric attributes use equal-width bins over [lo, hi]; values outside the
range clamp to the edge bins. Marginal cells are flattened row-major in
schema attribute order.
"""

import itertools
import math
from typing import Iterable, Sequence

import numpy as np

from app.datamodel.models import (
    AttributeSpec,
    CategoricalAttribute,
    Histogram,
    Marginal,
    NumericAttribute,
    Record,
    Schema,
)
from app.errors import DomainMismatchError, UnknownCategoryError, UnparseableNumericError


def bin_value(attribute: AttributeSpec, raw_value: str | float) -> int:
    """
    Map a raw cell to its bin index.

    Numeric: floor((v - lo) / width), v = hi lands in the last bin, out of
    range values clamp. Categorical: position in the value list.
    """
    if isinstance(attribute, NumericAttribute):
        v = float(raw_value)
        if not math.isfinite(v):
            raise UnparseableNumericError(f"attribute {attribute.name!r} has non-finite value {raw_value!r}")
        index = math.floor((v - attribute.lo) * attribute.bins / (attribute.hi - attribute.lo))
        return min(max(index, 0), attribute.bins - 1)

    token = str(raw_value)
    try:
        return attribute.values.index(token)
    except ValueError:
        raise UnknownCategoryError(
            f"value {token!r} not in domain of {attribute.name!r}"
        ) from None


def bin_representative(attribute: AttributeSpec, index: int) -> str | float:
    """Decode a bin back to a cell: the category token or the bin midpoint."""
    if not 0 <= index < attribute.domain_size:
        raise DomainMismatchError(f"bin {index} outside domain of {attribute.name!r}")
    if isinstance(attribute, CategoricalAttribute):
        return attribute.values[index]
    return attribute.lo + (index + 0.5) * attribute.width


def flatten_index(bins: Sequence[int], shape: Sequence[int]) -> int:
    """Row-major flat index of a bin tuple."""
    if len(bins) != len(shape):
        raise DomainMismatchError("bin tuple and shape differ in length")
    flat = 0
    for b, size in zip(bins, shape):
        if not 0 <= b < size:
            raise DomainMismatchError(f"bin {b} outside axis of size {size}")
        flat = flat * size + b
    return flat


def unflatten_index(flat: int, shape: Sequence[int]) -> tuple[int, ...]:
    """Inverse of flatten_index."""
    if not 0 <= flat < math.prod(shape):
        raise DomainMismatchError(f"flat index {flat} outside domain of {math.prod(shape)} cells")
    bins = []
    for size in reversed(shape):
        flat, b = divmod(flat, size)
        bins.append(b)
    return tuple(reversed(bins))


def binned_matrix(records: Sequence[Record], attributes: Sequence[int], schema: Schema) -> np.ndarray:
    """Bin indices of each record over the given attributes, shape (len(records), len(attributes))."""
    out = np.empty((len(records), len(attributes)), dtype=np.int64)
    for col, index in enumerate(attributes):
        spec = schema.attributes[index]
        if isinstance(spec, NumericAttribute):
            values = np.fromiter((float(r.cells[index]) for r in records), dtype=np.float64, count=len(records))
            if not np.isfinite(values).all():
                bad = values[~np.isfinite(values)][0]
                raise UnparseableNumericError(f"attribute {spec.name!r} has non-finite value {bad!r}")
            bins = np.floor((values - spec.lo) * spec.bins / (spec.hi - spec.lo)).astype(np.int64)
            out[:, col] = np.clip(bins, 0, spec.bins - 1)
        else:
            lookup = {v: i for i, v in enumerate(spec.values)}
            for row, record in enumerate(records):
                token = str(record.cells[index])
                if token not in lookup:
                    raise UnknownCategoryError(f"value {token!r} not in domain of {spec.name!r}")
                out[row, col] = lookup[token]
    return out


def build_histogram(records: Sequence[Record], marginal: Marginal, schema: Schema) -> Histogram:
    """Count each record once in the marginal cell its binned values select."""
    expected = Marginal.over(schema, marginal.attributes)
    if expected != marginal:
        raise DomainMismatchError("marginal does not match schema domain sizes")
    for record in records:
        if len(record) != schema.arity:
            raise DomainMismatchError(
                f"record has {len(record)} cells, schema has {schema.arity} attributes"
            )
    if not records:
        return Histogram.zeros(marginal)

    bins = binned_matrix(records, marginal.attributes, schema)
    flat = np.ravel_multi_index(tuple(bins.T), marginal.shape)
    counts = np.bincount(flat, minlength=marginal.cell_count)
    return Histogram(marginal, counts)


def full_marginal(schema: Schema, attributes: Iterable[int] | None = None) -> Marginal:
    """Marginal over the given (default: all usable) attributes."""
    indices = sorted(attributes) if attributes is not None else schema.usable_indices()
    return Marginal.over(schema, indices)


def all_two_way_marginals(schema: Schema) -> list[Marginal]:
    """Every pair of usable attributes; a single usable attribute yields its 1-way marginal."""
    usable = schema.usable_indices()
    if len(usable) == 1:
        return [Marginal.over(schema, usable)]
    return [Marginal.over(schema, pair) for pair in itertools.combinations(usable, 2)]
