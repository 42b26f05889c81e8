"""Draw synthetic records from a fitted distribution."""

import numpy as np

from app.datamodel.binning import bin_representative
from app.datamodel.models import Record, Schema
from app.synthgen.models import Distribution


def sample_records(dist: Distribution, m: int, rng: np.random.Generator, schema: Schema) -> list[Record]:
    """
    Draw m i.i.d. records from the normalised weights.

    Domain attributes decode to a category token or bin midpoint; attributes
    outside the domain (pii, or not covered by the workload) are left empty.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return []
    cells = rng.choice(dist.domain_cells, size=m, p=dist.normalized())
    bins = np.unravel_index(cells, dist.domain.shape)

    columns: list[list] = []
    for index, spec in enumerate(schema.attributes):
        if index in dist.domain.attributes:
            axis = dist.domain.attributes.index(index)
            columns.append([bin_representative(spec, int(b)) for b in bins[axis]])
        else:
            columns.append([""] * m)
    return [Record(cells=tuple(row)) for row in zip(*columns)]
