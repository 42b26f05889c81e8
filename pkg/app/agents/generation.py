"""
DP synthetic-data generation over aggregate histograms.

Runs inside the enclave agent on the revealed aggregate, and in the
central oracle on a plaintext sum; both call generate_synthetic with the
same generation stream, so their outputs coincide.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from app.agents.models import ProtocolConfig
from app.datamodel.binning import all_two_way_marginals, full_marginal
from app.datamodel.models import Histogram, Marginal, Record, Schema
from app.dpcore.models import PrivacyBudget
from app.synthgen.measure_generate import measure_generate
from app.synthgen.models import Distribution, MwemTrace
from app.synthgen.mwem import mwem
from app.synthgen.queries import indicator_workload
from app.synthgen.sampling import sample_records

logger = logging.getLogger(__name__)


def workload_marginals(schema: Schema, mode: str = "two_way") -> list[Marginal]:
    """Marginals the encryption agents aggregate and the generator fits."""
    usable = schema.usable_indices()
    if not usable:
        raise ValueError("schema has no usable (non-pii) attributes")
    if mode == "two_way":
        return all_two_way_marginals(schema)
    if mode == "singletons":
        return [Marginal.over(schema, [i]) for i in usable]
    if mode == "full":
        return [full_marginal(schema)]
    raise ValueError(f"unknown workload mode {mode!r}")


@dataclass
class GenerationOutput:
    records: list[Record]
    distribution: Distribution
    budget: PrivacyBudget
    trace: Optional[MwemTrace] = None


def generate_synthetic(
    histograms: Sequence[Histogram],
    config: ProtocolConfig,
    schema: Schema,
    rng: np.random.Generator,
) -> GenerationOutput:
    """Fit the configured generator to the aggregate and sample the release."""
    budget = PrivacyBudget(epsilon_total=config.epsilon)
    trace = None
    if config.generator == "mwem":
        labels = [h.marginal.label(schema) for h in histograms]
        workload = indicator_workload([h.marginal for h in histograms], labels)
        distribution, trace = mwem(
            list(histograms),
            workload,
            config.epsilon,
            config.iterations,
            rng,
            budget,
            average_iterates=config.average_iterates,
            track_error=config.track_error,
            max_cells=config.max_domain_cells,
        )
    else:
        distribution = measure_generate(
            list(histograms),
            config.epsilon,
            config.fit_iterations,
            rng,
            budget,
            max_cells=config.max_domain_cells,
        )

    m = config.synthetic_records
    if m is None:
        m = int(histograms[0].total)
    records = sample_records(distribution, m, rng, schema)
    logger.info(
        f"Generated {len(records)} synthetic records with {config.generator} "
        f"(epsilon spent {budget.epsilon_spent:.6g} of {budget.epsilon_total:.6g})"
    )
    return GenerationOutput(records=records, distribution=distribution, budget=budget, trace=trace)
