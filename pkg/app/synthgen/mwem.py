"""
MWEM: exponential-mechanism query selection, Laplace measurement and
multiplicative-weights updates over a full discrete domain.

Each round spends eps/(2T) on selection and eps/(2T) on measurement, so a
run spends exactly eps. Updates only see the released NoisyMeasurement.
"""

import json
import logging
from pathlib import Path
from typing import Sequence

import numpy as np

from app.config import get_max_domain_cells
from app.datamodel.models import Histogram, Marginal
from app.dpcore import (
    COUNT_SENSITIVITY,
    NoisyMeasurement,
    PrivacyBudget,
    exponential_mechanism,
    laplace_mechanism,
    remaining,
    spend,
)
from app.errors import BudgetExceededError, DomainMismatchError, DomainTooLargeError, EmptyWorkloadError
from app.synthgen.models import Distribution, MwemStep, MwemTrace, Query, Workload
from app.synthgen.queries import broadcast, domain_for, evaluate_query, project, workload_error

logger = logging.getLogger(__name__)


def mw_update(dist: Distribution, query: Query, measurement: NoisyMeasurement) -> Distribution:
    """
    Multiplicative-weights step towards one noisy answer.

    weights[x] *= exp(q(x) * (m - q(A)) / (2n)), then rescaled to mass n.
    """
    if not np.isfinite(measurement.value):
        raise ValueError("measurement must be finite")
    error = measurement.value - evaluate_query(dist, query)
    q_x = broadcast(query.coefficients, query.marginal, dist.domain)
    factor = np.exp(q_x * error / (2.0 * dist.total))
    updated = (dist.weights.reshape(dist.domain.shape) * factor).ravel()
    return dist.rescaled(updated)


def mw_update_marginal(dist: Distribution, marginal: Marginal, noisy_counts: np.ndarray) -> Distribution:
    """
    Apply the cell-indicator updates of one marginal together.

    The cells of a marginal partition the domain, so every domain point gets
    exactly one factor exp((m_c - A_c) / (2n)).
    """
    noisy_counts = np.asarray(noisy_counts, dtype=np.float64)
    if noisy_counts.shape != (marginal.cell_count,):
        raise DomainMismatchError("noisy marginal does not match marginal shape")
    errors = noisy_counts - project(dist, marginal)
    factor = broadcast(np.exp(errors / (2.0 * dist.total)), marginal, dist.domain)
    updated = (dist.weights.reshape(dist.domain.shape) * factor).ravel()
    return dist.rescaled(updated)


def _answer_sources(true_histogram: Histogram | Sequence[Histogram]) -> dict[Marginal, Histogram]:
    histograms = [true_histogram] if isinstance(true_histogram, Histogram) else list(true_histogram)
    if not histograms:
        raise DomainMismatchError("no histograms given")
    totals = {h.total for h in histograms}
    if len(totals) != 1:
        raise DomainMismatchError(f"histograms disagree on record count: {sorted(totals)}")
    return {h.marginal: h for h in histograms}


def _source_for(sources: dict[Marginal, Histogram], marginal: Marginal) -> Histogram:
    if marginal in sources:
        return sources[marginal]
    for hist in sources.values():
        if set(marginal.attributes) <= set(hist.marginal.attributes):
            return hist
    raise DomainMismatchError(f"no histogram covers marginal {marginal.label()}")


def check_domain_size(domain: Marginal, max_cells: int | None = None) -> None:
    limit = max_cells if max_cells is not None else get_max_domain_cells()
    if domain.cell_count > limit:
        raise DomainTooLargeError(
            f"full domain has {domain.cell_count:.3g} cells, limit is {limit:.3g}"
        )


class _WorkloadEvaluator:
    """Answers every workload query at once, one projection per marginal."""

    def __init__(self, workload: Workload):
        self.groups: list[tuple[Marginal, np.ndarray, np.ndarray]] = []
        for marginal in workload.marginals:
            positions = [i for i, q in enumerate(workload.queries) if q.marginal == marginal]
            matrix = np.stack([workload.queries[i].coefficients for i in positions])
            self.groups.append((marginal, np.array(positions), matrix))
        self.size = len(workload)

    def answers(self, source: Distribution | Histogram) -> np.ndarray:
        out = np.empty(self.size)
        for marginal, positions, matrix in self.groups:
            out[positions] = matrix @ project(source, marginal)
        return out


def mwem(
    true_histogram: Histogram | Sequence[Histogram],
    workload: Workload,
    eps: float,
    iterations: int,
    rng: np.random.Generator,
    budget: PrivacyBudget,
    average_iterates: bool = False,
    track_error: bool = True,
    max_cells: int | None = None,
) -> tuple[Distribution, MwemTrace]:
    """
    Run MWEM for a fixed number of rounds.

    Args:
        true_histogram: Aggregate histogram(s) the workload queries read
        workload: Linear queries to answer accurately
        eps: Total privacy budget of the run
        iterations: Number of rounds T
        rng: Seeded generator
        budget: Accountant charged 2T times eps/(2T)
        average_iterates: Return the mean of A_1..A_T instead of A_T
        track_error: Record error against the true histograms in the trace
            (a non-private diagnostic)
        max_cells: Override of the full-domain size limit

    Returns:
        (distribution, trace)
    """
    if workload is None or len(workload) == 0:
        raise EmptyWorkloadError("MWEM needs a non-empty workload")
    if iterations < 1:
        raise ValueError("MWEM needs at least one iteration")
    if remaining(budget) < eps * (1 - 1e-12):
        raise BudgetExceededError(
            f"budget has {remaining(budget):.6g} left, MWEM needs {eps:.6g}"
        )

    sources = _answer_sources(true_histogram)
    domain = domain_for(workload.marginals)
    check_domain_size(domain, max_cells)
    n = float(next(iter(sources.values())).total)
    if n <= 0:
        raise DomainMismatchError("MWEM needs at least one record")

    evaluator = _WorkloadEvaluator(workload)
    true_answers = np.empty(len(workload))
    for marginal, positions, matrix in evaluator.groups:
        true_answers[positions] = matrix @ project(_source_for(sources, marginal), marginal)
    error_histograms = [_source_for(sources, m) for m in workload.marginals]

    eps_round = eps / (2.0 * iterations)
    estimate = Distribution.uniform(domain, n)
    running_sum = np.zeros(domain.cell_count) if average_iterates else None
    trace = MwemTrace()

    logger.info(
        f"MWEM: {len(workload)} queries, {domain.cell_count} cells, eps={eps}, T={iterations}"
    )
    for i in range(iterations):
        scores = np.abs(evaluator.answers(estimate) - true_answers)
        spend(budget, eps_round, "exponential")
        chosen = exponential_mechanism(scores, eps_round, COUNT_SENSITIVITY, rng)
        query = workload.queries[chosen]

        spend(budget, eps_round, "laplace")
        measurement = laplace_mechanism(true_answers[chosen], COUNT_SENSITIVITY, eps_round, rng, query=query.id)
        estimate = mw_update(estimate, query, measurement)
        if running_sum is not None:
            running_sum += estimate.weights

        error = workload_error(estimate, error_histograms) if track_error else None
        trace.steps.append(MwemStep(
            iteration=i + 1,
            query_id=query.id,
            noisy_value=measurement.value,
            tv_error=error,
        ))

    if running_sum is not None:
        estimate = Distribution(domain, running_sum / iterations, n)
    return estimate, trace


def export_trace(trace: MwemTrace, path: str | Path) -> None:
    """Write the trace as JSON-lines: {iteration, query_id, noisy_value, tv_error}."""
    with open(path, "w", encoding="utf-8") as fh:
        for step in trace.steps:
            fh.write(json.dumps(step.model_dump()) + "\n")
