"""
Measure-generate baseline: noise every marginal once, then fit a full-domain
distribution to the noisy tables by cycling multiplicative-weights updates.

Fitting is post-processing and spends no further budget.
"""

import logging
from typing import Sequence

import numpy as np

from app.datamodel.models import Histogram
from app.dpcore import COUNT_SENSITIVITY, PrivacyBudget, laplace_noise, remaining, spend
from app.errors import BudgetExceededError, EmptyWorkloadError, NonPositiveEpsilonError
from app.synthgen.models import Distribution
from app.synthgen.mwem import check_domain_size, mw_update_marginal
from app.synthgen.queries import domain_for

logger = logging.getLogger(__name__)


def measure_marginals(
    true_marginals: Sequence[Histogram],
    eps: float,
    rng: np.random.Generator,
    budget: PrivacyBudget,
) -> list[np.ndarray]:
    """Laplace-noise every cell of every marginal at eps / (number of marginals)."""
    eps_each = eps / len(true_marginals)
    scale = COUNT_SENSITIVITY / eps_each
    noisy = []
    for hist in true_marginals:
        spend(budget, eps_each, "laplace-marginal")
        noisy.append(hist.counts + laplace_noise(scale, hist.marginal.cell_count, rng))
    return noisy


def measure_generate(
    true_marginals: Sequence[Histogram],
    eps: float,
    fit_iterations: int,
    rng: np.random.Generator,
    budget: PrivacyBudget,
    max_cells: int | None = None,
) -> Distribution:
    """
    Measure each marginal once, then fit.

    Args:
        true_marginals: Aggregate histograms over a common schema
        eps: Total budget, split evenly across marginals
        fit_iterations: Passes over all noisy marginals
        rng: Seeded generator
        budget: Accountant charged once per marginal
        max_cells: Override of the full-domain size limit

    Returns:
        Fitted distribution (uniform when fit_iterations is 0)
    """
    if not true_marginals:
        raise EmptyWorkloadError("measure-generate needs at least one marginal")
    if not eps > 0:
        raise NonPositiveEpsilonError(f"epsilon must be positive, got {eps}")
    if remaining(budget) < eps * (1 - 1e-12):
        raise BudgetExceededError(
            f"budget has {remaining(budget):.6g} left, measure-generate needs {eps:.6g}"
        )
    domain = domain_for(h.marginal for h in true_marginals)
    check_domain_size(domain, max_cells)

    n = float(true_marginals[0].total)
    if n <= 0:
        raise ValueError("measure-generate needs at least one record")

    noisy = measure_marginals(true_marginals, eps, rng, budget)
    logger.info(
        f"Measured {len(noisy)} marginals; fitting {domain.cell_count} cells for {fit_iterations} passes"
    )

    estimate = Distribution.uniform(domain, n)
    for _ in range(fit_iterations):
        for hist, measured in zip(true_marginals, noisy):
            estimate = mw_update_marginal(estimate, hist.marginal, measured)
    return estimate
