"""
Laplace and exponential mechanisms.

Both take an explicit numpy Generator so seeded runs are reproducible.
Sampling uses double-precision floats; floating-point attacks on the
textbook Laplace sampler are not mitigated here.
"""

from typing import Sequence

import numpy as np

from app.dpcore.models import NoisyMeasurement
from app.errors import EmptyScoresError, NonPositiveEpsilonError, NonPositiveSensitivityError

# one individual changes one count by one
COUNT_SENSITIVITY = 1.0


def _check_privacy_parameters(eps: float, sensitivity: float) -> None:
    if not eps > 0:
        raise NonPositiveEpsilonError(f"epsilon must be positive, got {eps}")
    if not sensitivity > 0:
        raise NonPositiveSensitivityError(f"sensitivity must be positive, got {sensitivity}")


def laplace_noise(scale: float, size: int | None, rng: np.random.Generator) -> np.ndarray | float:
    """
    Inverse-CDF Laplace(0, scale) samples: scale * sign(u) * ln(1 - 2|u|), u ~ U(-1/2, 1/2).

    Returns a float when size is None, else an array of that length.
    """
    count = 1 if size is None else size
    u = rng.random(count) - 0.5
    # u = -1/2 would give ln(0); redraw those points
    edge = np.abs(u) >= 0.5
    while edge.any():
        u[edge] = rng.random(int(edge.sum())) - 0.5
        edge = np.abs(u) >= 0.5
    samples = scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    if size is None:
        return float(samples[0])
    return samples


def laplace_mechanism(
    true_value: float,
    sensitivity: float,
    eps: float,
    rng: np.random.Generator,
    query: str = "",
) -> NoisyMeasurement:
    """
    Release true_value + Laplace(sensitivity / eps).

    Args:
        true_value: Exact query answer
        sensitivity: L1 sensitivity of the query
        eps: Privacy budget spent on this release
        rng: Seeded generator
        query: Identifier carried into the measurement

    Returns:
        NoisyMeasurement with value, epsilon_used and scale
    """
    _check_privacy_parameters(eps, sensitivity)
    scale = sensitivity / eps
    noise = laplace_noise(scale, None, rng)
    return NoisyMeasurement(query=query, value=float(true_value) + noise, epsilon_used=eps, scale=scale)


def exponential_probabilities(scores: Sequence[float], eps: float, sensitivity: float) -> np.ndarray:
    """Selection probabilities proportional to exp(eps * score / (2 * sensitivity))."""
    if len(scores) == 0:
        raise EmptyScoresError("exponential mechanism needs at least one candidate")
    _check_privacy_parameters(eps, sensitivity)
    values = np.asarray(scores, dtype=np.float64)
    logits = eps * (values - values.max()) / (2.0 * sensitivity)
    weights = np.exp(logits)
    return weights / weights.sum()


def exponential_mechanism(
    scores: Sequence[float],
    eps: float,
    sensitivity: float,
    rng: np.random.Generator,
) -> int:
    """Sample a candidate index; higher scores are exponentially more likely."""
    probabilities = exponential_probabilities(scores, eps, sensitivity)
    cumulative = np.cumsum(probabilities)
    u = rng.random() * cumulative[-1]
    index = int(np.searchsorted(cumulative, u, side="right"))
    return min(index, len(probabilities) - 1)
