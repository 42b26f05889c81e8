"""
Linear query evaluation over histograms and distributions.

A query lives on a marginal; it can be evaluated on any histogram or
distribution whose attributes include the marginal's (by projection).
"""

from typing import Iterable, Sequence

import numpy as np

from app.datamodel.models import Histogram, Marginal
from app.errors import DomainMismatchError
from app.synthgen.models import Distribution, Query, Workload


def domain_for(marginals: Iterable[Marginal]) -> Marginal:
    """Smallest domain (union of attributes) that covers every marginal."""
    sizes: dict[int, int] = {}
    for marginal in marginals:
        for attribute, size in zip(marginal.attributes, marginal.shape):
            if sizes.setdefault(attribute, size) != size:
                raise DomainMismatchError(
                    f"attribute {attribute} has sizes {sizes[attribute]} and {size} across marginals"
                )
    if not sizes:
        raise DomainMismatchError("no marginals given")
    attributes = tuple(sorted(sizes))
    return Marginal(attributes=attributes, shape=tuple(sizes[a] for a in attributes))


def _axes(domain: Marginal, marginal: Marginal) -> list[int]:
    axes = []
    for attribute, size in zip(marginal.attributes, marginal.shape):
        if attribute not in domain.attributes:
            raise DomainMismatchError(
                f"attribute {attribute} of marginal {marginal.label()} is outside domain {domain.label()}"
            )
        axis = domain.attributes.index(attribute)
        if domain.shape[axis] != size:
            raise DomainMismatchError(f"attribute {attribute} has mismatched size")
        axes.append(axis)
    return axes


def marginalize(values: np.ndarray, domain: Marginal, marginal: Marginal) -> np.ndarray:
    """Sum a flat domain vector down to a flat marginal vector."""
    keep = _axes(domain, marginal)
    if len(keep) == len(domain.attributes):
        return np.asarray(values, dtype=np.float64)
    dropped = tuple(a for a in range(len(domain.shape)) if a not in keep)
    return np.asarray(values, dtype=np.float64).reshape(domain.shape).sum(axis=dropped).ravel()


def broadcast(marginal_values: np.ndarray, marginal: Marginal, domain: Marginal) -> np.ndarray:
    """Reshape a marginal vector so it broadcasts against the domain array."""
    keep = _axes(domain, marginal)
    shape = [1] * len(domain.shape)
    for axis in keep:
        shape[axis] = domain.shape[axis]
    return np.asarray(marginal_values, dtype=np.float64).reshape(shape)


def project(source: Distribution | Histogram, marginal: Marginal) -> np.ndarray:
    """Marginal table of a distribution (or of a wider histogram)."""
    if isinstance(source, Histogram):
        return marginalize(source.counts, source.marginal, marginal)
    return marginalize(source.weights, source.domain, marginal)


def evaluate_query(source: Distribution | Histogram, query: Query) -> float:
    """q(source) = sum over cells of coefficient * count (or weight)."""
    return float(query.coefficients @ project(source, query.marginal))


def indicator_workload(marginals: Sequence[Marginal], labels: Sequence[str] | None = None) -> Workload:
    """One indicator query per cell of every marginal."""
    queries = []
    for i, marginal in enumerate(marginals):
        label = labels[i] if labels else None
        queries.extend(Query.indicator(marginal, cell, label) for cell in range(marginal.cell_count))
    return Workload(tuple(queries))


def tv_error(dist: Distribution, true_histogram: Histogram) -> float:
    """Total variation distance between normalised dist and histogram, in [0, 1]."""
    total = true_histogram.total
    if total == 0:
        raise ValueError("total variation against an empty histogram is undefined")
    estimate = project(dist, true_histogram.marginal)
    estimate = estimate / estimate.sum()
    truth = true_histogram.counts / total
    return float(0.5 * np.abs(estimate - truth).sum())


def workload_error(dist: Distribution, histograms: Sequence[Histogram]) -> float:
    """Mean total variation over the workload's marginals."""
    if not histograms:
        raise DomainMismatchError("no histograms to compare against")
    return float(np.mean([tv_error(dist, h) for h in histograms]))
