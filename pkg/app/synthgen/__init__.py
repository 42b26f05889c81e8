"""Synthetic-data generation: MWEM, measure-generate, error metrics, sampling."""

from app.synthgen.models import Distribution, Query, Workload, MwemStep, MwemTrace
from app.synthgen.queries import (
    domain_for,
    project,
    evaluate_query,
    indicator_workload,
    tv_error,
    workload_error,
)
from app.synthgen.mwem import mw_update, mw_update_marginal, mwem, export_trace
from app.synthgen.measure_generate import measure_generate
from app.synthgen.sampling import sample_records

__all__ = [
    "Distribution",
    "Query",
    "Workload",
    "MwemStep",
    "MwemTrace",
    "domain_for",
    "project",
    "evaluate_query",
    "indicator_workload",
    "tv_error",
    "workload_error",
    "mw_update",
    "mw_update_marginal",
    "mwem",
    "export_trace",
    "measure_generate",
    "sample_records",
]
