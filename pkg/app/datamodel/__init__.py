"""Schemas, records, binning, marginals and histograms."""

from app.datamodel.models import (
    CategoricalAttribute,
    NumericAttribute,
    IdentifierAttribute,
    AttributeSpec,
    Schema,
    Record,
    Marginal,
    Histogram,
)
from app.datamodel.binning import (
    bin_value,
    bin_representative,
    flatten_index,
    unflatten_index,
    build_histogram,
    all_two_way_marginals,
    full_marginal,
)
from app.datamodel.loader import load_schema, load_dataset, template_schema, export_records
from app.datamodel.partition import (
    partition_fixed_total,
    partition_variable_total,
    simulate_uniform,
    simulate_skewed,
    simulate_schema_records,
)

__all__ = [
    "CategoricalAttribute",
    "NumericAttribute",
    "IdentifierAttribute",
    "AttributeSpec",
    "Schema",
    "Record",
    "Marginal",
    "Histogram",
    "bin_value",
    "bin_representative",
    "flatten_index",
    "unflatten_index",
    "build_histogram",
    "all_two_way_marginals",
    "full_marginal",
    "load_schema",
    "load_dataset",
    "template_schema",
    "export_records",
    "partition_fixed_total",
    "partition_variable_total",
    "simulate_uniform",
    "simulate_skewed",
    "simulate_schema_records",
]
