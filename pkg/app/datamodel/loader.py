"""
Dataset and schema IO.

CSV inputs carry a header row; empty cells (and any schema-declared missing
tokens) mark missing values. Rows with a missing cell in a non-pii column are
dropped; pii columns are anonymised away, so their gaps keep the row.
"""

import logging
from pathlib import Path
from typing import IO, Sequence

import numpy as np
import pandas as pd

from app.datamodel.models import NumericAttribute, Record, Schema
from app.errors import HeaderMismatchError, UnknownCategoryError, UnparseableNumericError

logger = logging.getLogger(__name__)


def load_schema(path: str | Path) -> Schema:
    """Load a JSON schema file."""
    return Schema.model_validate_json(Path(path).read_text(encoding="utf-8"))


def load_dataset(csv_source: str | Path | IO[str], schema: Schema) -> list[Record]:
    """
    Read a CSV into records in schema order.

    Args:
        csv_source: Path or open text stream
        schema: Attribute schema; header names must match it (any order)

    Returns:
        Records with numeric cells parsed; rows with missing cells dropped
    """
    frame = pd.read_csv(
        csv_source,
        dtype=str,
        keep_default_na=False,
        skipinitialspace=True,
        encoding="utf-8",
    )
    header = [str(c).strip() for c in frame.columns]
    frame.columns = header
    if sorted(header) != sorted(schema.names):
        missing = sorted(set(schema.names) - set(header))
        extra = sorted(set(header) - set(schema.names))
        raise HeaderMismatchError(f"header does not match schema (missing={missing}, extra={extra})")

    frame = frame[schema.names].apply(lambda col: col.str.strip())
    checked = [spec.name for spec in schema.attributes if not spec.pii]
    missing_mask = frame[checked].isin(schema.missing_values).any(axis=1)
    dropped = int(missing_mask.sum())
    if dropped:
        logger.info(f"Dropped {dropped} rows with missing values")
    frame = frame[~missing_mask]

    columns: list[list] = []
    for spec in schema.attributes:
        column = frame[spec.name]
        if spec.pii:
            # anonymised away before binning; kept only in the pod
            columns.append(column.tolist())
        elif isinstance(spec, NumericAttribute):
            parsed = pd.to_numeric(column, errors="coerce")
            bad = parsed.isna() | ~np.isfinite(parsed.fillna(0.0))
            if bad.any():
                raise UnparseableNumericError(
                    f"attribute {spec.name!r} has non-numeric or non-finite value {column[bad].iloc[0]!r}"
                )
            columns.append(parsed.astype(float).tolist())
        else:
            unknown = ~column.isin(spec.values)
            if unknown.any():
                raise UnknownCategoryError(
                    f"value {column[unknown].iloc[0]!r} not in domain of {spec.name!r}"
                )
            columns.append(column.tolist())

    records = [Record(cells=tuple(row)) for row in zip(*columns)] if columns else []
    logger.info(f"Loaded {len(records)} records with {schema.arity} attributes")
    return records


def template_schema(csv_source: str | Path | IO[str]) -> dict:
    """
    Emit an editable schema skeleton from a CSV header.

    Every column becomes an empty categorical entry; domains are filled in by
    hand (no domain inference from the data).
    """
    header = pd.read_csv(csv_source, nrows=0, dtype=str).columns
    return {
        "attributes": [
            {"name": str(name).strip(), "kind": "categorical", "values": [], "pii": False}
            for name in header
        ],
        "missing_values": [""],
    }


def export_records(records: Sequence[Record], schema: Schema, path: str | Path) -> None:
    """Write records as a CSV matching the input schema's header."""
    frame = pd.DataFrame([r.cells for r in records], columns=schema.names)
    frame.to_csv(path, index=False, lineterminator="\n")

