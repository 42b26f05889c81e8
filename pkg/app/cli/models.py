"""Experiment configuration: key=value files plus command-line overrides."""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Literal, Mapping, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.config import get_output_dir
from app.errors import ConfigInvalidError

logger = logging.getLogger(__name__)

_LIST_FIELDS = {"providers", "iterations"}


class ExperimentConfig(BaseModel):
    """One sweep over provider counts and iteration counts."""
    name: str = "experiment"
    dataset: Literal["uniform", "skewed", "schema", "csv"] = "uniform"
    csv_path: Optional[str] = None
    schema_path: Optional[str] = None
    resources_path: Optional[str] = None
    roster_path: Optional[str] = None
    lo: float = 0.0
    hi: float = 20.0
    skew: float = Field(default=0.5, gt=0)
    partition: Literal["fixed_total", "variable_total"] = "fixed_total"
    total_records: int = Field(default=10_000, ge=0)
    per_provider: int = Field(default=100, ge=0)
    providers: list[int] = [100]
    bins: int = Field(default=10, ge=1)
    epsilon: float = 2.0
    iterations: list[int] = [30]
    generator: Literal["mwem", "measure_generate"] = "mwem"
    workload: Literal["two_way", "singletons", "full"] = "two_way"
    fit_iterations: int = Field(default=30, ge=0)
    synthetic_records: Optional[int] = Field(default=None, ge=0)
    n_computation_agents: int = Field(default=3, ge=1)
    n_encryption_agents: int = Field(default=2, ge=1)
    threshold: Optional[int] = None
    transport: Literal["deterministic", "socket"] = "deterministic"
    require_attestation: bool = True
    enclave_manifest_path: Optional[str] = None
    expected_measurement: Optional[str] = None
    seed: int = Field(default=0, ge=0)
    repetitions: int = 1
    output_dir: str = Field(default_factory=lambda: str(get_output_dir()))

    @field_validator("providers", "iterations", mode="before")
    @classmethod
    def _split_list(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [int(v) for v in value.replace(";", ",").split(",") if v.strip()]
        if isinstance(value, int):
            return [value]
        return value

    @model_validator(mode="after")
    def _check_sweep(self):
        if not self.providers or any(p < 1 for p in self.providers):
            raise ValueError("providers sweep must be non-empty and positive")
        if not self.iterations or any(t < 1 for t in self.iterations):
            raise ValueError("iterations sweep must be non-empty with T >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.dataset == "csv" and not (self.csv_path and self.schema_path):
            raise ValueError("csv datasets need csv_path and schema_path")
        if self.dataset == "schema" and not self.schema_path:
            raise ValueError("schema datasets need schema_path")
        if not self.hi > self.lo:
            raise ValueError("hi must exceed lo")
        return self

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form (output location excluded), embedded in every metrics record."""
        canonical = json.dumps(self.model_dump(mode="json", exclude={"output_dir"}), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _normalise(values: Mapping[str, Any]) -> dict[str, Any]:
    out = {}
    for key, value in values.items():
        if value is None or value == "":
            continue
        out[key.strip().lower().replace("-", "_")] = value
    return out


def load_experiment_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> ExperimentConfig:
    """
    Resolve an experiment config.

    Args:
        path: key=value file (dotenv syntax, keys case-insensitive)
        overrides: values taking precedence, e.g. parsed command-line flags;
            None entries are ignored

    Raises:
        FileNotFoundError: path does not exist
        ConfigInvalidError: the merged values fail validation
    """
    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        values.update(_normalise(dotenv_values(path)))
        logger.info(f"Loaded experiment config from {path}")
    if overrides:
        values.update(_normalise(overrides))
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigInvalidError(f"invalid experiment config: {e}") from e
