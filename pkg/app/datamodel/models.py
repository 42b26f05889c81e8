"""Data models for schemas, records, marginals and histograms."""

import math
from dataclasses import dataclass
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.errors import DomainMismatchError


class CategoricalAttribute(BaseModel):
    """Attribute with an explicit finite list of tokens."""
    model_config = ConfigDict(frozen=True)

    name: str
    kind: Literal["categorical"] = "categorical"
    values: list[str]
    pii: bool = False

    @model_validator(mode="after")
    def _check_domain(self):
        if not self.values:
            raise ValueError(f"categorical attribute {self.name!r} has an empty domain")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"categorical attribute {self.name!r} repeats a value")
        return self

    @property
    def domain_size(self) -> int:
        return len(self.values)


class NumericAttribute(BaseModel):
    """Attribute binned into equal-width intervals over [lo, hi]."""
    model_config = ConfigDict(frozen=True)

    name: str
    kind: Literal["numeric"] = "numeric"
    lo: float
    hi: float
    bins: int = 10
    pii: bool = False

    @model_validator(mode="after")
    def _check_range(self):
        if not self.lo < self.hi:
            raise ValueError(f"numeric attribute {self.name!r} needs lo < hi")
        if self.bins < 1:
            raise ValueError(f"numeric attribute {self.name!r} needs at least one bin")
        return self

    @property
    def domain_size(self) -> int:
        return self.bins

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.bins


class IdentifierAttribute(BaseModel):
    """Free-text identifying column (names, ids); always pii, never binned."""
    model_config = ConfigDict(frozen=True)

    name: str
    kind: Literal["identifier"] = "identifier"
    pii: Literal[True] = True

    @property
    def domain_size(self) -> int:
        return 1


AttributeSpec = Annotated[
    Union[CategoricalAttribute, NumericAttribute, IdentifierAttribute],
    Field(discriminator="kind"),
]


class Schema(BaseModel):
    """Ordered attribute list; every domain is finite."""
    model_config = ConfigDict(frozen=True)

    attributes: list[AttributeSpec]
    missing_values: list[str] = [""]

    @model_validator(mode="after")
    def _check_names(self):
        if not self.attributes:
            raise ValueError("schema has no attributes")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique")
        return self

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    @property
    def arity(self) -> int:
        return len(self.attributes)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DomainMismatchError(f"schema has no attribute {name!r}") from None

    def domain_size(self, index: int) -> int:
        return self.attributes[index].domain_size

    def usable_indices(self) -> list[int]:
        """Indices of attributes that may appear in a marginal (non-pii)."""
        return [i for i, a in enumerate(self.attributes) if not a.pii]

    def with_bins(self, bins: int) -> "Schema":
        """Copy with every numeric attribute rebinned."""
        attrs = [
            a.model_copy(update={"bins": bins}) if isinstance(a, NumericAttribute) else a
            for a in self.attributes
        ]
        return self.model_copy(update={"attributes": attrs})


@dataclass(frozen=True, slots=True)
class Record:
    """One individual's row; cells follow schema order."""
    cells: tuple[str | float, ...]

    def __len__(self) -> int:
        return len(self.cells)


class Marginal(BaseModel):
    """Attribute subset whose joint value combinations are counted."""
    model_config = ConfigDict(frozen=True)

    attributes: tuple[int, ...]
    shape: tuple[int, ...]

    @model_validator(mode="after")
    def _check_subset(self):
        if not self.attributes:
            raise ValueError("a marginal needs at least one attribute")
        if any(b <= a for a, b in zip(self.attributes, self.attributes[1:])):
            raise ValueError("marginal attribute indices must be strictly increasing")
        if len(self.shape) != len(self.attributes) or any(s < 1 for s in self.shape):
            raise ValueError("marginal shape must give a positive size per attribute")
        return self

    @classmethod
    def over(cls, schema: Schema, attributes: tuple[int, ...] | list[int]) -> "Marginal":
        """Build a marginal for a schema, refusing pii attributes."""
        attributes = tuple(attributes)
        for index in attributes:
            if not 0 <= index < schema.arity:
                raise DomainMismatchError(f"attribute index {index} outside schema")
            if schema.attributes[index].pii:
                raise ValueError(
                    f"attribute {schema.attributes[index].name!r} is pii and cannot be marginalised"
                )
        return cls(attributes=attributes, shape=tuple(schema.domain_size(i) for i in attributes))

    @property
    def cell_count(self) -> int:
        return math.prod(self.shape)

    def label(self, schema: Schema | None = None) -> str:
        if schema is None:
            return "x".join(str(i) for i in self.attributes)
        return "x".join(schema.attributes[i].name for i in self.attributes)


@dataclass(frozen=True)
class Histogram:
    """Counts over a marginal's cells, row-major in schema attribute order."""
    marginal: Marginal
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.shape != (self.marginal.cell_count,):
            raise DomainMismatchError(
                f"histogram has {counts.size} cells, marginal needs {self.marginal.cell_count}"
            )
        if (counts < 0).any():
            raise ValueError("histogram counts must be nonnegative")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "Histogram") -> "Histogram":
        if other.marginal != self.marginal:
            raise DomainMismatchError("cannot add histograms over different marginals")
        return Histogram(self.marginal, self.counts + other.counts)

    @classmethod
    def zeros(cls, marginal: Marginal) -> "Histogram":
        return cls(marginal, np.zeros(marginal.cell_count, dtype=np.int64))
