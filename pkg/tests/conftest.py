"""Shared fixtures for the podsynth test suite."""

import numpy as np
import pytest

from app.agents import AgentRoster, PreferenceFile, ProtocolConfig, build_pods
from app.datamodel import (
    CategoricalAttribute,
    IdentifierAttribute,
    NumericAttribute,
    Record,
    Schema,
    partition_fixed_total,
    simulate_uniform,
)
from app.datamodel.partition import simulated_schema


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def uniform_schema():
    return simulated_schema(lo=0.0, hi=20.0, bins=10)


@pytest.fixture
def mixed_schema():
    return Schema(attributes=[
        IdentifierAttribute(name="id"),
        CategoricalAttribute(name="color", values=["red", "green", "blue"]),
        NumericAttribute(name="size", lo=0.0, hi=10.0, bins=4),
    ])


@pytest.fixture
def roster():
    return AgentRoster.default(n_encryption=2, n_computation=3)


@pytest.fixture
def trust_all(roster):
    return PreferenceFile(
        trusted_encryption_agents=set(roster.encryption_names()),
        trusted_computation_agents=set(roster.computation_names()),
    )


@pytest.fixture
def make_uniform_pods(trust_all):
    """Factory: n uniform records over [0, 20) split across k providers."""
    def _make(n: int, k: int, seed: int = 0):
        records = simulate_uniform(n, 0.0, 20.0, np.random.default_rng(seed))
        return build_pods(partition_fixed_total(records, k), trust_all)
    return _make


@pytest.fixture
def make_mixed_pods(trust_all):
    """Factory: random mixed-schema records split across k providers."""
    def _make(n: int, k: int, seed: int = 0):
        gen = np.random.default_rng(seed)
        colors = ["red", "green", "blue"]
        records = [
            Record(cells=(f"id-{i}", colors[int(gen.integers(3))], float(gen.uniform(0.0, 10.0))))
            for i in range(n)
        ]
        return build_pods(partition_fixed_total(records, k), trust_all)
    return _make


@pytest.fixture
def protocol():
    return ProtocolConfig(epsilon=2.0, iterations=10, seed=42)
