"""
Experiment runner.

For every (provider count x iteration count x repetition) the runner builds
pods, runs the pipeline and appends one metrics record to metrics.jsonl in
the experiment's output directory, next to per-run trace, audit and
synthetic-data files. The dataset of a sweep point depends only on the
config seed, so repetitions differ only in their protocol seed.
"""

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from pydantic import ValidationError

from app.agents import (
    MPC_PHASES,
    AgentRoster,
    Pod,
    PreferenceFile,
    ProtocolConfig,
    build_pods,
    load_resources,
    run_pipeline,
)
from app.cli.models import ExperimentConfig
from app.datamodel import (
    Record,
    export_records,
    Schema,
    load_dataset,
    load_schema,
    partition_fixed_total,
    partition_variable_total,
    simulate_schema_records,
    simulate_skewed,
    simulate_uniform,
)
from app.datamodel.partition import numeric_attribute, simulated_schema
from app.dpcore import export_audit_log
from app.errors import ConfigInvalidError, PodSynthError
from app.netsim import MetricsLedger
from app.synthgen import export_trace

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.jsonl"


@dataclass(frozen=True)
class RunPoint:
    providers: int
    iterations: int
    repetition: int
    seed: int

    def run_id(self, name: str) -> str:
        return f"{name}-p{self.providers}-T{self.iterations}-r{self.repetition}"


@dataclass
class ExperimentOutcome:
    records: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def repetition_seed(seed: int, repetition: int) -> int:
    """Protocol seed of one repetition, derived from the config seed."""
    return int(np.random.SeedSequence(seed, spawn_key=(repetition,)).generate_state(1)[0])


def sweep_points(config: ExperimentConfig) -> list[RunPoint]:
    providers = [0] if config.resources_path else config.providers
    return [
        RunPoint(providers=p, iterations=t, repetition=r, seed=repetition_seed(config.seed, r))
        for p in providers
        for t in config.iterations
        for r in range(config.repetitions)
    ]


def experiment_schema(config: ExperimentConfig) -> Schema:
    if config.dataset in ("uniform", "skewed"):
        return simulated_schema(config.lo, config.hi, config.bins)
    return load_schema(config.schema_path)


def experiment_roster(config: ExperimentConfig) -> AgentRoster:
    if config.roster_path:
        return AgentRoster.model_validate_json(Path(config.roster_path).read_text(encoding="utf-8"))
    return AgentRoster.default(config.n_encryption_agents, config.n_computation_agents)


def _dataset(config: ExperimentConfig, schema: Schema, n: int, rng: np.random.Generator) -> list[Record]:
    if config.dataset == "uniform":
        return simulate_uniform(n, config.lo, config.hi, rng)
    if config.dataset == "skewed":
        return simulate_skewed(n, numeric_attribute(lo=config.lo, hi=config.hi, bins=config.bins), config.skew, rng)
    if config.dataset == "schema":
        return simulate_schema_records(schema, n, rng)
    records = load_dataset(config.csv_path, schema)
    return records[:n] if n < len(records) else records


def build_experiment_pods(config: ExperimentConfig, schema: Schema, roster: AgentRoster, providers: int) -> list[Pod]:
    """Pods for one sweep point; every provider trusts the whole roster."""
    if config.resources_path:
        return load_resources(config.resources_path, schema)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(providers,)))
    if config.partition == "variable_total":
        sizes = partition_variable_total(providers, config.per_provider)
        records = _dataset(config, schema, sum(sizes), rng)
        partitions, start = [], 0
        for size in sizes:
            partitions.append(records[start:start + size])
            start += size
    else:
        n = config.total_records
        if config.dataset == "csv":
            n = len(load_dataset(config.csv_path, schema))
        partitions = partition_fixed_total(_dataset(config, schema, n, rng), providers)
    preference = PreferenceFile(
        trusted_encryption_agents=set(roster.encryption_names()),
        trusted_computation_agents=set(roster.computation_names()),
    )
    return build_pods(partitions, preference)


def _enclave_settings(config: ExperimentConfig) -> dict:
    settings = {}
    if config.enclave_manifest_path:
        settings["enclave_manifest"] = Path(config.enclave_manifest_path).read_bytes()
    if config.expected_measurement:
        settings["expected_measurement"] = config.expected_measurement
    return settings


def protocol_config(config: ExperimentConfig, point: RunPoint) -> ProtocolConfig:
    return ProtocolConfig(
        n_computation_agents=config.n_computation_agents,
        n_encryption_agents=config.n_encryption_agents,
        threshold=config.threshold,
        epsilon=config.epsilon,
        iterations=point.iterations,
        generator=config.generator,
        workload=config.workload,
        fit_iterations=config.fit_iterations,
        synthetic_records=config.synthetic_records,
        seed=point.seed,
        transport=config.transport,
        require_attestation=config.require_attestation,
        **_enclave_settings(config),
    )


def run_point(config: ExperimentConfig, point: RunPoint, frozen_clock: bool = False) -> dict:
    """Run one sweep point and write its per-run files; returns its metrics record."""
    out = Path(config.output_dir) / config.name
    run_id = point.run_id(config.name)
    schema = experiment_schema(config)
    roster = experiment_roster(config)
    pods = build_experiment_pods(config, schema, roster, point.providers)
    clock: Callable[[], float] = (lambda: 0.0) if frozen_clock else time.perf_counter
    ledger = MetricsLedger(run_id=run_id, clock=clock)

    logger.info(f"Run {run_id}: {len(pods)} pods, seed {point.seed}")
    result = run_pipeline(protocol_config(config, point), pods, roster, schema, ledger=ledger)

    for sub in ("traces", "synthetic", "audit"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    if result.trace is not None:
        export_trace(result.trace, out / "traces" / f"{run_id}.jsonl")
    export_records(result.records, schema, out / "synthetic" / f"{run_id}.csv")
    export_audit_log(result.budget, out / "audit" / f"{run_id}.jsonl")

    metrics = result.metrics
    mpc = metrics.restricted(MPC_PHASES)
    final_error = None
    if result.trace is not None and result.trace.steps:
        final_error = result.trace.steps[-1].tv_error
    return {
        "run_id": run_id,
        "config_digest": config.digest(),
        "providers": point.providers or len(pods),
        "iterations": point.iterations,
        "repetition": point.repetition,
        "seed": point.seed,
        "records": sum(len(p) for p in pods),
        "synthetic_records": len(result.records),
        "time_ms": round(metrics.total_time_ms, 3),
        "time_s": round(metrics.total_time_ms / 1000.0, 6),
        "rounds": metrics.total_rounds,
        "global_bytes": metrics.global_bytes,
        "local_bytes_player0": metrics.local_bytes_player0,
        "mpc_rounds": mpc.total_rounds,
        "mpc_global_bytes": mpc.global_bytes,
        "final_tv_error": final_error,
        "enclave": result.report.enclave,
        "excluded_providers": len(result.report.excluded_providers),
        "phases": [
            {
                "phase": p.phase,
                "time_ms": round(p.time_ms, 3),
                "rounds": p.rounds,
                "local_bytes_player0": p.local_bytes(metrics.player0),
                "global_bytes": p.global_bytes,
            }
            for p in metrics.phases
        ],
    }


def _guarded(config: ExperimentConfig, point: RunPoint, frozen_clock: bool) -> tuple[dict | None, dict | None]:
    try:
        return run_point(config, point, frozen_clock), None
    except PodSynthError as e:
        logger.error(f"Run {point.run_id(config.name)} aborted: {e}", exc_info=True)
        return None, {"run_id": point.run_id(config.name), "code": e.code, "error": str(e)}


def run_experiment(
    config: ExperimentConfig,
    frozen_clock: bool = False,
    parallel: bool = False,
    workers: int | None = None,
) -> ExperimentOutcome:
    """
    Run the whole sweep.

    Args:
        config: Resolved experiment config
        frozen_clock: Report zero wall time so metrics files are reproducible byte for byte
        parallel: Run sweep points in worker processes
        workers: Worker count for parallel runs

    Returns:
        ExperimentOutcome; metrics records are appended in sweep order
    """
    for path in (config.csv_path, config.schema_path, config.resources_path, config.roster_path, config.enclave_manifest_path):
        if path and not Path(path).exists():
            raise FileNotFoundError(f"input file not found: {path}")
    out = Path(config.output_dir) / config.name
    out.mkdir(parents=True, exist_ok=True)
    points = sweep_points(config)
    try:
        protocol_config(config, points[0])
    except ValidationError as e:
        raise ConfigInvalidError(f"invalid protocol parameters: {e}") from e
    logger.info(f"Experiment {config.name}: {len(points)} runs, config digest {config.digest()[:12]}")

    if parallel and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_guarded, config, point, frozen_clock) for point in points]
            results = [f.result() for f in futures]
    else:
        results = [_guarded(config, point, frozen_clock) for point in points]

    outcome = ExperimentOutcome()
    with open(out / METRICS_FILE, "a", encoding="utf-8") as fh:
        for record, failure in results:
            if record is not None:
                fh.write(json.dumps(record) + "\n")
                outcome.records.append(record)
            else:
                outcome.failures.append(failure)
    logger.info(f"Experiment {config.name}: {len(outcome.records)} runs done, {len(outcome.failures)} aborted")
    return outcome
