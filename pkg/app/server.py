"""
podsynth HTTP service

Lets a data consumer request one decentralised computation over a simulated
dataset and read back the DP release and its metrics.
"""

import logging
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, ValidationError

from app.agents import run_pipeline
from app.cli.experiment import (
    RunPoint,
    build_experiment_pods,
    experiment_roster,
    experiment_schema,
    protocol_config,
)
from app.cli.models import ExperimentConfig
from app.config import configure_logging
from app.errors import ConfigInvalidError, PodSynthError
from app.netsim import MetricsLedger

configure_logging()
logger = logging.getLogger(__name__)

app = FastAPI(title="podsynth", description="Decentralised DP synthetic data generation")


class ComputationRequest(BaseModel):
    """Inline parameters for one run over a simulated dataset."""
    dataset: Literal["uniform", "skewed"] = "uniform"
    providers: int = Field(default=10, ge=1)
    partition: Literal["fixed_total", "variable_total"] = "fixed_total"
    total_records: int = Field(default=1000, ge=0)
    per_provider: int = Field(default=100, ge=0)
    bins: int = Field(default=10, ge=1)
    epsilon: float = 2.0
    iterations: int = 30
    generator: Literal["mwem", "measure_generate"] = "mwem"
    fit_iterations: int = 30
    synthetic_records: Optional[int] = None
    n_computation_agents: int = 3
    n_encryption_agents: int = 2
    require_attestation: bool = True
    seed: int = 0
    include_records: bool = False


class ComputationResponse(BaseModel):
    run_id: str
    enclave: Optional[str]
    synthetic_records: int
    epsilon_spent: float
    rounds: int
    global_bytes: int
    local_bytes_player0: int
    metrics: dict
    report: dict
    records: Optional[list[list]] = None


def _experiment(request: ComputationRequest) -> ExperimentConfig:
    try:
        return ExperimentConfig(
            name="service",
            dataset=request.dataset,
            providers=[request.providers],
            partition=request.partition,
            total_records=request.total_records,
            per_provider=request.per_provider,
            bins=request.bins,
            epsilon=request.epsilon,
            iterations=[request.iterations],
            generator=request.generator,
            workload="two_way",
            fit_iterations=request.fit_iterations,
            synthetic_records=request.synthetic_records,
            n_computation_agents=request.n_computation_agents,
            n_encryption_agents=request.n_encryption_agents,
            require_attestation=request.require_attestation,
            seed=request.seed,
        )
    except ValidationError as e:
        raise ConfigInvalidError(str(e)) from e


@app.get("/health")
def health():
    """Health check endpoint."""
    return {"status": "ok", "service": "podsynth"}


@app.post("/computations", response_model=ComputationResponse)
def create_computation(request: ComputationRequest) -> ComputationResponse:
    """Run the pipeline once and return the release with its metrics."""
    try:
        config = _experiment(request)
        point = RunPoint(providers=request.providers, iterations=request.iterations, repetition=0, seed=request.seed)
        run_id = point.run_id(config.name)
        try:
            protocol = protocol_config(config, point)
        except ValidationError as e:
            raise ConfigInvalidError(str(e)) from e
        schema = experiment_schema(config)
        roster = experiment_roster(config)
        pods = build_experiment_pods(config, schema, roster, request.providers)
        result = run_pipeline(protocol, pods, roster, schema, ledger=MetricsLedger(run_id=run_id))
    except ConfigInvalidError as e:
        logger.warning(f"Rejected computation request: {e}")
        raise HTTPException(status_code=422, detail={"code": e.code, "error": str(e)})
    except PodSynthError as e:
        logger.error(f"Computation aborted ({e.code}): {e}")
        raise HTTPException(status_code=409, detail={"code": e.code, "error": str(e)})

    metrics = result.metrics
    return ComputationResponse(
        run_id=run_id,
        enclave=result.report.enclave,
        synthetic_records=len(result.records),
        epsilon_spent=result.budget.epsilon_spent,
        rounds=metrics.total_rounds,
        global_bytes=metrics.global_bytes,
        local_bytes_player0=metrics.local_bytes_player0,
        metrics=metrics.model_dump(mode="json"),
        report=result.report.model_dump(mode="json"),
        records=[list(r.cells) for r in result.records] if request.include_records else None,
    )


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host="127.0.0.1", port=8000)
