"""
End-to-end pipeline: match, aggregate, select, attest, reveal, generate, release.

Each phase opens fresh ledger counters. Only the elected enclave ever holds
enough shares to reconstruct the aggregate, and only after every verifier
has accepted its quote. The run is all-or-nothing: any error aborts it.
"""

import json
import logging
from typing import Sequence

import numpy as np

from app.agents.attestation import Verifier
from app.agents.computation import ComputationAgent, EnclaveAgent, joint_random_select, reveal_to
from app.agents.encryption import EncryptionAgent, histogram_vector
from app.agents.generation import GenerationOutput, generate_synthetic, workload_marginals
from app.agents.matching import MatchResult, match_agents
from app.agents.models import (
    ORCHESTRATOR_NODE,
    AgentRoster,
    AttestationReport,
    PipelineReport,
    PipelineResult,
    ProtocolConfig,
)
from app.agents.pods import Pod
from app.datamodel.models import Histogram, Marginal, Record, Schema
from app.errors import AccessDeniedError, AttestationFailedError, ConfigInvalidError, NoDataError
from app.netsim.ledger import MetricsLedger
from app.netsim.models import Frame, MsgType
from app.netsim.transport import make_transport

logger = logging.getLogger(__name__)

STREAMS = ("sharing", "selection", "attestation", "generation", "transport")
MPC_PHASES = ["aggregation", "selection"]


def stream_rng(seed: int, name: str, *index: int) -> np.random.Generator:
    """Independent generator for a named stream (and optional per-agent index)."""
    key = (STREAMS.index(name), *index)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def encode_records(records: Sequence[Record]) -> bytes:
    return json.dumps([list(r.cells) for r in records], separators=(",", ":")).encode("utf-8")


def decode_records(payload: bytes) -> list[Record]:
    return [Record(cells=tuple(cells)) for cells in json.loads(payload.decode("utf-8"))]


class Orchestrator:
    """Requests the run, verifies the enclave and receives the DP release."""

    def __init__(self, node_id: int = ORCHESTRATOR_NODE):
        self.name = "orchestrator"
        self.node_id = node_id
        self.verifier: Verifier | None = None
        self.result: bytes | None = None
        self._reports: dict[int, bytes] = {}

    def on_frame(self, frame: Frame) -> None:
        if frame.msg_type == MsgType.ATTESTATION:
            self._reports[frame.sender] = frame.payload
        elif frame.msg_type == MsgType.RESULT:
            self.result = frame.payload
        else:
            logger.warning(f"Orchestrator ignoring {MsgType(frame.msg_type).name} from {frame.sender}")

    def report_from(self, node: int) -> AttestationReport | None:
        raw = self._reports.pop(node, None)
        return None if raw is None else AttestationReport.from_bytes(raw)


def _active_roster(config: ProtocolConfig, roster: AgentRoster) -> AgentRoster:
    if len(roster.encryption) < config.n_encryption_agents:
        raise ConfigInvalidError(
            f"roster has {len(roster.encryption)} encryption agents, config needs {config.n_encryption_agents}"
        )
    if len(roster.computation) < config.n_computation_agents:
        raise ConfigInvalidError(
            f"roster has {len(roster.computation)} computation agents, config needs {config.n_computation_agents}"
        )
    return AgentRoster(
        encryption=roster.encryption[:config.n_encryption_agents],
        computation=roster.computation,
        enclave=roster.enclave,
    )


def _match(config: ProtocolConfig, pods: Sequence[Pod], roster: AgentRoster) -> MatchResult:
    owners = [pod.owner for pod in pods]
    if len(set(owners)) != len(owners):
        raise ConfigInvalidError("pod owners must be unique")
    preferences = {pod.owner: pod.preference for pod in pods}
    return match_agents(preferences, roster, config.n_computation_agents)


def split_histograms(counts: Sequence[int], marginals: Sequence[Marginal]) -> list[Histogram]:
    out, offset = [], 0
    for marginal in marginals:
        out.append(Histogram(marginal, np.asarray(counts[offset:offset + marginal.cell_count], dtype=np.int64)))
        offset += marginal.cell_count
    return out


def run_pipeline(
    config: ProtocolConfig,
    pods: Sequence[Pod],
    roster: AgentRoster,
    schema: Schema,
    marginals: Sequence[Marginal] | None = None,
    ledger: MetricsLedger | None = None,
) -> PipelineResult:
    """
    Run one decentralised generation.

    Args:
        config: Protocol parameters
        pods: Provider pods
        roster: Available agents
        schema: Attribute schema (re-binned when config.bins is set)
        marginals: Workload marginals (default from config.workload)
        ledger: Metrics ledger to fill (default: a fresh one)

    Returns:
        PipelineResult with the DP release, metrics, budget log and report
    """
    if config.bins is not None:
        schema = schema.with_bins(config.bins)
    marginals = list(marginals) if marginals is not None else workload_marginals(schema, config.workload)
    width = sum(m.cell_count for m in marginals)
    ledger = ledger or MetricsLedger()
    roster = _active_roster(config, roster)
    report = PipelineReport()

    ledger.reset("match")
    match = _match(config, pods, roster)
    report.assignments = dict(match.assignments)
    report.excluded_providers = list(match.excluded)
    report.computation_agents = list(match.computation_agents)
    if not match.assignments:
        raise NoDataError("no eligible data providers")

    by_name = {spec.name: spec for spec in roster.computation}
    comp_specs = [by_name[name] for name in match.computation_agents]
    ledger.player0 = comp_specs[0].node_id

    computation = [
        ComputationAgent(spec.name, spec.node_id, i + 1, width, config, stream_rng(config.seed, "selection", i))
        for i, spec in enumerate(comp_specs)
    ]
    encryption = [
        EncryptionAgent(spec.name, spec.node_id, config, stream_rng(config.seed, "sharing", i))
        for i, spec in enumerate(roster.encryption)
    ]
    dedicated = [
        EnclaveAgent(spec.name, spec.node_id, config, stream_rng(config.seed, "attestation", 0, i))
        for i, spec in enumerate(roster.enclave)
    ]
    orchestrator = Orchestrator()

    transport = make_transport(config.transport, ledger, stream_rng(config.seed, "transport"))
    try:
        for party in [*computation, *encryption, *dedicated, orchestrator]:
            transport.register(party.node_id, party.on_frame)

        ledger.reset("aggregation")
        pods_by_owner = {pod.owner: pod for pod in pods}
        comp_nodes = [agent.node_id for agent in computation]
        processed = 0
        for agent in encryption:
            assigned = [pods_by_owner[owner] for owner in match.tasks_for(agent.name)]
            task = agent.run_encryption_task(assigned, marginals, schema, transport, comp_nodes)
            report.access_denied.extend(task.denied)
            processed += len(task.processed)
        transport.advance_round()
        node_names = {agent.node_id: agent.name for agent in encryption}
        report.rejected_contributions = sorted({
            node_names.get(node, str(node)) for agent in computation for node in agent.rejected
        })
        if processed == 0:
            raise NoDataError("no pod could be read by its encryption agent")
        logger.info(f"Aggregation: {processed} pods shared into {width} cells per agent")

        ledger.reset("selection")
        choices = dedicated or computation
        index = joint_random_select(computation, transport, len(choices))
        if dedicated:
            enclave = dedicated[index]
        else:
            host = computation[index]
            enclave = EnclaveAgent(host.name, host.node_id, config, stream_rng(config.seed, "attestation", 0))
            host.enclave = enclave
        report.selection_index = index
        report.enclave = enclave.name

        ledger.reset("attestation")
        verifiers = [agent for agent in computation if agent.node_id != enclave.node_id] + [orchestrator]
        for k, party in enumerate(verifiers):
            party.verifier = Verifier(
                config.expected_measurement,
                stream_rng(config.seed, "attestation", 1, k),
                enforce=config.require_attestation,
            )
            transport.send(party.node_id, enclave.node_id, MsgType.ATTESTATION, party.verifier.challenge())
        transport.advance_round()
        enclave.answer_challenges(transport)
        transport.advance_round()
        for party in verifiers:
            quote = party.report_from(enclave.node_id)
            if quote is None:
                raise AttestationFailedError(f"{party.name} received no quote from {enclave.name}")
            verdict = party.verifier.verify(quote)
            report.attestation[party.name] = verdict.model_dump()
            if not verdict.allowed and config.require_attestation:
                raise AttestationFailedError(f"{party.name} rejected enclave {enclave.name}: {verdict.reason}")
        logger.info(f"Enclave {enclave.name} attested by {len(verifiers)} verifiers")

        ledger.reset("reveal")
        instruction = {"task": "generate", "generator": config.generator, "records": config.synthetic_records}
        transport.send(orchestrator.node_id, enclave.node_id, MsgType.REVEAL, json.dumps(instruction).encode("utf-8"))
        aggregate = reveal_to(enclave, computation, transport, marginals)

        ledger.reset("generation")
        output = generate_synthetic(aggregate, config, schema, stream_rng(config.seed, "generation"))

        ledger.reset("release")
        transport.send(enclave.node_id, orchestrator.node_id, MsgType.RESULT, encode_records(output.records))
        transport.advance_round()
        records = decode_records(orchestrator.result)

        ledger.close()
        metrics = ledger.snapshot()
    finally:
        transport.close()

    logger.info(
        f"Pipeline done: {len(records)} records, {metrics.total_rounds} rounds, "
        f"{metrics.global_bytes} bytes"
    )
    return PipelineResult(
        records=records,
        metrics=metrics,
        budget=output.budget,
        report=report,
        trace=output.trace,
        distribution=output.distribution,
        transcript=list(transport.transcript),
        aggregate=aggregate,
    )


def plaintext_aggregate(
    config: ProtocolConfig,
    pods: Sequence[Pod],
    roster: AgentRoster,
    schema: Schema,
    marginals: Sequence[Marginal],
) -> list[Histogram]:
    """Column sum of the histograms the pipeline would aggregate, computed in the clear."""
    match = _match(config, pods, _active_roster(config, roster))
    if not match.assignments:
        raise NoDataError("no eligible data providers")
    total = np.zeros(sum(m.cell_count for m in marginals), dtype=np.int64)
    pods_by_owner = {pod.owner: pod for pod in pods}
    for owner, agent in match.assignments.items():
        try:
            records = pods_by_owner[owner].read(agent)
        except AccessDeniedError:
            continue
        total += histogram_vector(records, marginals, schema)
    return split_histograms(total.tolist(), marginals)


def run_central_oracle(
    config: ProtocolConfig,
    pods: Sequence[Pod],
    roster: AgentRoster,
    schema: Schema,
    marginals: Sequence[Marginal] | None = None,
) -> GenerationOutput:
    """Same generator on the plaintext aggregate with the pipeline's generation stream."""
    if config.bins is not None:
        schema = schema.with_bins(config.bins)
    marginals = list(marginals) if marginals is not None else workload_marginals(schema, config.workload)
    histograms = plaintext_aggregate(config, pods, roster, schema, marginals)
    return generate_synthetic(histograms, config, schema, stream_rng(config.seed, "generation"))
