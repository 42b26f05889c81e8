"""Encryption agents: read granted pods, bin, encode and secret-share histograms."""

import logging
from typing import Sequence

import numpy as np
from pydantic import BaseModel

from app.agents.models import ProtocolConfig
from app.agents.pods import Pod
from app.datamodel.binning import build_histogram
from app.datamodel.models import Marginal, Schema
from app.errors import AccessDeniedError
from app.netsim.models import MsgType
from app.netsim.transport import Transport
from app.secretsharing import encode_count, encode_shares, share_vector

logger = logging.getLogger(__name__)


class EncryptionTaskReport(BaseModel):
    """Outcome of one agent's batch of pod tasks."""
    agent: str
    processed: list[str] = []
    denied: list[str] = []
    records: int = 0


def histogram_vector(records, marginals: Sequence[Marginal], schema: Schema) -> np.ndarray:
    """All marginals' counts concatenated in workload order."""
    if not marginals:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate([build_histogram(records, m, schema).counts for m in marginals])


class EncryptionAgent:
    """A delegate trusted by providers to turn their records into shares."""

    def __init__(self, name: str, node_id: int, config: ProtocolConfig, rng: np.random.Generator):
        self.name = name
        self.node_id = node_id
        self.config = config
        self._rng = rng

    def on_frame(self, frame) -> None:
        logger.warning(f"Encryption agent {self.name} ignoring unexpected {MsgType(frame.msg_type).name} frame")

    def run_encryption_task(
        self,
        pods: Sequence[Pod],
        marginals: Sequence[Marginal],
        schema: Schema,
        transport: Transport,
        computation_nodes: Sequence[int],
    ) -> EncryptionTaskReport:
        """
        Share each pod's histograms with the computation agents.

        Args:
            pods: Pods assigned to this agent
            marginals: Workload marginals; cells are concatenated in this order
            schema: Attribute schema for binning
            transport: Where share vectors are sent
            computation_nodes: Node id of the agent holding evaluation point j+1 at index j

        Returns:
            Report of processed and access-denied pods
        """
        n = len(computation_nodes)
        report = EncryptionTaskReport(agent=self.name)
        for pod in pods:
            try:
                records = pod.read(self.name)
            except AccessDeniedError as e:
                logger.warning(f"Skipping pod: {e}")
                report.denied.append(pod.owner)
                continue

            counts = histogram_vector(records, marginals, schema)
            values = [encode_count(int(c), self.config.modulus).value for c in counts]
            vectors = share_vector(values, self.config.t, n, self._rng, self.config.modulus)
            for node, vector in zip(computation_nodes, vectors):
                transport.send(self.node_id, node, MsgType.SHARE_VECTOR, encode_shares(vector))
            report.processed.append(pod.owner)
            report.records += len(records)

        logger.info(
            f"Encryption agent {self.name}: shared {len(report.processed)} pods "
            f"({report.records} records), {len(report.denied)} denied"
        )
        return report
