"""
Computation agents and the enclave role.

Computation agents sum incoming share vectors without reconstructing,
jointly draw the enclave index, and hand their aggregate shares to the
elected enclave over an attested channel. Frame handlers only store what
arrives; the pipeline drives every send between barriers.
"""

import json
import logging
from typing import Sequence

import numpy as np

from app.agents.attestation import Enclave, SecureChannel, Verifier
from app.agents.models import AttestationReport, ProtocolConfig
from app.datamodel.models import Histogram, Marginal
from app.errors import (
    AttestationFailedError,
    InsufficientSharesError,
    MissingContributionError,
    PointMismatchError,
    ProtocolError,
    ShapeMismatchError,
)
from app.netsim.models import Frame, MsgType
from app.netsim.transport import Transport
from app.secretsharing import (
    FieldElement,
    Share,
    add_share_vectors,
    decode_count,
    decode_shares,
    encode_shares,
    reconstruct,
    reconstruct_vector,
    share_secret,
)

logger = logging.getLogger(__name__)


def _channel_aad(node_id: int) -> bytes:
    return node_id.to_bytes(2, "big")


class EnclaveAgent:
    """Elected party that attests, reconstructs the aggregate and runs generation."""

    def __init__(self, name: str, node_id: int, config: ProtocolConfig, rng: np.random.Generator):
        self.name = name
        self.node_id = node_id
        self.config = config
        self.enclave = Enclave(config.enclave_manifest, rng)
        self._challenges: dict[int, bytes] = {}
        self._channels: dict[int, SecureChannel] = {}
        self._sealed: dict[int, bytes] = {}
        self._local: list[Share] | None = None
        self.instruction: dict | None = None

    def on_frame(self, frame: Frame) -> None:
        if frame.msg_type == MsgType.ATTESTATION:
            self._challenges[frame.sender] = frame.payload
        elif frame.msg_type == MsgType.AGGREGATE_SHARE:
            self._sealed[frame.sender] = frame.payload
        elif frame.msg_type == MsgType.REVEAL:
            self.instruction = json.loads(frame.payload.decode("utf-8"))
        else:
            logger.warning(f"Enclave {self.name} ignoring {MsgType(frame.msg_type).name} from {frame.sender}")

    def answer_challenges(self, transport: Transport) -> int:
        """Quote every pending challenge back to its sender."""
        answered = 0
        for sender in sorted(self._challenges):
            report, channel = self.enclave.respond(self._challenges[sender])
            self._channels[sender] = channel
            transport.send(self.node_id, sender, MsgType.ATTESTATION, report.to_bytes())
            answered += 1
        self._challenges.clear()
        return answered

    def accept_local(self, shares: Sequence[Share]) -> None:
        """Own aggregate share when the enclave is hosted by a computation agent."""
        self._local = list(shares)

    @property
    def holders(self) -> list[int]:
        return sorted(self._sealed)

    def reconstruct_aggregate(self, marginals: Sequence[Marginal]) -> list[Histogram]:
        """Open the sealed share vectors, reconstruct and decode per-marginal counts."""
        vectors: list[list[Share]] = [] if self._local is None else [self._local]
        for sender in sorted(self._sealed):
            channel = self._channels.get(sender)
            if channel is None:
                raise ProtocolError(f"aggregate share from {sender} arrived without an attested channel")
            plaintext = channel.open(self._sealed[sender], _channel_aad(sender))
            vectors.append(decode_shares(plaintext, self.config.t, self.config.modulus))
        if len(vectors) < self.config.t + 1:
            raise InsufficientSharesError(
                f"enclave holds {len(vectors)} aggregate shares, needs {self.config.t + 1}"
            )

        counts = [decode_count(v) for v in reconstruct_vector(vectors)]
        histograms = []
        offset = 0
        for marginal in marginals:
            cells = marginal.cell_count
            histograms.append(Histogram(marginal, np.array(counts[offset:offset + cells], dtype=np.int64)))
            offset += cells
        if offset != len(counts):
            raise ShapeMismatchError(f"aggregate has {len(counts)} cells, workload expects {offset}")
        self._sealed.clear()
        return histograms


class ComputationAgent:
    """MPC player holding point x of every sharing."""

    def __init__(
        self,
        name: str,
        node_id: int,
        x: int,
        width: int,
        config: ProtocolConfig,
        rng: np.random.Generator,
    ):
        self.name = name
        self.node_id = node_id
        self.x = x
        self.width = width
        self.config = config
        self.rng = rng
        zero = FieldElement(0, config.modulus)
        self.aggregate: list[Share] = [Share(x=x, y=zero, threshold=config.t) for _ in range(width)]
        self.contributors: list[int] = []
        self.rejected: list[int] = []
        self.verifier: Verifier | None = None
        self.enclave: EnclaveAgent | None = None
        self._reports: dict[int, bytes] = {}
        self._contributions: dict[int, Share] = {}
        self._opens: dict[int, Share] = {}

    def on_frame(self, frame: Frame) -> None:
        if frame.msg_type == MsgType.SHARE_VECTOR:
            self.aggregate_shares(frame.sender, frame.payload)
        elif frame.msg_type == MsgType.SELECTION_CONTRIBUTION:
            self._contributions[frame.sender] = decode_shares(frame.payload, self.config.t, self.config.modulus)[0]
        elif frame.msg_type == MsgType.SELECTION_OPEN:
            self._opens[frame.sender] = decode_shares(frame.payload, self.config.t, self.config.modulus)[0]
        elif self.enclave is not None and frame.msg_type in (
            MsgType.ATTESTATION, MsgType.AGGREGATE_SHARE, MsgType.REVEAL
        ):
            self.enclave.on_frame(frame)
        elif frame.msg_type == MsgType.ATTESTATION:
            self._reports[frame.sender] = frame.payload
        else:
            logger.warning(f"Agent {self.name} ignoring {MsgType(frame.msg_type).name} from {frame.sender}")

    def aggregate_shares(self, sender: int, payload: bytes) -> None:
        """Add one provider's share vector to the running aggregate; malformed vectors are rejected."""
        try:
            vector = decode_shares(payload, self.config.t, self.config.modulus)
            if len(vector) != self.width:
                raise ShapeMismatchError(f"expected {self.width} cells, got {len(vector)}")
            if any(share.x != self.x for share in vector):
                raise PointMismatchError(f"vector is not held at evaluation point {self.x}")
            self.aggregate = add_share_vectors(self.aggregate, vector)
        except (ShapeMismatchError, PointMismatchError, ValueError) as e:
            logger.warning(f"Agent {self.name} rejected share vector from node {sender}: {e}")
            self.rejected.append(sender)
            return
        self.contributors.append(sender)

    def report_from(self, node: int) -> AttestationReport | None:
        raw = self._reports.pop(node, None)
        return None if raw is None else AttestationReport.from_bytes(raw)

    def begin_selection(self) -> None:
        self._contributions.clear()
        self._opens.clear()

    def receive_local_contribution(self, share: Share) -> None:
        self._contributions[self.node_id] = share

    def sum_contributions(self, participants: Sequence[int]) -> Share:
        """Local share of the sum of every participant's contribution."""
        missing = [p for p in participants if p not in self._contributions]
        if missing:
            raise MissingContributionError(f"agent {self.name} has no contribution from nodes {missing}")
        shares = [self._contributions[p] for p in participants]
        total = shares[0].y
        for share in shares[1:]:
            total = total + share.y
        summed = Share(x=self.x, y=total, threshold=self.config.t)
        self._opens[self.node_id] = summed
        return summed

    def open_selection(self, participants: Sequence[int], n_choices: int) -> int:
        """Reconstruct the contribution sum from every participant's opening."""
        missing = [p for p in participants if p not in self._opens]
        if missing:
            raise MissingContributionError(f"agent {self.name} has no opening from nodes {missing}")
        total = reconstruct([self._opens[p] for p in participants])
        return total.value % n_choices


def joint_random_select(
    agents: Sequence[ComputationAgent],
    transport: Transport,
    n_choices: int,
    contributions: Sequence[int] | None = None,
) -> int:
    """
    Jointly draw an index in [0, n_choices).

    Every agent shares a contribution before anything is opened, so the sum
    mod n_choices is uniform as long as one contribution is.

    Args:
        agents: Participating computation agents, in evaluation-point order
        transport: Carrier for contribution and opening frames
        n_choices: Size of the index range
        contributions: Fixed contributions per agent (adversarial sweeps in tests)

    Returns:
        The index every agent reconstructed
    """
    if n_choices < 1:
        raise ValueError("n_choices must be at least 1")
    if contributions is not None and len(contributions) != len(agents):
        raise ValueError(f"{len(contributions)} contributions given for {len(agents)} agents")
    n = len(agents)
    nodes = [agent.node_id for agent in agents]
    for agent in agents:
        agent.begin_selection()

    for i, agent in enumerate(agents):
        r = int(contributions[i]) if contributions is not None else int(agent.rng.integers(n_choices))
        shares = share_secret(FieldElement(r, agent.config.modulus), agent.config.t, n, agent.rng)
        for j, peer in enumerate(agents):
            if j == i:
                peer.receive_local_contribution(shares[j])
            else:
                transport.send(agent.node_id, peer.node_id, MsgType.SELECTION_CONTRIBUTION, encode_shares([shares[j]]))
    transport.advance_round()

    for agent in agents:
        summed = agent.sum_contributions(nodes)
        for peer in agents:
            if peer is not agent:
                transport.send(agent.node_id, peer.node_id, MsgType.SELECTION_OPEN, encode_shares([summed]))
    transport.advance_round()

    indices = {agent.open_selection(nodes, n_choices) for agent in agents}
    if len(indices) != 1:
        raise ProtocolError(f"agents disagree on the selection: {sorted(indices)}")
    index = indices.pop()
    logger.info(f"Joint selection over {n_choices} choices picked index {index}")
    return index


def reveal_to(
    enclave: EnclaveAgent,
    agents: Sequence[ComputationAgent],
    transport: Transport,
    marginals: Sequence[Marginal],
) -> list[Histogram]:
    """
    Move every aggregate share to the attested enclave and reconstruct there.

    No share leaves an agent unless every sending agent holds an attested channel.
    """
    senders = [agent for agent in agents if agent.node_id != enclave.node_id]
    unattested = [a.name for a in senders if a.verifier is None or a.verifier.channel is None]
    if unattested:
        raise AttestationFailedError(f"no attested channel to the enclave from {unattested}")

    for agent in agents:
        if agent.node_id == enclave.node_id:
            enclave.accept_local(agent.aggregate)
            continue
        sealed = agent.verifier.channel.seal(encode_shares(agent.aggregate), _channel_aad(agent.node_id))
        transport.send(agent.node_id, enclave.node_id, MsgType.AGGREGATE_SHARE, sealed)
    transport.advance_round()
    return enclave.reconstruct_aggregate(marginals)
