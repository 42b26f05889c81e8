import numpy as np
import pytest

import app.agents.pipeline as pipeline_module
from app.agents import (
    DEFAULT_ENCLAVE_MANIFEST,
    MPC_PHASES,
    AgentRoster,
    AgentSpec,
    AttestationReport,
    ComputationAgent,
    Enclave,
    EncryptionAgent,
    Pod,
    PreferenceFile,
    ProtocolConfig,
    Verifier,
    attest,
    build_pods,
    joint_random_select,
    load_pod,
    load_resources,
    manifest_digest,
    match_agents,
    plaintext_aggregate,
    run_central_oracle,
    run_pipeline,
    save_pod,
    stream_rng,
    verify_attestation,
    workload_marginals,
)
from app.datamodel import Record, full_marginal, partition_fixed_total, simulate_uniform
from app.errors import (
    AccessDeniedError,
    AttestationFailedError,
    ConfigInvalidError,
    MissingContributionError,
    NoComputationAgentsTrustedError,
    NoDataError,
    ProtocolError,
)
from app.netsim import DeterministicTransport, MetricsLedger, MsgType
from app.secretsharing import decode_count, encode_shares, reconstruct_vector, share_vector


def prefs(encryption, computation):
    return PreferenceFile(trusted_encryption_agents=set(encryption), trusted_computation_agents=set(computation))


def selection_agents(config, n=3, seed=0):
    agents = [
        ComputationAgent(f"C{i}", i, i + 1, 1, config, stream_rng(seed, "selection", i))
        for i in range(n)
    ]
    transport = DeterministicTransport(MetricsLedger(), np.random.default_rng(seed))
    for agent in agents:
        transport.register(agent.node_id, agent.on_frame)
    return agents, transport


def capture_transports(monkeypatch):
    created = []
    original = pipeline_module.make_transport

    def recording(mode, ledger, rng):
        transport = original(mode, ledger, rng)
        created.append(transport)
        return transport

    monkeypatch.setattr(pipeline_module, "make_transport", recording)
    return created


class TestProtocolConfig:
    def test_honest_majority_threshold(self):
        assert ProtocolConfig().t == 1
        assert ProtocolConfig(n_computation_agents=5).t == 2
        assert ProtocolConfig(n_computation_agents=1).t == 0

    def test_rejects_other_thresholds(self):
        with pytest.raises(ValueError):
            ProtocolConfig(n_computation_agents=3, threshold=2)

    def test_pinned_measurement(self):
        assert ProtocolConfig().expected_measurement == manifest_digest(DEFAULT_ENCLAVE_MANIFEST)

    def test_roster_ids_unique(self):
        with pytest.raises(ValueError):
            AgentRoster(encryption=[AgentSpec(name="E1", node_id=1)], computation=[AgentSpec(name="C0", node_id=1)])


class TestMatching:
    def test_intersection_with_roster(self):
        roster = AgentRoster(encryption=[AgentSpec(name="E2", node_id=1001)], computation=[AgentSpec(name="C0", node_id=0)])
        result = match_agents({"p": prefs({"E1", "E2"}, {"C0"})}, roster)
        assert result.assignments == {"p": "E2"}

    def test_untrusted_roster_excludes(self, roster):
        result = match_agents({"p": prefs({"E9"}, {"C0", "C1", "C2"}), "q": prefs({"E1"}, {"C0", "C1", "C2"})}, roster)
        assert result.excluded == ["p"]
        assert result.assignments == {"q": "E1"}

    def test_disjoint_computation_sets(self, roster):
        with pytest.raises(NoComputationAgentsTrustedError):
            match_agents({"p": prefs({"E1"}, {"C0"}), "q": prefs({"E1"}, {"C1"})}, roster)

    def test_round_robin_load(self, roster, trust_all):
        result = match_agents({f"p{i}": trust_all for i in range(100)}, roster)
        assert len(result.tasks_for("E1")) == len(result.tasks_for("E2")) == 50

    def test_least_loaded_among_trusted(self, roster):
        everyone = {"C0", "C1", "C2"}
        result = match_agents({
            "a": prefs({"E1"}, everyone),
            "b": prefs({"E1", "E2"}, everyone),
            "c": prefs({"E1", "E2"}, everyone),
        }, roster)
        assert result.assignments == {"a": "E1", "b": "E2", "c": "E1"}

    def test_computation_subset(self, roster, trust_all):
        result = match_agents({"p": trust_all}, roster, n_computation=2)
        assert result.computation_agents == ["C0", "C1"]


class TestPods:
    def test_grant_required(self, trust_all):
        pod = Pod("p", [Record(cells=(1.0,))], trust_all, grants=["E2"])
        with pytest.raises(AccessDeniedError):
            pod.read("E1")
        assert pod.read("E2") == [Record(cells=(1.0,))]
        assert pod.reads == ["E2"]

    def test_owner_view_is_read_only(self, trust_all):
        pod = Pod("p", [Record(cells=(1.0,))], trust_all, grants=["E2"])
        view = pod.records
        view.append(Record(cells=(2.0,)))
        assert pod.records == [Record(cells=(1.0,))]
        assert pod.reads == []
        with pytest.raises(AttributeError):
            pod.records = []

    def test_default_grants_follow_preference(self, trust_all):
        assert Pod("p", [], trust_all).grants == {"E1", "E2"}

    def test_build_pods_names(self, trust_all):
        pods = build_pods([[], [], []], trust_all)
        assert [p.owner for p in pods] == ["provider-000", "provider-001", "provider-002"]

    def test_disk_layout(self, tmp_path, trust_all, uniform_schema):
        pod = Pod("p", [Record(cells=(1.5,)), Record(cells=(19.0,))], trust_all, grants=["E1"])
        save_pod(pod, tmp_path / "p", uniform_schema)
        loaded = load_pod(tmp_path / "p", uniform_schema)
        assert loaded.owner == "p"
        assert loaded.grants == {"E1"}
        assert loaded.read("E1") == pod.read("E1")

    def test_resource_description(self, tmp_path, trust_all, uniform_schema):
        save_pod(Pod("a", [Record(cells=(3.0,))], trust_all), tmp_path / "a", uniform_schema)
        (tmp_path / "resources.json").write_text(
            '{"entries": [{"pod_id": "alpha", "resource": "a/records.csv", "preference": "a/preference.json"}]}'
        )
        pods = load_resources(tmp_path / "resources.json", uniform_schema)
        assert [(p.owner, len(p)) for p in pods] == [("alpha", 1)]


class TestEncryptionAndAggregation:
    def test_each_agent_gets_one_vector_per_pod(self, uniform_schema, trust_all, protocol):
        ledger = MetricsLedger()
        transport = DeterministicTransport(ledger, np.random.default_rng(0))
        marginal = full_marginal(uniform_schema)
        agents = [ComputationAgent(f"C{i}", i, i + 1, 10, protocol, np.random.default_rng(i)) for i in range(3)]
        encryptor = EncryptionAgent("E1", 1000, protocol, np.random.default_rng(9))
        for party in [*agents, encryptor]:
            transport.register(party.node_id, party.on_frame)

        pod = Pod("p", simulate_uniform(40, 0.0, 20.0, np.random.default_rng(1)), trust_all)
        blocked = Pod("q", [], trust_all, grants=["E2"])
        report = encryptor.run_encryption_task([pod, blocked], [marginal], uniform_schema, transport, [0, 1, 2])
        transport.advance_round()

        assert report.processed == ["p"] and report.denied == ["q"]
        frames = [e for e in transport.transcript if e.msg_type == MsgType.SHARE_VECTOR]
        assert sorted(e.dst for e in frames) == [0, 1, 2]
        assert all(e.nbytes == 167 for e in frames)
        total = [decode_count(v) for v in reconstruct_vector([a.aggregate for a in agents])]
        assert sum(total) == 40

    def test_sum_of_two_vectors(self, protocol, rng):
        agents = [ComputationAgent(f"C{i}", i, i + 1, 2, protocol, rng) for i in range(3)]
        for values in ([1, 0], [0, 2]):
            for agent, vector in zip(agents, share_vector(values, 1, 3, rng, protocol.modulus)):
                agent.aggregate_shares(1000, encode_shares(vector))
        assert [decode_count(v) for v in reconstruct_vector([a.aggregate for a in agents])] == [1, 2]

    def test_zero_providers_is_zero_vector(self, protocol, rng):
        agents = [ComputationAgent(f"C{i}", i, i + 1, 4, protocol, rng) for i in range(3)]
        assert [decode_count(v) for v in reconstruct_vector([a.aggregate for a in agents])] == [0] * 4

    def test_malformed_vector_rejected(self, protocol, rng):
        agent = ComputationAgent("C0", 0, 1, 2, protocol, rng)
        wrong_width = share_vector([1, 2, 3], 1, 3, rng, protocol.modulus)[0]
        wrong_point = share_vector([1, 2], 1, 3, rng, protocol.modulus)[1]
        agent.aggregate_shares(1000, encode_shares(wrong_width))
        agent.aggregate_shares(1001, encode_shares(wrong_point))
        agent.aggregate_shares(1002, b"\x00" * 5)
        assert agent.rejected == [1000, 1001, 1002]
        assert agent.contributors == []


class TestJointSelection:
    def test_fixed_contributions(self, protocol):
        agents, transport = selection_agents(protocol)
        assert joint_random_select(agents, transport, 3, contributions=[2, 1, 2]) == 2
        assert transport.ledger.snapshot().total_rounds == 2

    def test_single_choice(self, protocol):
        agents, transport = selection_agents(protocol)
        assert joint_random_select(agents, transport, 1) == 0

    def test_free_contribution_sweeps_every_index(self, protocol):
        hits = []
        for free in range(3):
            agents, transport = selection_agents(protocol, seed=free)
            hits.append(joint_random_select(agents, transport, 3, contributions=[0, 2, free]))
        assert sorted(hits) == [0, 1, 2]

    def test_missing_contribution(self, protocol):
        agents, _ = selection_agents(protocol)
        with pytest.raises(MissingContributionError):
            agents[0].sum_contributions([0, 1, 2])


class TestAttestation:
    def test_identical_manifest_accepted(self):
        verdict = verify_attestation(attest(DEFAULT_ENCLAVE_MANIFEST), manifest_digest(DEFAULT_ENCLAVE_MANIFEST))
        assert verdict.allowed and verdict.checks["measurement"]

    def test_flipped_byte_rejected(self):
        tampered = bytearray(DEFAULT_ENCLAVE_MANIFEST)
        tampered[0] ^= 0x01
        verdict = verify_attestation(attest(bytes(tampered)), manifest_digest(DEFAULT_ENCLAVE_MANIFEST))
        assert not verdict.allowed
        assert verdict.checks == {"signature": True, "measurement": False}

    def test_forged_signature_rejected(self):
        report = attest(DEFAULT_ENCLAVE_MANIFEST, platform_key=b"k" * 32)
        assert not verify_attestation(report, manifest_digest(DEFAULT_ENCLAVE_MANIFEST)).checks["signature"]

    def test_report_wire_format(self):
        report = attest(DEFAULT_ENCLAVE_MANIFEST)
        raw = report.to_bytes()
        assert len(raw) == 112
        assert AttestationReport.from_bytes(raw) == report

    def test_stale_nonce_rejected(self, rng):
        enclave = Enclave(DEFAULT_ENCLAVE_MANIFEST, rng)
        verifier = Verifier(manifest_digest(DEFAULT_ENCLAVE_MANIFEST), rng)
        old_report, _ = enclave.respond(verifier.challenge())
        assert verifier.verify(old_report).allowed

        assert not verifier.verify(old_report).allowed
        verifier.challenge()
        verdict = verifier.verify(old_report)
        assert verdict.checks["nonce_fresh"] is False

    def test_channel_round_trip_and_replay(self, rng):
        enclave = Enclave(DEFAULT_ENCLAVE_MANIFEST, rng)
        verifier = Verifier(manifest_digest(DEFAULT_ENCLAVE_MANIFEST), rng)
        report, enclave_side = enclave.respond(verifier.challenge())
        verifier.verify(report)
        first = verifier.channel.seal(b"aggregate", b"\x00\x01")
        second = verifier.channel.seal(b"more", b"\x00\x01")
        assert enclave_side.open(first, b"\x00\x01") == b"aggregate"
        assert enclave_side.open(second, b"\x00\x01") == b"more"
        with pytest.raises(ProtocolError):
            enclave_side.open(first, b"\x00\x01")

    def test_wrong_aad_fails(self, rng):
        enclave = Enclave(DEFAULT_ENCLAVE_MANIFEST, rng)
        verifier = Verifier(manifest_digest(DEFAULT_ENCLAVE_MANIFEST), rng)
        report, enclave_side = enclave.respond(verifier.challenge())
        verifier.verify(report)
        with pytest.raises(ProtocolError):
            enclave_side.open(verifier.channel.seal(b"x", b"\x00\x01"), b"\x00\x02")

    def test_rejected_quote_opens_no_channel(self, rng):
        enclave = Enclave(b"other program", rng)
        verifier = Verifier(manifest_digest(DEFAULT_ENCLAVE_MANIFEST), rng)
        report, _ = enclave.respond(verifier.challenge())
        assert not verifier.verify(report).allowed
        assert verifier.channel is None


class TestPipeline:
    def test_reference_configuration(self, make_uniform_pods, roster, uniform_schema):
        config = ProtocolConfig(epsilon=2.0, iterations=30, bins=10, seed=3)
        result = run_pipeline(config, make_uniform_pods(10_000, 100), roster, uniform_schema)
        assert len(result.records) == 10_000
        assert [h.total for h in result.aggregate] == [10_000]
        assert result.budget.epsilon_spent == pytest.approx(2.0)
        assert len(result.trace) == 30
        assert [p.phase for p in result.metrics.phases] == [
            "match", "aggregation", "selection", "attestation", "reveal", "generation", "release",
        ]
        rounds = {p.phase: p.rounds for p in result.metrics.phases}
        assert rounds == {"match": 0, "aggregation": 1, "selection": 2, "attestation": 2,
                          "reveal": 1, "generation": 0, "release": 1}
        aggregation = result.metrics.phase("aggregation")
        assert aggregation.global_bytes == 100 * 3 * 167
        assert result.report.enclave in {"C0", "C1", "C2"}
        assert all(v["allowed"] for v in result.report.attestation.values())

    def test_aggregate_matches_plaintext_sum(self, make_mixed_pods, roster, mixed_schema, protocol):
        pods = make_mixed_pods(300, 7, seed=5)
        marginals = workload_marginals(mixed_schema, "singletons") + workload_marginals(mixed_schema, "two_way")
        result = run_pipeline(protocol, pods, roster, mixed_schema, marginals=marginals)
        expected = plaintext_aggregate(protocol, pods, roster, mixed_schema, marginals)
        for got, want in zip(result.aggregate, expected):
            assert np.array_equal(got.counts, want.counts)

    @pytest.mark.parametrize("generator", ["mwem", "measure_generate"])
    def test_matches_central_oracle(self, make_mixed_pods, roster, mixed_schema, generator):
        config = ProtocolConfig(epsilon=1.0, iterations=8, fit_iterations=5, generator=generator, seed=17)
        pods = make_mixed_pods(200, 5, seed=17)
        result = run_pipeline(config, pods, roster, mixed_schema)
        oracle = run_central_oracle(config, pods, roster, mixed_schema)
        assert result.records == oracle.records
        assert np.array_equal(result.distribution.weights, oracle.distribution.weights)

    def test_tampered_manifest_sends_no_aggregate_share(self, monkeypatch, make_uniform_pods, roster, uniform_schema):
        created = capture_transports(monkeypatch)
        tampered = bytearray(DEFAULT_ENCLAVE_MANIFEST)
        tampered[-2] ^= 0xFF
        config = ProtocolConfig(enclave_manifest=bytes(tampered), iterations=5, seed=1)
        with pytest.raises(AttestationFailedError):
            run_pipeline(config, make_uniform_pods(100, 4), roster, uniform_schema)
        (transport,) = created
        assert not any(e.msg_type == MsgType.AGGREGATE_SHARE for e in transport.transcript)
        assert not any(e.msg_type == MsgType.RESULT for e in transport.transcript)

    def test_unenforced_attestation_proceeds(self, make_uniform_pods, roster, uniform_schema):
        config = ProtocolConfig(enclave_manifest=b"unpinned build", require_attestation=False, iterations=5, seed=1)
        result = run_pipeline(config, make_uniform_pods(100, 4), roster, uniform_schema)
        assert not any(v["allowed"] for v in result.report.attestation.values())
        assert len(result.records) == 100

    def test_no_eligible_providers(self, roster, uniform_schema, protocol):
        untrusting = build_pods([[Record(cells=(1.0,))]] * 3, prefs({"E9"}, {"C0", "C1", "C2"}))
        with pytest.raises(NoDataError):
            run_pipeline(protocol, untrusting, roster, uniform_schema)
        with pytest.raises(NoDataError):
            run_pipeline(protocol, [], roster, uniform_schema)

    def test_short_roster(self, make_uniform_pods, uniform_schema, protocol):
        with pytest.raises(ConfigInvalidError):
            run_pipeline(protocol, make_uniform_pods(10, 2), AgentRoster.default(n_computation=2), uniform_schema)

    def test_exclusions_and_denials_are_reported(self, roster, trust_all, uniform_schema, protocol):
        records = simulate_uniform(90, 0.0, 20.0, np.random.default_rng(2))
        parts = partition_fixed_total(records, 3)
        pods = [
            Pod("denied", parts[0], trust_all, grants=["E2"]),
            Pod("excluded", parts[1], prefs({"E9"}, {"C0", "C1", "C2"})),
            Pod("ok", parts[2], trust_all),
        ]
        result = run_pipeline(protocol, pods, roster, uniform_schema)
        assert result.report.access_denied == ["denied"]
        assert result.report.excluded_providers == ["excluded"]
        assert [h.total for h in result.aggregate] == [30]
        assert pods[1].reads == []

    def test_transcript_privacy(self, make_uniform_pods, roster, uniform_schema, protocol):
        pods = make_uniform_pods(500, 10)
        result = run_pipeline(protocol, pods, roster, uniform_schema)
        enclave_node = next(s.node_id for s in roster.computation if s.name == result.report.enclave)
        encryption_nodes = {s.node_id for s in roster.encryption}

        for spec in roster.computation:
            received = [e for e in result.transcript if e.dst == spec.node_id and e.msg_type == MsgType.SHARE_VECTOR]
            assert len(received) == len(pods)
            assert {e.src for e in received} <= encryption_nodes
        reveals = [e for e in result.transcript if e.msg_type == MsgType.AGGREGATE_SHARE]
        assert len(reveals) == 2
        assert {e.dst for e in reveals} == {enclave_node}
        assert {e.phase for e in reveals} == {"reveal"}

    def test_dedicated_enclave(self, make_uniform_pods, uniform_schema, protocol):
        roster = AgentRoster(
            encryption=[AgentSpec(name="E1", node_id=1000), AgentSpec(name="E2", node_id=1001)],
            computation=[AgentSpec(name=f"C{i}", node_id=i) for i in range(3)],
            enclave=[AgentSpec(name="TEE0", node_id=500)],
        )
        result = run_pipeline(protocol, make_uniform_pods(200, 4), roster, uniform_schema)
        assert result.report.enclave == "TEE0"
        assert len(result.report.attestation) == 4
        assert sum(e.msg_type == MsgType.AGGREGATE_SHARE for e in result.transcript) == 3

    def test_mpc_bytes_independent_of_iterations(self, make_uniform_pods, roster, uniform_schema):
        pods = make_uniform_pods(1000, 10)
        runs = [
            run_pipeline(ProtocolConfig(iterations=t, seed=8), pods, roster, uniform_schema).metrics.restricted(MPC_PHASES)
            for t in (10, 100)
        ]
        assert runs[0].global_bytes == runs[1].global_bytes
        assert runs[0].total_rounds == runs[1].total_rounds

    def test_seeded_runs_repeat(self, make_mixed_pods, roster, mixed_schema, protocol):
        first = run_pipeline(protocol, make_mixed_pods(100, 3), roster, mixed_schema)
        second = run_pipeline(protocol, make_mixed_pods(100, 3), roster, mixed_schema)
        assert first.records == second.records
        assert first.report == second.report

    @pytest.mark.slow
    def test_socket_transport_matches_deterministic(self, make_uniform_pods, roster, uniform_schema):
        pods = make_uniform_pods(300, 6)
        det = run_pipeline(ProtocolConfig(iterations=5, seed=2), pods, roster, uniform_schema)
        net = run_pipeline(ProtocolConfig(iterations=5, seed=2, transport="socket"), pods, roster, uniform_schema)
        assert net.records == det.records
        assert net.metrics.restricted(MPC_PHASES).global_bytes == det.metrics.restricted(MPC_PHASES).global_bytes
