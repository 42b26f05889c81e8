import json

import pytest

from app.agents import DEFAULT_ENCLAVE_MANIFEST
from app.cli import (
    ExperimentConfig,
    format_table,
    load_experiment_config,
    run_experiment,
    summarize,
    sweep_points,
)
from app.cli.main import EXIT_ABORT, EXIT_CONFIG, EXIT_OK, main
from app.config import project_root
from app.errors import ConfigInvalidError, ConsistencyViolationError, EmptyInputError


def write_metrics(path, rows):
    base = {"config_digest": "abc", "providers": 100, "iterations": 30, "rounds": 7,
            "global_bytes": 1000, "local_bytes_player0": 400, "mpc_rounds": 3, "mpc_global_bytes": 600}
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps({**base, **row}) + "\n")


def small_config(tmp_path, **overrides) -> ExperimentConfig:
    values = {"name": "small", "total_records": 200, "providers": "2,4", "iterations": "5",
              "seed": 3, "output_dir": str(tmp_path)}
    values.update(overrides)
    return load_experiment_config(None, values)


class TestExperimentConfig:
    def test_shipped_config(self):
        config = load_experiment_config(project_root / "configs/experiments/table2.env")
        assert config.name == "table2"
        assert config.providers == [100]
        assert config.iterations == [30]
        assert config.repetitions == 5

    def test_overrides_win(self):
        config = load_experiment_config(
            project_root / "configs/experiments/table2.env",
            {"providers": "10,100,1000", "epsilon": None, "partition": "variable_total"},
        )
        assert config.providers == [10, 100, 1000]
        assert config.epsilon == 2.0
        assert config.partition == "variable_total"

    @pytest.mark.parametrize("overrides", [
        {"epsilon": "0"},
        {"iterations": "0"},
        {"providers": "5,0"},
        {"repetitions": "0"},
        {"dataset": "csv"},
        {"lo": "5", "hi": "1"},
        {"skew": "0"},
    ])
    def test_invalid(self, overrides):
        with pytest.raises(ConfigInvalidError):
            load_experiment_config(None, overrides)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_experiment_config(tmp_path / "nope.env")

    def test_digest_ignores_output_location(self, tmp_path):
        a = small_config(tmp_path / "a")
        b = small_config(tmp_path / "b")
        assert a.digest() == b.digest()
        assert a.digest() != small_config(tmp_path, seed=4).digest()

    def test_sweep_points(self, tmp_path):
        points = sweep_points(small_config(tmp_path, providers="10,100,1000", repetitions=2))
        assert len(points) == 6
        assert len({p.seed for p in points}) == 2
        assert points[0].run_id("small") == "small-p10-T5-r0"


class TestRunExperiment:
    def test_records_and_files(self, tmp_path):
        config = small_config(tmp_path)
        outcome = run_experiment(config, frozen_clock=True)
        assert outcome.ok
        out = tmp_path / "small"
        lines = (out / "metrics.jsonl").read_text().splitlines()
        assert [json.loads(line)["providers"] for line in lines] == [2, 4]
        record = json.loads(lines[0])
        assert record["config_digest"] == config.digest()
        assert record["time_ms"] == 0.0
        assert record["records"] == 200
        assert record["global_bytes"] == sum(p["global_bytes"] for p in record["phases"])
        assert (out / "traces" / "small-p2-T5-r0.jsonl").exists()
        assert (out / "synthetic" / "small-p4-T5-r0.csv").exists()
        assert (out / "audit" / "small-p2-T5-r0.jsonl").exists()

    def test_variable_total(self, tmp_path):
        config = small_config(tmp_path, partition="variable_total", per_provider=30, providers="3")
        (record,) = run_experiment(config, frozen_clock=True).records
        assert record["records"] == 90

    def test_repetitions_share_data_and_mpc_cost(self, tmp_path):
        config = small_config(tmp_path, providers="3", repetitions=3)
        records = run_experiment(config, frozen_clock=True).records
        assert len({r["seed"] for r in records}) == 3
        assert len({r["mpc_global_bytes"] for r in records}) == 1
        summarize([tmp_path / "small" / "metrics.jsonl"])

    def test_frozen_clock_files_are_identical(self, tmp_path):
        for sub in ("one", "two"):
            run_experiment(small_config(tmp_path / sub), frozen_clock=True)
        for name in ("metrics.jsonl", "synthetic/small-p4-T5-r0.csv", "traces/small-p2-T5-r0.jsonl"):
            assert (tmp_path / "one/small" / name).read_bytes() == (tmp_path / "two/small" / name).read_bytes()

    def test_missing_input(self, tmp_path):
        config = small_config(tmp_path, dataset="csv", csv_path=str(tmp_path / "none.csv"),
                              schema_path=str(project_root / "configs/schemas/titanic.json"))
        with pytest.raises(FileNotFoundError):
            run_experiment(config)

    def test_invalid_protocol(self, tmp_path):
        with pytest.raises(ConfigInvalidError):
            run_experiment(small_config(tmp_path, threshold=2))

    def test_aborted_runs_are_reported(self, tmp_path):
        manifest = tmp_path / "manifest.txt"
        manifest.write_bytes(DEFAULT_ENCLAVE_MANIFEST + b"debug=1\n")
        outcome = run_experiment(small_config(tmp_path, enclave_manifest_path=str(manifest)))
        assert not outcome.ok
        assert {f["code"] for f in outcome.failures} == {"attestation-failed"}

    @pytest.mark.slow
    def test_parallel_matches_sequential(self, tmp_path):
        seq = run_experiment(small_config(tmp_path / "seq"), frozen_clock=True).records
        par = run_experiment(small_config(tmp_path / "par"), frozen_clock=True, parallel=True, workers=2).records
        assert seq == par


class TestSummarize:
    def test_mean_and_sample_std(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_metrics(path, [{"time_s": t} for t in (70, 72, 74, 76, 78)])
        (row,) = summarize([path])
        assert row.runs == 5
        assert row.time_label() == "74.00 ± 3.16"
        assert "74.00 ± 3.16" in format_table([row])

    def test_single_run(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_metrics(path, [{"time_s": 12.0}])
        assert summarize([path])[0].time_label() == "12.00 ± 0.00"

    def test_points_are_grouped(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_metrics(path, [{"time_s": 1.0, "providers": 10}, {"time_s": 2.0, "providers": 100}])
        assert [r.providers for r in summarize([path])] == [10, 100]

    def test_consistency_violation(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_metrics(path, [{"time_s": 1.0}, {"time_s": 1.0, "mpc_global_bytes": 601}])
        with pytest.raises(ConsistencyViolationError):
            summarize([path])
        assert summarize([path], check_consistency=False)[0].runs == 2

    def test_empty_input(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("")
        with pytest.raises(EmptyInputError):
            summarize([path])


class TestMain:
    def test_run_and_summarize(self, tmp_path, capsys):
        args = ["run", "--name", "cli", "--total-records", "100", "--providers", "2", "--iterations", "3",
                "--repetitions", "2", "--output-dir", str(tmp_path), "--frozen-clock"]
        assert main(args) == EXIT_OK
        assert main(["summarize", str(tmp_path / "cli" / "metrics.jsonl")]) == EXIT_OK
        assert "0.00 ± 0.00" in capsys.readouterr().out

    def test_config_error_exit(self, tmp_path):
        assert main(["run", "--epsilon", "-1", "--output-dir", str(tmp_path)]) == EXIT_CONFIG
        assert main(["run", "--config", str(tmp_path / "missing.env")]) == EXIT_CONFIG

    def test_missing_csv_exit(self, tmp_path):
        args = ["run", "--dataset", "csv", "--csv-path", str(tmp_path / "x.csv"),
                "--schema-path", str(project_root / "configs/schemas/titanic.json"), "--output-dir", str(tmp_path)]
        assert main(args) == EXIT_CONFIG

    def test_abort_exit(self, tmp_path):
        manifest = tmp_path / "m.txt"
        manifest.write_bytes(b"something else")
        args = ["run", "--total-records", "50", "--providers", "2", "--iterations", "2",
                "--enclave-manifest-path", str(manifest), "--output-dir", str(tmp_path)]
        assert main(args) == EXIT_ABORT

    def test_empty_summary_exit(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("")
        assert main(["summarize", str(path)]) == EXIT_CONFIG

    def test_gen_schema(self, tmp_path, capsys):
        csv = tmp_path / "data.csv"
        csv.write_text("Name,Age,Sex\nann,22,female\n")
        assert main(["gen-schema", str(csv)]) == EXIT_OK
        template = json.loads(capsys.readouterr().out)
        assert [a["name"] for a in template["attributes"]] == ["Name", "Age", "Sex"]
