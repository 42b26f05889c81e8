"""
podsynth command line.

    python -m app.cli.main run --config configs/experiments/table2.env
    python -m app.cli.main summarize runs/table2/metrics.jsonl
    python -m app.cli.main gen-schema data/titanic.csv > schema.json
    python -m app.cli.main serve --port 8000

Exit codes: 0 success, 1 configuration or input error, 2 pipeline abort.
"""

import argparse
import json
import logging
import sys
from typing import Sequence

from app.cli.experiment import run_experiment
from app.cli.models import load_experiment_config
from app.cli.summary import format_table, summarize
from app.config import configure_logging
from app.datamodel import template_schema
from app.errors import ConfigInvalidError, EmptyInputError, PodSynthError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ABORT = 2


def _bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {value!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="podsynth", description="Decentralised DP synthetic data experiments")
    parser.add_argument("--log-level", default=None, help="Overrides PODSYNTH_LOG_LEVEL")
    verbs = parser.add_subparsers(dest="verb", required=True)

    run = verbs.add_parser("run", help="Run an experiment sweep")
    run.add_argument("--config", help="key=value experiment file")
    run.add_argument("--name")
    run.add_argument("--dataset", choices=["uniform", "skewed", "schema", "csv"])
    run.add_argument("--csv-path")
    run.add_argument("--schema-path")
    run.add_argument("--resources-path")
    run.add_argument("--roster-path")
    run.add_argument("--lo", type=float)
    run.add_argument("--hi", type=float)
    run.add_argument("--skew", type=float)
    run.add_argument("--partition", choices=["fixed_total", "variable_total"])
    run.add_argument("--total-records", type=int)
    run.add_argument("--per-provider", type=int)
    run.add_argument("--providers", help="Comma-separated provider counts")
    run.add_argument("--bins", type=int)
    run.add_argument("--epsilon", type=float)
    run.add_argument("--iterations", help="Comma-separated iteration counts T")
    run.add_argument("--generator", choices=["mwem", "measure_generate"])
    run.add_argument("--workload", choices=["two_way", "singletons", "full"])
    run.add_argument("--fit-iterations", type=int)
    run.add_argument("--synthetic-records", type=int)
    run.add_argument("--n-computation-agents", type=int)
    run.add_argument("--n-encryption-agents", type=int)
    run.add_argument("--threshold", type=int)
    run.add_argument("--transport", choices=["deterministic", "socket"])
    run.add_argument("--require-attestation", type=_bool)
    run.add_argument("--enclave-manifest-path")
    run.add_argument("--expected-measurement", help="Pinned hex digest of the enclave manifest")
    run.add_argument("--seed", type=int)
    run.add_argument("--repetitions", type=int)
    run.add_argument("--output-dir")
    run.add_argument("--parallel", action="store_true", help="Run sweep points in worker processes")
    run.add_argument("--workers", type=int)
    run.add_argument("--frozen-clock", action="store_true", help="Report zero wall time for reproducible files")

    summary = verbs.add_parser("summarize", help="Summarise metrics files")
    summary.add_argument("paths", nargs="+")
    summary.add_argument("--json", action="store_true", help="Emit JSON rows instead of a table")
    summary.add_argument("--no-consistency-check", action="store_true")

    schema = verbs.add_parser("gen-schema", help="Emit a template schema from a CSV header")
    schema.add_argument("csv")

    serve = verbs.add_parser("serve", help="Start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


_RUN_ONLY = {"verb", "log_level", "config", "parallel", "workers", "frozen_clock"}


def _run(args: argparse.Namespace) -> int:
    overrides = {k: v for k, v in vars(args).items() if k not in _RUN_ONLY and v is not None}
    config = load_experiment_config(args.config, overrides)
    outcome = run_experiment(config, frozen_clock=args.frozen_clock, parallel=args.parallel, workers=args.workers)
    for failure in outcome.failures:
        print(f"aborted {failure['run_id']}: {failure['code']}: {failure['error']}", file=sys.stderr)
    print(f"{len(outcome.records)} runs written to {config.output_dir}/{config.name}")
    return EXIT_OK if outcome.ok else EXIT_ABORT


def _summarize(args: argparse.Namespace) -> int:
    rows = summarize(args.paths, check_consistency=not args.no_consistency_check)
    if args.json:
        for row in rows:
            print(row.model_dump_json())
    else:
        print(format_table(rows))
    return EXIT_OK


def _serve(args: argparse.Namespace) -> int:
    import uvicorn

    from app.server import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        if args.verb == "run":
            return _run(args)
        if args.verb == "summarize":
            return _summarize(args)
        if args.verb == "gen-schema":
            print(json.dumps(template_schema(args.csv), indent=2))
            return EXIT_OK
        return _serve(args)
    except (ConfigInvalidError, EmptyInputError, FileNotFoundError) as e:
        logger.error(f"Configuration error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except PodSynthError as e:
        logger.error(f"Aborted ({e.code}): {e}", exc_info=True)
        print(f"aborted: {e.code}: {e}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
