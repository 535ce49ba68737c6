import argparse

from app.application.v1.bench.usecase import BenchmarkUseCase
from app.infrastructure.config import Config, load_run_config
from app.infrastructure.storage.run_directory import create_run_dir, write_resolved_config
from app.shared.monitoring.metrics import cli_commands_total, count_calls, finish_run


def register(subparsers) -> None:
    parser = subparsers.add_parser("bench", help="real-time-factor sweep")
    parser.add_argument("--config", required=True, help="run config file")
    parser.add_argument("--out-dir", required=True, help="directory for rtf.csv and rtf.svg")
    parser.add_argument("--runs", type=int, default=None, help="timed runs per duration")
    parser.set_defaults(handler=run_bench)


@count_calls(cli_commands_total, {"command": "bench", "status": "success"})
def run_bench(args: argparse.Namespace, config: Config) -> int:
    overrides = [] if args.runs is None else [f"bench.runs={args.runs}"]
    run_config = load_run_config(args.config, overrides)
    out_dir = create_run_dir(config.runs_root, run_config.run.seed, args.out_dir)
    write_resolved_config(out_dir, run_config)

    outcome = BenchmarkUseCase().execute(run_config, out_dir)
    print(f"csv={outcome.csv}")
    print(f"svg={outcome.svg}")
    print(f"records={len(outcome.records)}")
    finish_run(out_dir, config.enable_metrics)
    return 0
