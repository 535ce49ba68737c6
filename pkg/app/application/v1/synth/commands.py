import argparse

from app.application.v1.synth.usecase import SynthesizeDatasetUseCase
from app.infrastructure.config import Config
from app.infrastructure.storage.score_repository import FileScoreRepository
from app.infrastructure.storage.utterance_repository import FileUtteranceRepository
from app.shared.errors import ConfigError
from app.shared.monitoring.metrics import cli_commands_total, count_calls, finish_run


def register(subparsers) -> None:
    parser = subparsers.add_parser("synth", help="write the synthetic toy dataset")
    parser.add_argument("--seed", type=int, required=True)
    parser.add_argument("--n", type=int, required=True, help="utterances per class")
    parser.add_argument("--out-dir", required=True)
    parser.set_defaults(handler=run_synth)


@count_calls(cli_commands_total, {"command": "synth", "status": "success"})
def run_synth(args: argparse.Namespace, config: Config) -> int:
    if args.n < 1:
        raise ConfigError("--n must be at least 1")
    usecase = SynthesizeDatasetUseCase(FileUtteranceRepository(), FileScoreRepository())
    outcome = usecase.execute(args.seed, args.n, args.out_dir)
    print(f"train_manifest={outcome.train_manifest}")
    print(f"dev_manifest={outcome.dev_manifest}")
    print(f"utterances={outcome.utterances}")
    finish_run(outcome.out_dir, config.enable_metrics)
    return 0
