import argparse
import os

from app.application.v1.score.usecase import ScoreUtterancesUseCase
from app.infrastructure.config import Config
from app.infrastructure.storage.checkpoint_repository import BinaryCheckpointRepository
from app.infrastructure.storage.score_repository import FileScoreRepository
from app.infrastructure.storage.utterance_repository import FileUtteranceRepository
from app.shared.errors import DataError
from app.shared.monitoring.metrics import cli_commands_total, count_calls, finish_run


def get_score_usecase() -> ScoreUtterancesUseCase:
    return ScoreUtterancesUseCase(
        FileUtteranceRepository(), BinaryCheckpointRepository(), FileScoreRepository()
    )


def register(subparsers) -> None:
    parser = subparsers.add_parser("score", help="score a manifest with a checkpoint")
    parser.add_argument("--ckpt", required=True, help="checkpoint file")
    parser.add_argument("--manifest", required=True, help="utterance manifest")
    parser.add_argument("--out", required=True, help="score file to write")
    parser.set_defaults(handler=run_score)


@count_calls(cli_commands_total, {"command": "score", "status": "success"})
def run_score(args: argparse.Namespace, config: Config) -> int:
    outcome = get_score_usecase().execute(args.ckpt, args.manifest, args.out)
    print(f"scores={outcome.scores}")
    print(f"scored={outcome.total - outcome.failed}")
    print(f"failed={outcome.failed}")
    finish_run(os.path.dirname(os.path.abspath(args.out)), config.enable_metrics)
    if outcome.partial:
        raise DataError(f"partial score file: {outcome.failed}/{outcome.total} failed")
    return 0
