import argparse

from app.application.v1.train.usecase import TrainDetectorUseCase
from app.infrastructure.config import Config, load_run_config
from app.infrastructure.storage.checkpoint_repository import BinaryCheckpointRepository
from app.infrastructure.storage.run_directory import create_run_dir
from app.infrastructure.storage.score_repository import FileScoreRepository
from app.infrastructure.storage.utterance_repository import FileUtteranceRepository
from app.shared.monitoring.logging import get_logger
from app.shared.monitoring.metrics import cli_commands_total, count_calls, finish_run

logger = get_logger(__name__)


def get_train_usecase(d_feat: int) -> TrainDetectorUseCase:
    return TrainDetectorUseCase(
        FileUtteranceRepository(d_feat=d_feat),
        BinaryCheckpointRepository(),
        FileScoreRepository(),
    )


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="train a detector")
    parser.add_argument("--config", required=True, help="run config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one config value (repeatable)",
    )
    parser.set_defaults(handler=run_train)


@count_calls(cli_commands_total, {"command": "train", "status": "success"})
def run_train(args: argparse.Namespace, config: Config) -> int:
    run_config = load_run_config(args.config, args.overrides)
    run_dir = create_run_dir(config.runs_root, run_config.run.seed, run_config.run.out_dir)
    logger.info(f"Training {run_config.model.variant.value} into {run_dir}")

    outcome = get_train_usecase(run_config.model.d_feat).execute(run_config, run_dir)

    print(f"run_dir={outcome.run_dir}")
    print(f"checkpoint={outcome.checkpoint}")
    print(f"epochs={len(outcome.history)}")
    print(f"dev_eer={outcome.averaged_dev_eer:.6f}")
    finish_run(run_dir, config.enable_metrics)
    return 0
