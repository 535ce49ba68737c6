import argparse
import sys
from typing import List, Optional

import torch

from app.application.v1.bench import commands as bench_commands
from app.application.v1.evaluate import commands as evaluate_commands
from app.application.v1.score import commands as score_commands
from app.application.v1.sweep import commands as sweep_commands
from app.application.v1.synth import commands as synth_commands
from app.application.v1.train import commands as train_commands
from app.infrastructure.config import load_config
from app.shared.errors import ConfigError, DetectorError
from app.shared.monitoring.logging import get_logger, log_command, setup_logging
from app.shared.monitoring.metrics import record_error, set_app_info

logger = get_logger(__name__)


class CliParser(argparse.ArgumentParser):
    """Usage errors become ConfigError so they share the exit-code mapping"""

    def error(self, message: str) -> None:
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> CliParser:
    parser = CliParser(
        prog="duabimamba",
        description="Dual-column bidirectional Mamba spoofing detector",
    )
    subparsers = parser.add_subparsers(
        dest="command", required=True, parser_class=CliParser
    )
    for module in (
        train_commands,
        score_commands,
        evaluate_commands,
        bench_commands,
        synth_commands,
        sweep_commands,
    ):
        module.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Exit codes: 0 success, 1 usage or config, 2 data, 3 numerical failure"""
    config = load_config()
    setup_logging(config.log_level, config.log_dir)
    set_app_info(config.app_version, config.environment)
    torch.set_num_threads(config.torch_num_threads)

    try:
        args = build_parser().parse_args(argv)
        options = {k: v for k, v in vars(args).items() if k not in ("command", "handler")}
        logger.info(
            f"Starting duabimamba {args.command} v{config.app_version} ({config.environment})",
            extra=log_command(args.command, **options),
        )
        return args.handler(args, config)
    except DetectorError as e:
        record_error(type(e).__name__, "cli")
        logger.error(e.detail)
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
