import argparse

from app.application.v1.evaluate.usecase import EvaluateScoresUseCase
from app.infrastructure.config import Config, load_cost_model
from app.infrastructure.storage.score_repository import FileScoreRepository
from app.shared.monitoring.metrics import cli_commands_total, count_calls


def get_evaluate_usecase() -> EvaluateScoresUseCase:
    return EvaluateScoresUseCase(FileScoreRepository())


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="EER and min t-DCF of a score file")
    parser.add_argument("--scores", required=True, help="score file")
    parser.add_argument("--protocol", required=True, help="protocol file")
    parser.add_argument("--tdcf", default=None, help="t-DCF cost model file")
    parser.set_defaults(handler=run_eval)


@count_calls(cli_commands_total, {"command": "eval", "status": "success"})
def run_eval(args: argparse.Namespace, config: Config) -> int:
    cost_model = load_cost_model(args.tdcf) if args.tdcf else None
    report = get_evaluate_usecase().execute(args.scores, args.protocol, cost_model)
    for line in report.lines():
        print(line)
    return 0
