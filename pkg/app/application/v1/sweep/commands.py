import argparse

from app.application.v1.evaluate.commands import get_evaluate_usecase
from app.application.v1.sweep.usecase import SweepVariantsUseCase
from app.application.v1.train.commands import get_train_usecase
from app.domain.network.entity import BiMambaVariant
from app.infrastructure.config import Config, load_cost_model, load_run_config, variant_names
from app.infrastructure.storage.run_directory import create_run_dir
from app.shared.monitoring.metrics import cli_commands_total, count_calls, finish_run


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="train and compare BiMamba variants")
    parser.add_argument("--config", required=True, help="run config file")
    parser.add_argument("--out-dir", required=True)
    parser.add_argument(
        "--variants",
        nargs="+",
        choices=[v.value for v in BiMambaVariant],
        default=None,
        help="defaults to [run] variants",
    )
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE"
    )
    parser.set_defaults(handler=run_sweep)


@count_calls(cli_commands_total, {"command": "sweep", "status": "success"})
def run_sweep(args: argparse.Namespace, config: Config) -> int:
    overrides = list(args.overrides)
    if args.variants:
        overrides.append(f"run.variants={','.join(args.variants)}")
    run_config = load_run_config(args.config, overrides)
    out_dir = create_run_dir(config.runs_root, run_config.run.seed, args.out_dir)
    variants = list(run_config.run.variants)
    print(f"variants={','.join(variant_names(run_config))}")
    cost_model = load_cost_model(run_config.run.tdcf) if run_config.run.tdcf else None

    usecase = SweepVariantsUseCase(
        get_train_usecase(run_config.model.d_feat), get_evaluate_usecase()
    )
    outcome = usecase.execute(run_config, out_dir, variants, cost_model)
    for result in outcome.results:
        print(f"variant={result.variant} params={result.params} dev_eer={result.dev_eer:.6f}")
    print(f"comparison={outcome.comparison}")
    finish_run(out_dir, config.enable_metrics)
    return 0
