import os
from typing import Optional, Sequence

from app.application.v1.evaluate.usecase import EvaluateScoresUseCase
from app.application.v1.sweep.schemas import SweepOutcome, VariantResult
from app.application.v1.train.usecase import TrainDetectorUseCase
from app.domain.network.entity import BiMambaVariant
from app.domain.scoring.entity import TdcfCostModel
from app.infrastructure.config import RunConfig
from app.infrastructure.storage.report_writer import write_comparison_csv
from app.infrastructure.storage.run_directory import create_run_dir
from app.shared.monitoring.logging import LoggerMixin
from app.shared.monitoring.metrics import track_time, use_case_duration_seconds

COMPARISON_CSV = "comparison.csv"


class SweepVariantsUseCase(LoggerMixin):
    def __init__(self, trainer: TrainDetectorUseCase, evaluator: EvaluateScoresUseCase):
        self.trainer = trainer
        self.evaluator = evaluator

    @track_time(use_case_duration_seconds, {"use_case": "sweep"})
    def execute(
        self,
        config: RunConfig,
        out_dir: str,
        variants: Sequence[BiMambaVariant],
        cost_model: Optional[TdcfCostModel] = None,
    ) -> SweepOutcome:
        """
        Train and evaluate each variant on the same data, one run directory
        per variant under out_dir, and write comparison.csv.
        """
        results = []
        for variant in variants:
            variant_config = config.model_copy(
                update={"model": config.model.model_copy(update={"variant": variant})}
            )
            run_dir = create_run_dir("", config.run.seed, os.path.join(out_dir, variant.value))
            self.logger.info(f"Sweep: training {variant.value}")
            trained = self.trainer.execute(variant_config, run_dir)
            report = self.evaluator.execute(
                trained.dev_scores, trained.dev_protocol, cost_model
            )
            results.append(
                VariantResult(
                    variant=variant.value,
                    params=trained.params,
                    dev_eer=report.eer,
                    min_tdcf=report.min_tdcf,
                    run_dir=run_dir,
                )
            )

        comparison = os.path.join(out_dir, COMPARISON_CSV)
        write_comparison_csv(
            [r.model_dump(include={"variant", "params", "dev_eer", "min_tdcf"}) for r in results],
            comparison,
        )
        return SweepOutcome(comparison=comparison, results=results)
