from typing import Optional

from app.application.v1.evaluate.schemas import EvaluationReport
from app.domain.scoring.entity import TdcfCostModel
from app.domain.scoring.metrics import compute_eer, join_trials, min_tdcf
from app.domain.scoring.repository import ScoreRepository
from app.shared.errors import DetectorError
from app.shared.monitoring.logging import LoggerMixin
from app.shared.monitoring.metrics import record_error, track_time, use_case_duration_seconds


class EvaluateScoresUseCase(LoggerMixin):
    def __init__(self, scores: ScoreRepository):
        self.scores = scores

    @track_time(use_case_duration_seconds, {"use_case": "evaluate"})
    def execute(
        self,
        scores_path: str,
        protocol_path: str,
        cost_model: Optional[TdcfCostModel] = None,
    ) -> EvaluationReport:
        try:
            report = join_trials(
                self.scores.read_scores(scores_path),
                self.scores.read_protocol(protocol_path),
            )
            eer = compute_eer(report.trials)
            tdcf = min_tdcf(report.trials, cost_model) if cost_model is not None else None
        except DetectorError as e:
            self.logger.error(f"Evaluation failed: {e.detail}")
            record_error(type(e).__name__, "evaluate")
            raise

        self.logger.info(f"Evaluated {len(report.trials)} trials: eer={eer.eer:.6f}")
        return EvaluationReport(
            eer=eer.eer,
            threshold=eer.threshold,
            min_tdcf=tdcf.min_tdcf if tdcf else None,
            tdcf_threshold=tdcf.threshold if tdcf else None,
            trials=len(report.trials),
            unmatched=len(report.unmatched),
        )
