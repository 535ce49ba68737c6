from typing import List

import torch

from app.application.v1.score.schemas import ScoreOutcome
from app.domain.audio.entity import Waveform
from app.domain.audio.pipeline import waveform_features
from app.domain.audio.repository import UtteranceRepository
from app.domain.network.detector import build_detector, score_features
from app.domain.scoring.entity import ScoreLine
from app.domain.scoring.repository import ScoreRepository
from app.domain.training.entity import CheckpointHeader
from app.domain.training.repository import CheckpointRepository
from app.shared.errors import DataError, DetectorError
from app.shared.monitoring.logging import LoggerMixin
from app.shared.monitoring.metrics import (
    MetricsContext,
    record_error,
    track_time,
    use_case_duration_seconds,
)


class ScoreUtterancesUseCase(LoggerMixin):
    def __init__(
        self,
        utterances: UtteranceRepository,
        checkpoints: CheckpointRepository,
        scores: ScoreRepository,
    ):
        self.utterances = utterances
        self.checkpoints = checkpoints
        self.scores = scores

    @track_time(use_case_duration_seconds, {"use_case": "score"})
    def execute(self, checkpoint: str, manifest: str, out: str) -> ScoreOutcome:
        """
        Score every manifest utterance in manifest order. Utterances that
        cannot be loaded are written as error entries; the file is still
        complete for the rest.
        """
        try:
            header, state = self.checkpoints.load(checkpoint)
            model = build_detector(header.model)
            try:
                model.load_state_dict(state)
            except RuntimeError as e:
                raise DataError(f"checkpoint does not match its config: {e}")
            model.eval()
            entries = self.utterances.read_manifest(manifest)
        except DetectorError as e:
            self.logger.error(f"Scoring setup failed: {e.detail}")
            record_error(type(e).__name__, "score")
            raise

        lines: List[ScoreLine] = []
        for entry in entries:
            try:
                with MetricsContext("score_utterance", "scoring"):
                    item = self.utterances.load(entry, header.model.d_feat)
                    features = self._features(header, item)
                    score = float(score_features(model, [features])[0])
                lines.append(ScoreLine(utt_id=entry.utt_id, score=score))
            except DetectorError as e:
                self.logger.warning(f"Could not score {entry.utt_id}: {e.detail}")
                lines.append(ScoreLine(utt_id=entry.utt_id, error=e.detail))

        self.scores.write_scores(out, lines)
        failed = sum(1 for line in lines if line.error is not None)
        return ScoreOutcome(scores=out, total=len(lines), failed=failed)

    def _features(self, header: CheckpointHeader, item) -> torch.Tensor:
        if isinstance(item, Waveform):
            if header.frontend is None:
                raise DataError("checkpoint expects features, manifest gives audio")
            if item.sample_rate != header.frontend.sample_rate:
                raise DataError(
                    f"sample rate {item.sample_rate} Hz, model expects "
                    f"{header.frontend.sample_rate} Hz"
                )
            return waveform_features(item, header.crop_samples, header.frontend)
        if header.frontend is not None:
            raise DataError("checkpoint expects audio, manifest gives features")
        return item
