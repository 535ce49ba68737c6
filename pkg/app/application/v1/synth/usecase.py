import os

from app.application.v1.synth.schemas import SynthOutcome
from app.domain.audio.repository import UtteranceRepository
from app.domain.audio.synth import SYNTH_SAMPLES, synth_dataset
from app.domain.scoring.repository import ScoreRepository
from app.shared.errors import DetectorError
from app.shared.monitoring.logging import LoggerMixin
from app.shared.monitoring.metrics import record_error, track_time, use_case_duration_seconds


class SynthesizeDatasetUseCase(LoggerMixin):
    def __init__(self, utterances: UtteranceRepository, scores: ScoreRepository):
        self.utterances = utterances
        self.scores = scores

    @track_time(use_case_duration_seconds, {"use_case": "synth"})
    def execute(
        self, seed: int, n_per_class: int, out_dir: str, n_samples: int = SYNTH_SAMPLES
    ) -> SynthOutcome:
        """
        train.lst with n_per_class utterances per class (seed) and dev.lst
        with max(n_per_class // 2, 1) per class (seed + 1), 16-bit WAV files
        under wav/, and a protocol file for each split.
        """
        try:
            os.makedirs(out_dir, exist_ok=True)
            paths = {}
            splits = {
                "train": synth_dataset(seed, n_per_class, n_samples),
                "dev": synth_dataset(seed + 1, max(n_per_class // 2, 1), n_samples),
            }
            for name, items in splits.items():
                paths[name] = self.utterances.write_dataset(out_dir, name, items)
                protocol = os.path.join(out_dir, f"{name}_protocol.txt")
                self.scores.write_protocol(
                    protocol, [(item.utt_id, item.label) for item in items]
                )
                paths[f"{name}_protocol"] = protocol
        except DetectorError as e:
            self.logger.error(f"Synthesis failed: {e.detail}")
            record_error(type(e).__name__, "synth")
            raise

        return SynthOutcome(
            out_dir=out_dir,
            train_manifest=paths["train"],
            dev_manifest=paths["dev"],
            train_protocol=paths["train_protocol"],
            dev_protocol=paths["dev_protocol"],
            utterances=sum(len(items) for items in splits.values()),
        )
