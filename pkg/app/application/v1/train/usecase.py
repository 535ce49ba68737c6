import os
from typing import List, Tuple

import torch

from app.application.v1.train.schemas import TrainOutcome
from app.domain.audio.entity import Label, LabeledWaveform
from app.domain.audio.pipeline import WaveformFeatureSource
from app.domain.audio.repository import UtteranceRepository
from app.domain.audio.synth import synth_dataset
from app.domain.network.bimamba import count_parameters
from app.domain.network.detector import build_detector, score_features
from app.domain.scoring.entity import ScoreLine
from app.domain.scoring.repository import ScoreRepository
from app.domain.training.entity import (
    CheckpointHeader,
    FeatureSource,
    LabeledFeatures,
    StaticFeatureSource,
)
from app.domain.training.repository import CheckpointRepository
from app.domain.training.trainer import train
from app.infrastructure.config import RunConfig
from app.infrastructure.storage.report_writer import TrainingLog, format_epoch_line
from app.infrastructure.storage.run_directory import write_resolved_config
from app.infrastructure.storage.utterance_repository import labeled_waveforms
from app.shared.errors import ConfigError, DataError, DetectorError
from app.shared.monitoring.logging import LoggerMixin
from app.shared.monitoring.metrics import record_error, track_time, use_case_duration_seconds

CHECKPOINT = "model.ckpt"
TRAIN_LOG = "train.log"
DEV_SCORES = "dev_scores.txt"
DEV_PROTOCOL = "dev_protocol.txt"


class TrainDetectorUseCase(LoggerMixin):
    def __init__(
        self,
        utterances: UtteranceRepository,
        checkpoints: CheckpointRepository,
        scores: ScoreRepository,
    ):
        self.utterances = utterances
        self.checkpoints = checkpoints
        self.scores = scores

    @track_time(use_case_duration_seconds, {"use_case": "train"})
    def execute(self, config: RunConfig, run_dir: str) -> TrainOutcome:
        """
        Train one detector into run_dir: resolved.cfg, train.log, model.ckpt
        (the averaged top-k state) and the dev scores of that state with
        their protocol.
        """
        try:
            resolved = write_resolved_config(run_dir, config)
            train_source, dev_source = self._sources(config)

            log_path = os.path.join(run_dir, TRAIN_LOG)
            log = TrainingLog(log_path)

            def on_epoch(record):
                log.append(record)
                self.logger.info(format_epoch_line(record))

            result = train(
                train_source, dev_source, config.model, config.train, on_epoch=on_epoch
            )

            checkpoint = os.path.join(run_dir, CHECKPOINT)
            header = CheckpointHeader(
                model=config.model,
                crop_samples=config.train.crop_samples,
                frontend=config.frontend if config.data.frontend else None,
            )
            self.checkpoints.save(checkpoint, header, result.state)

            model = build_detector(config.model)
            model.load_state_dict(result.state)
            dev_scores, dev_protocol = self._write_dev_scores(
                run_dir, model, dev_source, config.train.batch_size
            )
        except DetectorError as e:
            self.logger.error(f"Training failed: {e.detail}")
            record_error(type(e).__name__, "train")
            raise

        return TrainOutcome(
            run_dir=run_dir,
            checkpoint=checkpoint,
            log=log_path,
            resolved_config=resolved,
            dev_scores=dev_scores,
            dev_protocol=dev_protocol,
            params=count_parameters(model),
            history=result.history,
            kept=result.kept,
            averaged_dev_eer=result.averaged_dev_eer,
            stopped_early=result.stopped_early,
        )

    def _sources(self, config: RunConfig) -> Tuple[FeatureSource, FeatureSource]:
        data = config.data
        if (data.train_manifest is None) != (data.dev_manifest is None):
            raise DataError("train_manifest and dev_manifest must be given together")

        if data.train_manifest is None:
            if not data.frontend:
                raise ConfigError("synthetic data needs the front-end enabled")
            self.logger.info(
                f"No manifests configured; synthesizing {data.synth_train_per_class} + "
                f"{data.synth_dev_per_class} utterances per class"
            )
            train_items = synth_dataset(
                data.synth_seed, data.synth_train_per_class, data.synth_samples
            )
            dev_items = synth_dataset(
                data.synth_seed + 1, data.synth_dev_per_class, data.synth_samples
            )
            return self._waveform_sources(config, train_items, dev_items)

        train_entries = self.utterances.read_manifest(data.train_manifest)
        dev_entries = self.utterances.read_manifest(data.dev_manifest)
        if not train_entries or not dev_entries:
            raise DataError("training and dev manifests must not be empty")
        if data.frontend:
            return self._waveform_sources(
                config,
                labeled_waveforms(self.utterances, train_entries),
                labeled_waveforms(self.utterances, dev_entries),
            )
        return (
            StaticFeatureSource(self._features(train_entries)),
            StaticFeatureSource(self._features(dev_entries)),
        )

    def _waveform_sources(
        self,
        config: RunConfig,
        train_items: List[LabeledWaveform],
        dev_items: List[LabeledWaveform],
    ) -> Tuple[FeatureSource, FeatureSource]:
        augment_cfg = config.augment if config.augment.mode != "none" else None
        crop = config.train.crop_samples
        return (
            WaveformFeatureSource(
                train_items,
                crop,
                config.frontend,
                augment_cfg,
                train=True,
                seed=config.augment.seed,
            ),
            WaveformFeatureSource(dev_items, crop, config.frontend),
        )

    def _features(self, entries) -> LabeledFeatures:
        features, labels = [], []
        for entry in entries:
            item = self.utterances.load(entry)
            if not isinstance(item, torch.Tensor):
                raise DataError(
                    f"{entry.utt_id}: expected features with the front-end disabled"
                )
            if entry.label is None:
                raise DataError(f"{entry.utt_id}: training data needs a label")
            features.append(item)
            labels.append(entry.label.index)
        return LabeledFeatures(
            utt_ids=[e.utt_id for e in entries],
            features=features,
            labels=torch.tensor(labels),
        )

    def _write_dev_scores(self, run_dir, model, dev_source, batch_size):
        data = dev_source.epoch(0)
        scores = score_features(model, data.features, batch_size)
        scores_path = os.path.join(run_dir, DEV_SCORES)
        self.scores.write_scores(
            scores_path,
            [ScoreLine(utt_id=u, score=float(s)) for u, s in zip(data.utt_ids, scores)],
        )
        protocol_path = os.path.join(run_dir, DEV_PROTOCOL)
        self.scores.write_protocol(
            protocol_path,
            [
                (u, Label.BONAFIDE if label == 0 else Label.SPOOF)
                for u, label in zip(data.utt_ids, data.labels.tolist())
            ],
        )
        return scores_path, protocol_path
