from typing import List, Optional

import numpy as np
import torch

from app.domain.audio.augment import augment, crop_or_concat
from app.domain.audio.entity import AugmentConfig, FrontendConfig, LabeledWaveform, Waveform
from app.domain.audio.frontend import toy_frontend
from app.domain.training.entity import FeatureSource, LabeledFeatures
from app.shared.errors import EmptyInputError
from app.shared.monitoring.logging import LoggerMixin


def waveform_features(
    w: Waveform,
    crop_samples: int,
    frontend: FrontendConfig = FrontendConfig(),
    augment_cfg: Optional[AugmentConfig] = None,
    rng: Optional[np.random.Generator] = None,
) -> torch.Tensor:
    """
    Waveform -> [T, d_feat] features. Augmentation and a random crop are
    applied only when a generator is given (training); otherwise the leading
    crop_samples are used.
    """
    train = rng is not None
    if train and augment_cfg is not None:
        w = augment(w, augment_cfg, rng)
    w = crop_or_concat(w, crop_samples, train=train, rng=rng)
    return torch.from_numpy(toy_frontend(w, frontend))


class WaveformFeatureSource(FeatureSource, LoggerMixin):
    """
    Feature source over labeled waveforms.

    A training source re-draws augmentation and crops every epoch from
    ``default_rng([seed, epoch, index])``; an evaluation source computes its
    features once.
    """

    def __init__(
        self,
        items: List[LabeledWaveform],
        crop_samples: int,
        frontend: FrontendConfig = FrontendConfig(),
        augment_cfg: Optional[AugmentConfig] = None,
        train: bool = False,
        seed: int = 0,
    ):
        if not items:
            raise EmptyInputError("empty waveform set")
        self.items = items
        self.crop_samples = crop_samples
        self.frontend = frontend
        self.augment_cfg = augment_cfg
        self.train = train
        self.seed = seed
        self._labels = torch.tensor([item.label.index for item in items])
        self._cached: Optional[LabeledFeatures] = None

    @property
    def labels(self) -> torch.Tensor:
        return self._labels

    def _features(self, epoch: int) -> LabeledFeatures:
        features = []
        for index, item in enumerate(self.items):
            rng = np.random.default_rng([self.seed, epoch, index]) if self.train else None
            features.append(
                waveform_features(
                    item.waveform, self.crop_samples, self.frontend, self.augment_cfg, rng
                )
            )
        return LabeledFeatures(
            utt_ids=[item.utt_id for item in self.items],
            features=features,
            labels=self._labels,
        )

    def epoch(self, epoch: int) -> LabeledFeatures:
        if self.train:
            return self._features(epoch)
        if self._cached is None:
            self.logger.info(f"Extracting features for {len(self.items)} utterances")
            self._cached = self._features(0)
        return self._cached
