from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Optional

import torch
from pydantic import BaseModel

from app.domain.audio.entity import FrontendConfig
from app.domain.network.entity import ModelConfig


@dataclass
class LabeledFeatures:
    """Feature matrices [T_i, d_feat] with labels (0 bonafide, 1 spoof)"""

    utt_ids: List[str]
    features: List[torch.Tensor]
    labels: torch.Tensor

    def __len__(self) -> int:
        return len(self.utt_ids)


class FeatureSource(ABC):
    """Yields the features of a split for a given epoch (augmentation may vary)"""

    @abstractmethod
    def epoch(self, epoch: int) -> LabeledFeatures:
        pass

    @property
    @abstractmethod
    def labels(self) -> torch.Tensor:
        pass


class StaticFeatureSource(FeatureSource):
    def __init__(self, data: LabeledFeatures):
        self.data = data

    def epoch(self, epoch: int) -> LabeledFeatures:
        return self.data

    @property
    def labels(self) -> torch.Tensor:
        return self.data.labels


class EpochRecord(BaseModel):
    epoch: int
    loss: float
    dev_eer: float


class KeptCheckpoint(BaseModel):
    epoch: int
    dev_eer: float


@dataclass
class RankedCheckpoint:
    epoch: int
    dev_eer: float
    state: Dict[str, torch.Tensor]


@dataclass
class TrainingResult:
    state: Dict[str, torch.Tensor]
    history: List[EpochRecord]
    kept: List[KeptCheckpoint]
    averaged_dev_eer: float
    stopped_early: bool = False
    skipped_steps: int = 0


class CheckpointHeader(BaseModel):
    """What a checkpoint needs besides its tensors to rebuild the scoring path"""

    model: ModelConfig
    crop_samples: int = 64600
    # None when the model consumes precomputed features
    frontend: Optional[FrontendConfig] = FrontendConfig()

