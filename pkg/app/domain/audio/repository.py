from abc import ABC, abstractmethod
from typing import List, Optional, Union

import torch

from app.domain.audio.entity import LabeledWaveform, ManifestEntry, Waveform


class UtteranceRepository(ABC):
    @abstractmethod
    def read_manifest(self, path: str) -> List[ManifestEntry]:
        pass

    @abstractmethod
    def load(
        self, entry: ManifestEntry, d_feat: Optional[int] = None
    ) -> Union[Waveform, torch.Tensor]:
        """A waveform, or a [T, d_feat] feature matrix"""
        pass

    @abstractmethod
    def write_dataset(
        self, out_dir: str, name: str, items: List[LabeledWaveform]
    ) -> str:
        """Write wav files plus a manifest; returns the manifest path"""
        pass
