from abc import ABC, abstractmethod
from typing import Dict, Tuple

import torch

from app.domain.training.entity import CheckpointHeader


class CheckpointRepository(ABC):
    @abstractmethod
    def save(
        self, path: str, header: CheckpointHeader, state: Dict[str, torch.Tensor]
    ) -> None:
        pass

    @abstractmethod
    def load(self, path: str) -> Tuple[CheckpointHeader, Dict[str, torch.Tensor]]:
        pass
