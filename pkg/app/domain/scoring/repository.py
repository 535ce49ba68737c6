from abc import ABC, abstractmethod
from typing import Dict, List, Tuple

from app.domain.audio.entity import Label
from app.domain.scoring.entity import ScoreLine


class ScoreRepository(ABC):
    @abstractmethod
    def read_scores(self, path: str) -> List[Tuple[str, float]]:
        """(utt_id, score) in file order"""
        pass

    @abstractmethod
    def read_protocol(self, path: str) -> Dict[str, Label]:
        pass

    @abstractmethod
    def write_scores(self, path: str, lines: List[ScoreLine]) -> None:
        pass

    @abstractmethod
    def write_protocol(self, path: str, labels: List[Tuple[str, Label]]) -> None:
        pass
