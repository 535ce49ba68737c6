from typing import List

from pydantic import BaseModel

from app.domain.training.entity import EpochRecord, KeptCheckpoint


class TrainOutcome(BaseModel):
    run_dir: str
    checkpoint: str
    log: str
    resolved_config: str
    dev_scores: str
    dev_protocol: str
    params: int
    history: List[EpochRecord]
    kept: List[KeptCheckpoint]
    averaged_dev_eer: float
    stopped_early: bool
