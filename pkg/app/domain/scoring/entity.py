# Scoring Domain
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.domain.audio.entity import Label


class TrialScore(BaseModel):
    utt_id: str
    score: float = Field(..., description="Higher means more bonafide")
    label: Optional[Label] = None

    @field_validator("score")
    @classmethod
    def validate_score(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("score must be finite")
        return v


class TdcfCostModel(BaseModel):
    """
    Priors, costs and a fixed ASV operating point for the constrained
    tandem detection cost. Defaults follow the ASVspoof 2021 evaluation
    convention; the ASV error rates are external approximations.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    p_tar: float = Field(0.95 * 0.99, ge=0, le=1)
    p_non: float = Field(0.95 * 0.01, ge=0, le=1)
    p_spoof: float = Field(0.05, ge=0, le=1)
    c_miss: float = Field(1.0, gt=0)
    c_fa: float = Field(10.0, gt=0)
    c_fa_spoof: float = Field(10.0, gt=0)
    asv_p_miss: float = Field(0.025, ge=0, le=1)
    asv_p_fa: float = Field(0.025, ge=0, le=1)
    asv_p_fa_spoof: float = Field(0.35, ge=0, le=1)

    @model_validator(mode="after")
    def validate_priors(self) -> "TdcfCostModel":
        total = self.p_tar + self.p_non + self.p_spoof
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"priors must sum to 1, got {total}")
        return self


@dataclass(frozen=True)
class DetCurve:
    """Staircase DET points along increasing threshold; the last threshold is +inf"""

    thresholds: np.ndarray
    p_miss: np.ndarray
    p_fa: np.ndarray

    def __len__(self) -> int:
        return int(self.thresholds.shape[0])


@dataclass(frozen=True)
class EerResult:
    eer: float
    threshold: float
    det: DetCurve


@dataclass(frozen=True)
class TdcfCoefficients:
    c0: float
    c1: float
    c2: float

    @property
    def default_cost(self) -> float:
        return self.c0 + min(self.c1, self.c2)


@dataclass(frozen=True)
class TdcfResult:
    min_tdcf: float
    threshold: float


@dataclass(frozen=True)
class JoinReport:
    trials: List[TrialScore]
    unmatched: List[str]


@dataclass(frozen=True)
class ScoreLine:
    """One scored utterance, or the reason it could not be scored"""

    utt_id: str
    score: Optional[float] = None
    error: Optional[str] = None
