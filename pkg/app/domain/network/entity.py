from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.shared.utils.validators import split_csv


class BiMambaVariant(str, Enum):
    UNIDIRECTIONAL = "unidirectional"
    INN = "inn"
    EXT = "ext"
    DUA = "dua"


class Pooling(str, Enum):
    MEAN = "mean"
    MAX = "max"
    ATTENTIVE = "attentive"


class ModelConfig(BaseModel):
    """Architecture hyperparameters; defaults are the published configuration"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    d_feat: int = Field(1024, ge=1)
    d_model: int = Field(144, ge=1)
    d_inner: int = Field(256, ge=1)
    n_state: int = Field(16, ge=1)
    n_blocks: int = Field(12, ge=1)
    variant: BiMambaVariant = BiMambaVariant.DUA
    k_conv: int = Field(3, ge=1)
    pooling: Pooling = Pooling.MEAN
    # None means inverse class frequency of the training set
    class_weights: Optional[Tuple[float, float]] = None
    column_norm: bool = False
    parallel_scan: bool = True
    seed: int = 1234

    @field_validator("class_weights", mode="before")
    @classmethod
    def split_class_weights(cls, v):
        if isinstance(v, str) and v.strip().lower() == "none":
            return None
        return split_csv(v)

    @field_validator("class_weights")
    @classmethod
    def validate_class_weights(cls, v):
        if v is not None and min(v) <= 0:
            raise ValueError("class weights must be positive")
        return v


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    lr: float = Field(1e-6, ge=0)
    weight_decay: float = Field(1e-4, ge=0)
    batch_size: int = Field(20, ge=1)
    patience: int = Field(7, ge=1)
    top_k: int = Field(5, ge=1)
    max_epochs: int = Field(100, ge=1)
    crop_samples: int = Field(64600, ge=1)
