import math
from dataclasses import dataclass
from enum import Enum
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.shared.monitoring.logging import get_logger
from app.shared.utils.validators import ensure_finite, split_csv

logger = get_logger(__name__)

SAMPLE_RATE = 16000


class Label(str, Enum):
    BONAFIDE = "bonafide"
    SPOOF = "spoof"

    @property
    def index(self) -> int:
        return 0 if self is Label.BONAFIDE else 1


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        ensure_finite(self.samples, "waveform")
        if self.samples.size and float(np.max(np.abs(self.samples))) > 1.0:
            logger.warning("Waveform amplitude exceeds [-1, 1]")

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    def with_samples(self, samples: np.ndarray) -> "Waveform":
        return Waveform(samples=samples, sample_rate=self.sample_rate)


@dataclass(frozen=True)
class LabeledWaveform:
    utt_id: str
    waveform: Waveform
    label: Label


FloatRange = Tuple[float, float]


class AugmentConfig(BaseModel):
    """
    RawBoost-style noise settings. The defaults approximate the commonly used
    RawBoost configuration and are meant to be overridden.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: Literal["la", "df", "none"] = "none"
    seed: int = 0

    # multi-band FIR filters
    n_bands: int = Field(5, ge=0)
    min_freq: float = 20.0
    max_freq: float = 8000.0
    min_bandwidth: float = 100.0
    max_bandwidth: float = 1000.0
    min_coeff: int = Field(10, ge=1)
    max_coeff: int = Field(100, ge=1)

    # convolutive noise: orders 1..conv_orders, gains for orders >= 2
    conv_orders: int = Field(5, ge=1)
    nonlinear_gain: FloatRange = (0.01, 0.1)

    # impulsive noise
    impulse_density: FloatRange = (0.0, 0.1)
    impulse_scale: float = Field(2.0, ge=0)
    impulse_snr_db: FloatRange = (10.0, 40.0)

    # stationary colored noise
    stationary_snr_db: FloatRange = (10.0, 40.0)

    @field_validator(
        "nonlinear_gain",
        "impulse_density",
        "impulse_snr_db",
        "stationary_snr_db",
        mode="before",
    )
    @classmethod
    def split_ranges(cls, v):
        return split_csv(v)

    @model_validator(mode="after")
    def validate_ranges(self) -> "AugmentConfig":
        for name in (
            "nonlinear_gain",
            "impulse_density",
            "impulse_snr_db",
            "stationary_snr_db",
        ):
            low, high = getattr(self, name)
            if math.isnan(low) or math.isnan(high) or low > high:
                raise ValueError(f"{name}: empty range ({low}, {high})")
        if self.min_coeff > self.max_coeff:
            raise ValueError("min_coeff must not exceed max_coeff")
        if self.min_freq > self.max_freq or self.min_bandwidth > self.max_bandwidth:
            raise ValueError("filter band ranges are empty")
        if not (0.0 <= self.impulse_density[0] and self.impulse_density[1] <= 1.0):
            raise ValueError("impulse_density must lie in [0, 1]")
        return self


class FrontendConfig(BaseModel):
    """Fixed toy front-end; never trained"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    sample_rate: int = SAMPLE_RATE
    window_ms: float = 25.0
    hop_ms: float = 20.0
    n_fft: int = 512
    n_bands: int = 40
    d_feat: int = 1024
    seed: int = 20240601

    @property
    def window(self) -> int:
        return int(round(self.sample_rate * self.window_ms / 1000.0))

    @property
    def hop(self) -> int:
        return int(round(self.sample_rate * self.hop_ms / 1000.0))

    def frames_for(self, n_samples: int) -> int:
        if n_samples < self.window:
            return 0
        return (n_samples - self.window) // self.hop + 1


class ManifestEntry(BaseModel):
    """One manifest line: ``<utt_id> <relative_path> [<label>]``"""

    model_config = ConfigDict(frozen=True)

    utt_id: str
    path: str
    label: Optional[Label] = None
