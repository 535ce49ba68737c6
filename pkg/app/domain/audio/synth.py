from typing import List

import numpy as np

from app.domain.audio.entity import SAMPLE_RATE, Label, LabeledWaveform, Waveform
from app.shared.errors import InvalidArgumentError

TARGET_RMS = 0.1
SYNTH_SAMPLES = 32000


def _instantaneous_phase(
    rng: np.random.Generator, n_samples: int, sample_rate: int
) -> np.ndarray:
    """Fundamental phase of a voiced tone with vibrato and slow pitch jitter"""
    t = np.arange(n_samples) / sample_rate
    f0 = rng.uniform(110.0, 260.0)
    vibrato = rng.uniform(0.005, 0.02) * np.sin(
        2.0 * np.pi * rng.uniform(4.0, 7.0) * t + rng.uniform(0.0, 2.0 * np.pi)
    )
    # smoothed random walk, a few tenths of a percent
    jitter = np.cumsum(rng.standard_normal(n_samples)) / np.sqrt(n_samples) * 0.003
    freq = f0 * (1.0 + vibrato + jitter)
    return 2.0 * np.pi * np.cumsum(freq) / sample_rate


def _harmonic_tone(phase: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n_harmonics = int(rng.integers(4, 9))
    tone = np.zeros_like(phase)
    for k in range(1, n_harmonics + 1):
        tone += np.sin(k * phase + rng.uniform(0.0, 2.0 * np.pi)) / k
    return tone


def _segment_bounds(
    rng: np.random.Generator, n_samples: int, sample_rate: int
) -> List[int]:
    bounds = [0]
    while bounds[-1] < n_samples:
        bounds.append(bounds[-1] + int(rng.uniform(0.04, 0.08) * sample_rate))
    bounds[-1] = n_samples
    return bounds


def _normalize_rms(x: np.ndarray) -> np.ndarray:
    rms = float(np.sqrt(np.mean(x * x)))
    return x if rms == 0.0 else x * (TARGET_RMS / rms)


def bonafide_waveform(
    rng: np.random.Generator,
    n_samples: int = SYNTH_SAMPLES,
    sample_rate: int = SAMPLE_RATE,
) -> np.ndarray:
    phase = _instantaneous_phase(rng, n_samples, sample_rate)
    return _normalize_rms(_harmonic_tone(phase, rng))


def spoof_waveform(
    rng: np.random.Generator,
    n_samples: int = SYNTH_SAMPLES,
    sample_rate: int = SAMPLE_RATE,
) -> np.ndarray:
    """
    The same kind of tone, with a phase jump at every 40-80 ms segment
    boundary and every other segment replaced by a repeat of the one before.
    """
    phase = _instantaneous_phase(rng, n_samples, sample_rate)
    bounds = _segment_bounds(rng, n_samples, sample_rate)
    for start in bounds[1:-1]:
        phase[start:] += rng.uniform(0.5 * np.pi, 1.5 * np.pi)
    tone = _harmonic_tone(phase, rng)

    for i in range(1, len(bounds) - 1, 2):
        prev_start, start, end = bounds[i - 1], bounds[i], bounds[i + 1]
        span = min(end - start, start - prev_start)
        tone[start : start + span] = tone[prev_start : prev_start + span]
    return _normalize_rms(tone)


def synth_dataset(
    seed: int,
    n_per_class: int,
    n_samples: int = SYNTH_SAMPLES,
    sample_rate: int = SAMPLE_RATE,
) -> List[LabeledWaveform]:
    """
    Balanced synthetic set: even indices bonafide, odd indices spoof.

    Both classes are RMS-normalized to the same level so energy carries no
    label information. Utterance i draws from ``default_rng([seed, i])``.
    """
    if n_per_class < 1:
        raise InvalidArgumentError("n_per_class must be at least 1")

    items = []
    for i in range(2 * n_per_class):
        rng = np.random.default_rng([seed, i])
        label = Label.BONAFIDE if i % 2 == 0 else Label.SPOOF
        make = bonafide_waveform if label is Label.BONAFIDE else spoof_waveform
        samples = make(rng, n_samples, sample_rate).astype(np.float32)
        items.append(
            LabeledWaveform(
                utt_id=f"synth{seed}_{i:05d}",
                waveform=Waveform(samples=samples, sample_rate=sample_rate),
                label=label,
            )
        )
    return items
