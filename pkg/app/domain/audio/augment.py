"""
RawBoost-style waveform noise.

Every function takes an explicit ``numpy.random.Generator``; given the same
input, config and generator state the output is bit-identical.
"""

from typing import Optional, Tuple

import numpy as np
from scipy import signal

from app.domain.audio.entity import AugmentConfig, Waveform
from app.shared.errors import DataError, InvalidArgumentError
from app.shared.monitoring.logging import get_logger

logger = get_logger(__name__)

CROP_SAMPLES = 64600


def _require_samples(w: Waveform) -> np.ndarray:
    if len(w) == 0:
        raise DataError("empty waveform")
    return np.asarray(w.samples, dtype=np.float64)


def _energy(x: np.ndarray) -> float:
    return float(np.sum(x * x))


def _draw(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    # a degenerate range may be infinite, which rng.uniform rejects
    low, high = bounds
    if low == high:
        return float(low)
    return float(rng.uniform(low, high))


def multiband_filter(
    cfg: AugmentConfig, rng: np.random.Generator, sample_rate: int
) -> np.ndarray:
    """
    Cascade of ``n_bands`` random FIR band-stop filters.

    Returns the combined impulse response; with ``n_bands == 0`` this is the
    unit impulse.
    """
    nyquist = sample_rate / 2.0
    taps = np.ones(1)
    for _ in range(cfg.n_bands):
        center = rng.uniform(cfg.min_freq, cfg.max_freq)
        width = rng.uniform(cfg.min_bandwidth, cfg.max_bandwidth)
        n_coeff = int(rng.integers(cfg.min_coeff, cfg.max_coeff + 1)) | 1
        low = float(np.clip(center - width / 2.0, 1.0, nyquist - 2.0))
        high = float(np.clip(center + width / 2.0, low + 1.0, nyquist - 1.0))
        band = signal.firwin(n_coeff, [low, high], pass_zero="bandstop", fs=sample_rate)
        taps = np.convolve(taps, band)
    return taps


def _scale_to_snr(
    x: np.ndarray, noise: np.ndarray, snr_db: float
) -> Optional[np.ndarray]:
    noise_energy = _energy(noise)
    if not np.isfinite(snr_db) or noise_energy == 0.0:
        return None
    gain = np.sqrt(_energy(x) / noise_energy) * 10.0 ** (-snr_db / 20.0)
    return gain * noise


def convolutive_noise(
    w: Waveform, cfg: AugmentConfig, rng: np.random.Generator
) -> Waveform:
    """
    Linear and non-linear convolutive noise:
        y = sum_i g_i * (f_i * x^i),  i = 1..conv_orders,  g_1 = 1
    with a fresh multi-band filter f_i per order, then rescaled to the input
    peak amplitude.
    """
    x = _require_samples(w)
    y = np.zeros_like(x)
    for order in range(1, cfg.conv_orders + 1):
        taps = multiband_filter(cfg, rng, w.sample_rate)
        gain = 1.0 if order == 1 else _draw(rng, cfg.nonlinear_gain)
        y = y + gain * signal.lfilter(taps, [1.0], x**order)

    peak_in = float(np.max(np.abs(x)))
    peak_out = float(np.max(np.abs(y)))
    if peak_in > 0.0 and peak_out > 0.0:
        y = y * (peak_in / peak_out)
    return w.with_samples(y.astype(w.samples.dtype))


def impulsive_noise(
    w: Waveform, cfg: AugmentConfig, rng: np.random.Generator
) -> Waveform:
    """
    Sparse signal-dependent impulses: at random positions p,
        n[p] = impulse_scale * (2u - 1)(2v - 1) * x[p]
    rescaled so that energy(x) / energy(n) matches an SNR drawn from
    ``impulse_snr_db``.
    """
    x = _require_samples(w)
    density = _draw(rng, cfg.impulse_density)
    n_impulses = int(round(density * x.shape[0]))
    snr_db = _draw(rng, cfg.impulse_snr_db)
    if n_impulses == 0:
        return w

    positions = rng.choice(x.shape[0], size=n_impulses, replace=False)
    u = 2.0 * rng.random(n_impulses) - 1.0
    v = 2.0 * rng.random(n_impulses) - 1.0
    noise = np.zeros_like(x)
    noise[positions] = cfg.impulse_scale * u * v * x[positions]

    scaled = _scale_to_snr(x, noise, snr_db)
    if scaled is None:
        return w
    return w.with_samples((x + scaled).astype(w.samples.dtype))


def stationary_colored_noise(
    w: Waveform, cfg: AugmentConfig, rng: np.random.Generator
) -> Waveform:
    """Signal-independent white noise through a random multi-band filter, added at a drawn SNR"""
    x = _require_samples(w)
    snr_db = _draw(rng, cfg.stationary_snr_db)
    if not np.isfinite(snr_db):
        return w

    white = rng.standard_normal(x.shape[0])
    colored = signal.lfilter(multiband_filter(cfg, rng, w.sample_rate), [1.0], white)
    scaled = _scale_to_snr(x, colored, snr_db)
    if scaled is None:
        return w
    return w.with_samples((x + scaled).astype(w.samples.dtype))


def augment(w: Waveform, cfg: AugmentConfig, rng: np.random.Generator) -> Waveform:
    """la: convolutive then impulsive; df: stationary colored; none: identity"""
    if cfg.mode == "la":
        return impulsive_noise(convolutive_noise(w, cfg, rng), cfg, rng)
    if cfg.mode == "df":
        return stationary_colored_noise(w, cfg, rng)
    return w


def crop_or_concat(
    w: Waveform,
    target_len: int = CROP_SAMPLES,
    train: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Waveform:
    """
    Normalize length to exactly target_len samples.

    Short inputs are tiled until long enough; long inputs are cropped at a
    random offset when training and at the start otherwise.
    """
    if len(w) == 0:
        raise DataError("empty waveform")
    x = w.samples
    if x.shape[0] < target_len:
        repeats = -(-target_len // x.shape[0])
        x = np.tile(x, repeats)
    start = 0
    if train and x.shape[0] > target_len:
        if rng is None:
            raise InvalidArgumentError("a training crop needs a random generator")
        start = int(rng.integers(0, x.shape[0] - target_len + 1))
    return w.with_samples(x[start : start + target_len])
