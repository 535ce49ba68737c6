from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal

from app.domain.audio.entity import FrontendConfig, Waveform
from app.shared.errors import DataError

LOG_FLOOR = 1e-10


def _hz_to_mel(hz: np.ndarray) -> np.ndarray:
    return 2595.0 * np.log10(1.0 + hz / 700.0)


def _mel_to_hz(mel: np.ndarray) -> np.ndarray:
    return 700.0 * (10.0 ** (mel / 2595.0) - 1.0)


def mel_filterbank(n_bands: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular filters equally spaced on the mel scale, [n_bands, n_fft // 2 + 1]"""
    n_bins = n_fft // 2 + 1
    edges_mel = np.linspace(0.0, _hz_to_mel(np.array(sample_rate / 2.0)), n_bands + 2)
    edges = _mel_to_hz(edges_mel)
    freqs = np.linspace(0.0, sample_rate / 2.0, n_bins)

    bank = np.zeros((n_bands, n_bins))
    for band in range(n_bands):
        low, center, high = edges[band : band + 3]
        rising = (freqs - low) / max(center - low, 1e-12)
        falling = (high - freqs) / max(high - center, 1e-12)
        bank[band] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


@lru_cache(maxsize=8)
def _fixed_state(cfg: FrontendConfig):
    window = signal.get_window("hann", cfg.window, fftbins=True)
    bank = mel_filterbank(cfg.n_bands, cfg.n_fft, cfg.sample_rate)
    rng = np.random.default_rng(cfg.seed)
    projection = rng.standard_normal((cfg.n_bands, cfg.d_feat)) / np.sqrt(cfg.n_bands)
    return window, bank, projection


def toy_frontend(w: Waveform, cfg: FrontendConfig = FrontendConfig()) -> np.ndarray:
    """
    Deterministic stand-in for a frozen speech encoder.

    Frames the waveform (25 ms window, 20 ms hop), takes log mel filterbank
    energies per frame and maps them to d_feat dims through a fixed seeded
    random projection.

    Returns:
        float32 array [T, d_feat] with T = (len - window) // hop + 1

    Raises:
        DataError: waveform shorter than one window
    """
    if len(w) < cfg.window:
        raise DataError(
            f"waveform of {len(w)} samples is shorter than one {cfg.window}-sample frame"
        )
    window, bank, projection = _fixed_state(cfg)
    x = np.asarray(w.samples, dtype=np.float64)
    frames = sliding_window_view(x, cfg.window)[:: cfg.hop]
    spectrum = np.abs(np.fft.rfft(frames * window, n=cfg.n_fft, axis=-1)) ** 2
    energies = np.log(spectrum @ bank.T + LOG_FLOOR)
    return (energies @ projection).astype(np.float32)
