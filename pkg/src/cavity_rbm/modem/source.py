"""Constant broadband frame source (linear FM chirp)."""

from dataclasses import dataclass

import numpy as np

from ..channel import Frame


@dataclass(frozen=True)
class LfmConfig:
    n_samples: int = 8192
    sample_rate: float = 160e6
    bandwidth: float = 160e6
    center_frequency: float = 3.3e9

    def __post_init__(self):
        if self.n_samples <= 0:
            raise ValueError("n_samples must be positive")
        if not 0 < self.bandwidth <= self.sample_rate:
            raise ValueError("bandwidth must lie in (0, sample_rate]")

    @property
    def duration(self):
        return self.n_samples / self.sample_rate


def lfm_waveform(cfg: LfmConfig) -> np.ndarray:
    """Complex baseband chirp sweeping -B/2 -> +B/2 over the frame."""
    t = np.arange(cfg.n_samples) / cfg.sample_rate
    k = cfg.bandwidth / cfg.duration
    return np.exp(1j * np.pi * (k * t * t - cfg.bandwidth * t))


def lfm_frame(cfg: LfmConfig) -> Frame:
    spectrum = np.fft.fftshift(np.fft.fft(lfm_waveform(cfg))) / np.sqrt(cfg.n_samples)
    return Frame(spectrum, cfg.sample_rate, cfg.center_frequency, 0, cfg.bandwidth)
