"""Frame-to-frame pulse detector on normalized magnitude spectra."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..channel import Frame
from .dtw import dtw_distance

# floor for an auto-calibrated threshold on a noise-free static channel
MIN_ETA = 1e-9
_SCALES = ("max", "rms")


@dataclass(frozen=True)
class PulseDetectorConfig:
    """``eta=None`` calibrates the threshold from the leading drift-only frames.

    ``window=None`` uses a Sakoe-Chiba half-width of ``window_fraction`` of
    the spectrum length.
    """

    eta: float | None = None
    window: int | None = None
    window_fraction: float = 0.02
    calibration_frames: int = 20
    iqr_factor: float = 6.0
    # "rms" keeps the noise floor independent of the spectrum's crest factor
    normalization: str = "rms"

    def __post_init__(self):
        if self.eta is not None and not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.window is not None and self.window < 0:
            raise ValueError("window must be non-negative")
        if self.calibration_frames < 1:
            raise ValueError("calibration_frames must be at least 1")
        if self.normalization not in _SCALES:
            raise ValueError(f"normalization must be one of {_SCALES}")

    def window_for(self, length: int) -> int:
        if self.window is not None:
            return int(self.window)
        return max(1, int(round(self.window_fraction * length)))


@dataclass(frozen=True, eq=False)
class DetectorTrace:
    """``distances[n]`` compares frame n-1 with frame n; ``distances[0]`` is 0."""

    distances: np.ndarray
    eta: float
    decisions: np.ndarray = field(init=False)
    pulse_indices: list = field(init=False)

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=float)
        object.__setattr__(self, "distances", d)
        dec = (d >= self.eta).astype(np.uint8)
        object.__setattr__(self, "decisions", dec)
        object.__setattr__(self, "pulse_indices", [int(i) for i in np.flatnonzero(dec)])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "distance", "decision"])
            for n, (d, k) in enumerate(zip(self.distances, self.decisions)):
                w.writerow([n, repr(float(d)), int(k)])


def normalize_spectrum(frame: Frame, scale: str = "max") -> np.ndarray:
    """Occupied-bin magnitude spectrum scaled to unit maximum (or unit RMS)."""
    mag = np.abs(frame.spectrum[frame.occupied_mask()])
    if scale == "max":
        ref = mag.max() if mag.size else 0.0
    elif scale == "rms":
        ref = np.sqrt(np.mean(mag * mag)) if mag.size else 0.0
    else:
        raise ValueError(f"scale must be one of {_SCALES}")
    if ref == 0:
        raise ValueError("cannot normalize an all-zero frame")
    return mag / ref


def calibrate_eta(distances, iqr_factor=6.0) -> float:
    """Robust threshold ``median + k * IQR`` of drift-only distances."""
    d = np.asarray(distances, dtype=float)
    q1, med, q3 = np.percentile(d, [25, 50, 75])
    return max(float(med + iqr_factor * (q3 - q1)), MIN_ETA)


def frame_distances(frames: Sequence[Frame], window: int | None = None,
                    window_fraction: float = 0.02, scale: str = "rms") -> np.ndarray:
    spectra = [normalize_spectrum(f, scale) for f in frames]
    if window is None:
        window = max(1, int(round(window_fraction * spectra[0].size)))
    out = np.zeros(len(spectra))
    for n in range(1, len(spectra)):
        out[n] = dtw_distance(spectra[n - 1], spectra[n], window)
    return out


def detect_pulses(frames: Sequence[Frame], cfg: PulseDetectorConfig = PulseDetectorConfig()) -> DetectorTrace:
    """Flag frame n when the DTW distance to frame n-1 reaches ``eta``."""
    if len(frames) < 2:
        raise ValueError("pulse detection needs at least two frames")
    n_occ = int(frames[0].occupied_mask().sum())
    distances = frame_distances(frames, cfg.window_for(n_occ), scale=cfg.normalization)
    return trace_from_distances(distances, cfg)


def trace_from_distances(distances, cfg: PulseDetectorConfig) -> DetectorTrace:
    distances = np.asarray(distances, dtype=float)
    eta = cfg.eta
    if eta is None:
        calib = distances[1:cfg.calibration_frames + 1]
        if calib.size == 0:
            raise ValueError("no frames available for threshold calibration")
        eta = calibrate_eta(calib, cfg.iqr_factor)
    return DetectorTrace(distances, eta)
