"""Transceiver for codebook-switch pulse position modulation."""

from .detector import DetectorTrace, PulseDetectorConfig, detect_pulses, normalize_spectrum
from .dtw import dtw_distance
from .ofdm import OfdmConfig, ofdm_baseline
from .ppm import PpmConfig, ppm_decode, ppm_encode
from .source import LfmConfig, lfm_frame

__all__ = [
    "DetectorTrace", "PulseDetectorConfig", "detect_pulses", "normalize_spectrum",
    "dtw_distance", "OfdmConfig", "ofdm_baseline", "PpmConfig", "ppm_decode", "ppm_encode",
    "LfmConfig", "lfm_frame",
]
