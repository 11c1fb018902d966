"""Gap-coded pulse position modulation over codebook toggles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import CodebookSchedule
from ..perturbation import Codebook


class NoStartOfFrameError(ValueError):
    pass


@dataclass(frozen=True)
class PpmConfig:
    m_ary: int = 4
    min_gap: int = 2

    def __post_init__(self):
        if self.m_ary < 2 or self.m_ary & (self.m_ary - 1):
            raise ValueError("m_ary must be a power of two >= 2")
        if self.min_gap < 1:
            raise ValueError("min_gap must be at least 1")

    @property
    def max_gap(self):
        return self.min_gap + self.m_ary - 1

    @property
    def bits_per_symbol(self):
        return int(self.m_ary).bit_length() - 1


def as_bits(bits) -> np.ndarray:
    if isinstance(bits, str):
        bits = [int(c) for c in bits if not c.isspace()]
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    if np.any(arr > 1):
        raise ValueError("bits must be 0 or 1")
    return arr


def bytes_to_bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def bits_to_bytes(bits) -> bytes:
    bits = as_bits(bits)
    return np.packbits(bits[: bits.size - bits.size % 8]).tobytes()


def bits_to_symbols(bits, k: int) -> np.ndarray:
    bits = as_bits(bits)
    if bits.size % k:
        raise ValueError(f"bit count {bits.size} is not a multiple of {k}")
    weights = 1 << np.arange(k - 1, -1, -1)
    return bits.reshape(-1, k) @ weights


def symbols_to_bits(symbols, k: int) -> np.ndarray:
    symbols = np.asarray(symbols, dtype=np.int64)
    shifts = np.arange(k - 1, -1, -1)
    return ((symbols[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def pulse_frames(bits, cfg: PpmConfig) -> list:
    """Pulse positions: a start pulse at 0, then one pulse per symbol."""
    symbols = bits_to_symbols(bits, cfg.bits_per_symbol)
    gaps = cfg.min_gap + symbols
    return [0] + np.cumsum(gaps).astype(int).tolist()


def ppm_encode(bits, cfg: PpmConfig, cb_library) -> CodebookSchedule:
    """Codebook schedule whose toggles sit at the symbol-coded pulse positions.

    ``cb_library`` is the pair ``(rest, alternate)``; the channel is assumed to
    start under ``rest`` and every pulse toggles to the other codebook.
    """
    cb_rest, cb_alt = cb_library
    entries = []
    cur = cb_rest
    for n in pulse_frames(bits, cfg):
        cur = cb_alt if cur is cb_rest else cb_rest
        entries.append((n, cur))
    return CodebookSchedule(tuple(entries))


def embed_schedule(schedule: CodebookSchedule, offset: int, initial: Codebook) -> CodebookSchedule:
    """Delay a schedule by ``offset`` frames that run under ``initial``."""
    if offset < 1:
        raise ValueError("offset must be at least one frame")
    return CodebookSchedule(((0, initial),) + tuple((n + offset, cb) for n, cb in schedule.entries))


def ppm_decode(trace, cfg: PpmConfig):
    """Map gaps between detected pulses back to bits.

    ``trace`` is a DetectorTrace or a sequence of pulse indices.  Returns
    ``(bits, erasures)`` where ``erasures`` lists the symbol positions whose
    gap fell outside ``[min_gap, max_gap]`` and was clamped.
    """
    pulses = np.asarray(getattr(trace, "pulse_indices", trace), dtype=np.int64)
    if pulses.size == 0:
        raise NoStartOfFrameError("no start of frame")
    gaps = np.diff(np.sort(pulses))
    raw = gaps - cfg.min_gap
    erasures = np.flatnonzero((raw < 0) | (raw > cfg.m_ary - 1)).tolist()
    symbols = np.clip(raw, 0, cfg.m_ary - 1)
    return symbols_to_bits(symbols, cfg.bits_per_symbol), erasures


def max_distance_pair(unit_count: int, seed) -> tuple:
    """A random codebook and its complement (Hamming distance = unit count)."""
    cb = Codebook.random(unit_count, seed)
    return cb, ~cb
