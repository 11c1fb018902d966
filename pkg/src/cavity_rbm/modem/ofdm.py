"""Equalized OFDM reference link with a one-shot preamble channel estimate."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np

from ..channel import (ChannelRealization, CodebookSchedule, Frame, ScattererMotion,
                       channel_states, propagate_frame)
from ..perturbation import Codebook, RisPanel
from .ppm import as_bits

# received power falls 20 dB after tau * ln(100)
_DELAY_SPREAD_FACTOR = math.log(100.0)


@dataclass(frozen=True)
class OfdmConfig:
    """QPSK on every occupied bin of the frame grid; one OFDM symbol per frame."""

    n_subcarriers: int = 512
    sample_rate: float = 160e6
    bandwidth: float = 160e6
    center_frequency: float = 3.3e9
    cp_length: int | None = None
    pilot_seed: int = 7

    def template(self) -> Frame:
        return Frame(np.zeros(self.n_subcarriers, complex), self.sample_rate,
                     self.center_frequency, 0, self.bandwidth)

    @property
    def occupied(self):
        return self.template().occupied_mask()

    @property
    def bits_per_symbol(self):
        return 2 * int(self.occupied.sum())

    def cp_samples(self, tau: float) -> int:
        if self.cp_length is not None:
            return int(self.cp_length)
        return int(math.ceil(_DELAY_SPREAD_FACTOR * tau * self.sample_rate))


@dataclass(frozen=True)
class OfdmResult:
    bits_sent: int
    bit_errors: int
    errors_per_symbol: np.ndarray
    bits_per_symbol: int
    cp_samples: int

    @property
    def ber(self):
        return self.bit_errors / self.bits_sent if self.bits_sent else 0.0

    def ber_from(self, first_symbol: int) -> float:
        """BER over data symbols ``first_symbol`` onward (0-based)."""
        errs = self.errors_per_symbol[first_symbol:]
        return float(errs.sum() / (errs.size * self.bits_per_symbol)) if errs.size else 0.0


def qpsk_modulate(bits) -> np.ndarray:
    b = as_bits(bits).reshape(-1, 2).astype(float)
    return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) / np.sqrt(2)


def qpsk_demodulate(symbols) -> np.ndarray:
    s = np.asarray(symbols)
    return np.stack([s.real < 0, s.imag < 0], axis=-1).astype(np.uint8).ravel()


def pilot_symbols(cfg: OfdmConfig) -> np.ndarray:
    rng = np.random.default_rng(cfg.pilot_seed)
    return qpsk_modulate(rng.integers(0, 2, 2 * int(cfg.occupied.sum())))


def ofdm_baseline(real: ChannelRealization, schedule: CodebookSchedule, motion: ScattererMotion,
                  bits, snr_db=np.inf, *, panel: RisPanel, cfg: OfdmConfig = OfdmConfig(),
                  initial_codebook: Codebook | None = None,
                  noise_rng: np.random.Generator | None = None) -> OfdmResult:
    """Send ``bits`` as OFDM symbols, one per frame after a frame-0 preamble.

    The channel is estimated once from the preamble (least squares) and that
    estimate equalizes every later symbol, however the cavity has changed.
    """
    bits = as_bits(bits)
    per_sym = cfg.bits_per_symbol
    if bits.size == 0 or bits.size % per_sym:
        raise ValueError(f"bit count must be a positive multiple of {per_sym}")
    n_data = bits.size // per_sym
    occ = cfg.occupied
    pilots = pilot_symbols(cfg)
    data = qpsk_modulate(bits).reshape(n_data, -1)
    if noise_rng is None:
        noise_rng = copy.deepcopy(real.rng).spawn(1)[0]
    template = cfg.template()
    omega = template.absolute_omega()
    h_est = None
    errors = np.zeros(n_data, dtype=np.int64)
    response = None
    for n, state, changed in channel_states(real, schedule, motion, n_data + 1, panel=panel,
                                            initial_codebook=initial_codebook):
        if response is None or changed:
            response = state.response(omega)
        x = np.zeros(cfg.n_subcarriers, complex)
        x[occ] = pilots if n == 0 else data[n - 1]
        y = propagate_frame(state, template.with_spectrum(x, n), snr_db,
                            rng=noise_rng, response=response).spectrum[occ]
        if n == 0:
            h_est = y / pilots
            continue
        rx_bits = qpsk_demodulate(y / h_est)
        errors[n - 1] = np.count_nonzero(rx_bits != bits[(n - 1) * per_sym:n * per_sym])
    return OfdmResult(bits_sent=int(bits.size), bit_errors=int(errors.sum()),
                      errors_per_symbol=errors, bits_per_symbol=per_sym,
                      cp_samples=cfg.cp_samples(real.geom.tau))
