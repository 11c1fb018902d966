"""Frame-indexed cavity channel with scatterer drift and codebook switches."""

from __future__ import annotations

import copy
import csv
import struct
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .eigenmode import TWO_PI, CavityGeometry, EigenmodeEnsemble, transfer_function
from .perturbation import Codebook, RisPanel, fold_into_band, perturb_ensemble


class ScheduleError(ValueError):
    pass


class SourceVarianceError(ValueError):
    """The frame source did not emit the same frame every time."""


@dataclass(frozen=True, eq=False)
class Frame:
    """Complex baseband spectrum of one frame slot, bins ordered -fs/2 .. +fs/2."""

    spectrum: np.ndarray
    sample_rate: float
    center_frequency: float
    frame_index: int = 0
    # occupied bandwidth; None means the full sample rate
    bandwidth: float | None = None

    def __post_init__(self):
        spec = np.asarray(self.spectrum, dtype=complex).reshape(-1)
        object.__setattr__(self, "spectrum", spec)

    @property
    def n_bins(self):
        return self.spectrum.size

    def baseband_frequencies(self):
        return np.fft.fftshift(np.fft.fftfreq(self.n_bins, d=1.0 / self.sample_rate))

    def absolute_omega(self):
        return TWO_PI * (self.center_frequency + self.baseband_frequencies())

    def occupied_mask(self):
        if self.bandwidth is None:
            return np.ones(self.n_bins, dtype=bool)
        return np.abs(self.baseband_frequencies()) <= self.bandwidth / 2 + 1e-9 * self.sample_rate

    def with_spectrum(self, spectrum, frame_index=None):
        return replace(self, spectrum=spectrum,
                       frame_index=self.frame_index if frame_index is None else frame_index)

    def same_signal(self, other: "Frame") -> bool:
        return (self.sample_rate == other.sample_rate
                and self.center_frequency == other.center_frequency
                and self.bandwidth == other.bandwidth
                and np.array_equal(self.spectrum, other.spectrum))


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Current state of the cavity channel.

    A realization is treated as a value: every operation returns a new one
    and never advances the generator of its input.
    """

    ensemble: EigenmodeEnsemble
    geom: CavityGeometry
    delta_t: float
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    def __post_init__(self):
        if not self.delta_t > 0:
            raise ValueError("delta_t must be positive")

    def clone(self) -> "ChannelRealization":
        return replace(self, rng=copy.deepcopy(self.rng))

    def response(self, omega):
        return transfer_function(self.ensemble, self.geom, omega)


@dataclass(frozen=True)
class ScattererMotion:
    drift_rate: float = 0.0
    phase_drift_rate: float = 0.0
    enabled: bool = True

    def __post_init__(self):
        for name in ("drift_rate", "phase_drift_rate"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative")

    @property
    def active(self):
        return self.enabled and (self.drift_rate > 0 or self.phase_drift_rate > 0)


@dataclass(frozen=True)
class CodebookSchedule:
    entries: tuple

    def __post_init__(self):
        entries = tuple((int(n), cb) for n, cb in self.entries)
        if not entries:
            raise ScheduleError("schedule needs at least one entry")
        if entries[0][0] != 0:
            raise ScheduleError("first schedule entry must be at frame 0")
        idx = [n for n, _ in entries]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ScheduleError("schedule frame indices must be strictly increasing")
        object.__setattr__(self, "entries", entries)

    @property
    def frames(self):
        return [n for n, _ in self.entries]

    @property
    def last_frame(self):
        return self.entries[-1][0]

    def switch_frames(self, initial: Codebook | None = None):
        """Frames at which the active codebook actually changes."""
        out = []
        prev = self.entries[0][1] if initial is None else initial
        for n, cb in self.entries:
            if cb != prev:
                out.append(n)
            prev = cb
        return out

    def as_dict(self):
        return dict(self.entries)

    @classmethod
    def alternating(cls, frames, cb_a: Codebook, cb_b: Codebook):
        """Frame 0 holds ``cb_a``; each listed frame toggles to the other codebook."""
        entries = [(0, cb_a)]
        cur = cb_a
        for n in sorted(frames):
            if n == 0:
                raise ScheduleError("switches must come after frame 0")
            cur = cb_b if cur is cb_a else cb_a
            entries.append((n, cur))
        return cls(tuple(entries))


def _fork(rng: np.random.Generator) -> np.random.Generator:
    """Independent copy of a generator's stream position (cheaper than deepcopy).

    The copy is only for drawing; it must not be used to spawn children.
    """
    bg = rng.bit_generator
    fork = type(bg)(0)
    fork.state = bg.state
    return np.random.Generator(fork)


def evolve_scatterer(real: ChannelRealization, motion: ScattererMotion) -> ChannelRealization:
    """One frame of continuous scatterer motion as a Gaussian random walk."""
    if not motion.active:
        return real
    rng = _fork(real.rng)
    ens = real.ensemble
    n = ens.n_m
    omega = ens.omega + rng.normal(0.0, motion.drift_rate, n) if motion.drift_rate else ens.omega
    phi = ens.phi + rng.normal(0.0, motion.phase_drift_rate, n) if motion.phase_drift_rate else ens.phi
    omega = fold_into_band(omega, ens.band_lo, ens.band_hi)
    new = EigenmodeEnsemble.from_unsorted(omega, ens.alpha, phi, ens.tau, ens.band_lo, ens.band_hi)
    return replace(real, ensemble=new, rng=rng)


def apply_codebook_switch(real: ChannelRealization, cb_prev: Codebook, cb_next: Codebook,
                          panel: RisPanel) -> ChannelRealization:
    if cb_prev.hamming(cb_next) == 0:
        return real
    rng = _fork(real.rng)
    new = perturb_ensemble(real.ensemble, cb_prev, cb_next, panel, rng)
    return replace(real, ensemble=new, rng=rng)


def noise_power_for(signal: np.ndarray, snr_db: float, mask=None) -> float:
    sig = signal if mask is None else signal[mask]
    return float(np.mean(np.abs(sig) ** 2) / 10.0 ** (snr_db / 10.0))


def complex_awgn(rng: np.random.Generator, n, power):
    return np.sqrt(power / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def propagate_frame(real: ChannelRealization, x: Frame, snr_db=np.inf, *,
                    rng: np.random.Generator | None = None, noise_power: float | None = None,
                    n_bins: int | None = None, response=None) -> Frame:
    """``Y = H X + W`` on the frame's absolute frequency grid.

    ``snr_db`` fixes the noise power relative to the mean received power over
    occupied bins; an explicit ``noise_power`` (per bin) overrides it.
    Without ``rng`` the noise is drawn from a copy of the realization's
    generator, so repeated calls give identical frames.
    """
    if n_bins is not None and x.n_bins != n_bins:
        raise ValueError(f"frame has {x.n_bins} bins, link expects {n_bins}")
    if response is None:
        response = real.response(x.absolute_omega())
    elif np.shape(response) != x.spectrum.shape:
        raise ValueError("channel response does not match the frame grid")
    y = response * x.spectrum
    if noise_power is None:
        if np.isinf(snr_db) and snr_db > 0:
            return x.with_spectrum(y)
        noise_power = noise_power_for(y, snr_db, x.occupied_mask())
    if noise_power > 0:
        gen = rng if rng is not None else _fork(real.rng)
        y = y + complex_awgn(gen, y.size, noise_power)
    return x.with_spectrum(y)


def check_source(source: Callable[[], Frame] | Frame, n_checks=2) -> Frame:
    """Return the source frame, rejecting sources whose frames differ."""
    if isinstance(source, Frame):
        return source
    first = source()
    for _ in range(n_checks - 1):
        if not first.same_signal(source()):
            raise SourceVarianceError("source frames differ; the transmitted frame must be constant")
    return first


def channel_states(real: ChannelRealization, schedule: CodebookSchedule, motion: ScattererMotion,
                   n_frames: int, *, panel: RisPanel, initial_codebook: Codebook | None = None):
    """Yield ``(n, realization, changed)`` for every frame of a schedule run.

    Per frame the scatterers drift first, then a scheduled switch applies.
    ``initial_codebook`` is the codebook the realization was drawn under and
    defaults to the first schedule entry (frame 0 is then no switch).
    """
    if schedule.last_frame >= n_frames:
        raise ScheduleError(f"schedule frame {schedule.last_frame} beyond n_frames={n_frames}")
    switches = schedule.as_dict()
    current = schedule.entries[0][1] if initial_codebook is None else initial_codebook
    for n in range(n_frames):
        before = real.ensemble
        real = evolve_scatterer(real, motion)
        if n in switches:
            real = apply_codebook_switch(real, current, switches[n], panel)
            current = switches[n]
        yield n, real, real.ensemble is not before


def run_schedule(real: ChannelRealization, schedule: CodebookSchedule, motion: ScattererMotion,
                 source, n_frames: int, snr_db=np.inf, *, panel: RisPanel,
                 initial_codebook: Codebook | None = None,
                 noise_rng: np.random.Generator | None = None,
                 return_realization=False):
    """Propagate a constant source frame through ``n_frames`` evolving channel states.

    ``source`` is a Frame or a zero-argument callable producing frames; a
    callable is re-invoked every frame and must keep returning the same frame.
    """
    frame = check_source(source)
    if noise_rng is None:
        noise_rng = copy.deepcopy(real.rng).spawn(1)[0]
    omega = frame.absolute_omega()
    response = None
    out = []
    for n, real, changed in channel_states(real, schedule, motion, n_frames, panel=panel,
                                           initial_codebook=initial_codebook):
        if not isinstance(source, Frame) and n and not frame.same_signal(source()):
            raise SourceVarianceError(f"source frame {n} differs from frame 0")
        if response is None or changed:
            response = real.response(omega)
        out.append(propagate_frame(real, replace(frame, frame_index=n), snr_db,
                                   rng=noise_rng, response=response))
    if return_realization:
        return out, real
    return out


def frames_to_csv(frames: Sequence[Frame], path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_index", "bin_index", "re", "im"])
        for fr in frames:
            for k, v in enumerate(fr.spectrum):
                w.writerow([fr.frame_index, k, repr(float(v.real)), repr(float(v.imag))])


_BIN_HEADER = "<IId"


def frames_to_bytes(frames: Sequence[Frame]) -> bytes:
    """Little-endian record: header (N, n_frames, sample_rate) then float32 re/im pairs."""
    if not frames:
        raise ValueError("no frames to serialize")
    n = frames[0].n_bins
    if any(f.n_bins != n for f in frames):
        raise ValueError("all frames must have the same bin count")
    head = struct.pack(_BIN_HEADER, n, len(frames), float(frames[0].sample_rate))
    data = np.stack([f.spectrum for f in frames])
    body = np.empty(data.shape + (2,), dtype="<f4")
    body[..., 0] = data.real
    body[..., 1] = data.imag
    return head + body.tobytes()


def frames_from_bytes(blob: bytes, center_frequency=0.0):
    size = struct.calcsize(_BIN_HEADER)
    n, n_frames, fs = struct.unpack(_BIN_HEADER, blob[:size])
    body = np.frombuffer(blob[size:], dtype="<f4")
    if body.size != n * n_frames * 2:
        raise ValueError("binary record length does not match its header")
    body = body.reshape(n_frames, n, 2)
    spectra = body[..., 0].astype(np.float64) + 1j * body[..., 1].astype(np.float64)
    return [Frame(s, fs, center_frequency, i) for i, s in enumerate(spectra)]
