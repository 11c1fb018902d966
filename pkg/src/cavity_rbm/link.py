"""End-to-end links built from an ExperimentConfig.

``build_scenario`` turns a config and seed into a cavity realization, RIS
panel, codebook pair and source frame; ``run_ppm_link`` and
``run_ofdm_link`` push payload bits through that scenario.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (ChannelRealization, CodebookSchedule, Frame, ScattererMotion,
                      channel_states, propagate_frame)
from .config import ExperimentConfig
from .eigenmode import TWO_PI, CavityGeometry, EigenmodeEnsemble, sample_ensemble
from .modem.detector import DetectorTrace, PulseDetectorConfig, normalize_spectrum, trace_from_distances
from .modem.dtw import dtw_distance
from .modem.ofdm import OfdmConfig, OfdmResult, ofdm_baseline
from .modem.ppm import PpmConfig, as_bits, embed_schedule, max_distance_pair, ppm_decode, ppm_encode
from .modem.source import LfmConfig, lfm_frame
from .perturbation import Codebook, RisPanel, calibrate_kappa


@dataclass(frozen=True)
class BerReport:
    label: str
    bits_sent: int
    bit_errors: int
    erasures: int
    n_frames: int
    frame_period: float

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent if self.bits_sent else 0.0

    @property
    def bit_rate(self) -> float:
        """Payload bits per second of link time."""
        if self.n_frames == 0:
            return 0.0
        return self.bits_sent / (self.n_frames * self.frame_period)

    def as_row(self) -> dict:
        return {"scenario": self.label, "bits_sent": self.bits_sent, "bit_errors": self.bit_errors,
                "ber": self.ber, "erasures": self.erasures, "n_frames": self.n_frames,
                "bit_rate_bps": self.bit_rate}


def count_bit_errors(sent, received) -> int:
    """Mismatches over the common prefix plus every missing bit."""
    sent, received = as_bits(sent), as_bits(received)
    n = min(sent.size, received.size)
    return int(np.count_nonzero(sent[:n] != received[:n]) + max(0, sent.size - received.size))


def signal_band(lfm: LfmConfig, margin: float):
    """Angular band over which modes are drawn: ``margin`` x the signal bandwidth."""
    half = 0.5 * margin * lfm.bandwidth
    return TWO_PI * (lfm.center_frequency - half), TWO_PI * (lfm.center_frequency + half)


@dataclass(frozen=True, eq=False)
class Scenario:
    cfg: ExperimentConfig
    geom: CavityGeometry
    ensemble: EigenmodeEnsemble
    panel: RisPanel
    lfm: LfmConfig
    source: Frame
    codebooks: tuple
    seed_seq: np.random.SeedSequence

    def child_rng(self, key: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed_seq.entropy,
                                                            spawn_key=self.seed_seq.spawn_key + (key,)))

    def realization(self) -> ChannelRealization:
        return ChannelRealization(self.ensemble, self.geom, self.cfg.frame_period, self.child_rng(1))

    def noise_rng(self) -> np.random.Generator:
        return self.child_rng(2)

    def payload_rng(self) -> np.random.Generator:
        return self.child_rng(3)

    def motion(self, preset: str | None = None) -> ScattererMotion:
        name = preset or self.cfg.motion.preset
        drift, phase = self.cfg.motion.presets[name]
        return ScattererMotion(drift_rate=drift * self.ensemble.mean_spacing, phase_drift_rate=phase)

    def detector_config(self) -> PulseDetectorConfig:
        d = self.cfg.detector
        return PulseDetectorConfig(eta=d.eta, window=d.window, window_fraction=d.window_fraction,
                                   calibration_frames=d.calibration_frames, iqr_factor=d.iqr_factor,
                                   normalization=d.normalization)

    def ppm_config(self) -> PpmConfig:
        return PpmConfig(m_ary=self.cfg.ppm.m_ary, min_gap=self.cfg.ppm.min_gap)

    def ofdm_config(self) -> OfdmConfig:
        return OfdmConfig(n_subcarriers=self.lfm.n_samples, sample_rate=self.lfm.sample_rate,
                          bandwidth=self.lfm.bandwidth, center_frequency=self.lfm.center_frequency)

    @property
    def lead_in(self) -> int:
        """Drift-only frames before the first pulse, enough to calibrate the threshold."""
        return self.cfg.detector.calibration_frames + 1


def build_scenario(cfg: ExperimentConfig, trial: int = 0) -> Scenario:
    """Deterministically draw every random ingredient of one trial."""
    ss = np.random.SeedSequence([cfg.seed, trial])
    lfm = LfmConfig(**vars(cfg.lfm))
    geom = CavityGeometry.from_center_frequency(cfg.cavity.volume, cfg.cavity.tau,
                                                lfm.center_frequency, cfg.cavity.a0)
    lo, hi = signal_band(lfm, cfg.cavity.band_margin)
    ens_rng, cb_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    ensemble = sample_ensemble(ens_rng, geom, lo, hi, cfg.cavity.alpha_sigma)
    p = cfg.panel
    kappa = p.kappa if p.kappa is not None else calibrate_kappa(ensemble, p.unit_count, p.kappa_spacings)
    panel = RisPanel(unit_count=p.unit_count, unit_area=p.unit_area, delta_phi=p.delta_phi,
                     wavelength=geom.wavelength, kappa=kappa)
    codebooks = max_distance_pair(p.unit_count, cb_rng)
    return Scenario(cfg, geom, ensemble, panel, lfm, lfm_frame(lfm), codebooks, ss)


def stream_frames(real: ChannelRealization, schedule: CodebookSchedule, motion: ScattererMotion,
                  source: Frame, n_frames: int, snr_db, *, panel: RisPanel,
                  initial_codebook: Codebook | None, noise_rng: np.random.Generator):
    """Generator form of ``run_schedule`` for long links."""
    omega = source.absolute_omega()
    response = None
    for n, state, changed in channel_states(real, schedule, motion, n_frames, panel=panel,
                                            initial_codebook=initial_codebook):
        if response is None or changed:
            response = state.response(omega)
        yield propagate_frame(state, source.with_spectrum(source.spectrum, n), snr_db,
                              rng=noise_rng, response=response)


def streamed_distances(frames, det: PulseDetectorConfig, keep_frames=False):
    """DTW distance between consecutive frames without holding the whole run."""
    out = [0.0]
    kept = []
    prev = None
    window = None
    for fr in frames:
        cur = normalize_spectrum(fr, det.normalization)
        if keep_frames:
            kept.append(fr)
        if prev is None:
            window = det.window_for(cur.size)
        else:
            out.append(dtw_distance(prev, cur, window))
        prev = cur
    return np.asarray(out), kept


@dataclass(frozen=True, eq=False)
class LinkResult:
    bits_sent: np.ndarray
    bits_received: np.ndarray
    erasures: list
    trace: DetectorTrace
    schedule: CodebookSchedule
    report: BerReport
    frames: list

    @property
    def pulse_frames(self):
        return self.schedule.switch_frames(self.schedule.entries[0][1])


def ppm_link_schedule(scn: Scenario, bits) -> tuple[CodebookSchedule, int]:
    """Embedded PPM schedule and total frame count for a payload."""
    rest, alt = scn.codebooks
    ppm = ppm_encode(bits, scn.ppm_config(), (rest, alt))
    schedule = embed_schedule(ppm, scn.lead_in, rest)
    # one tail frame so the last pulse is followed by a drift-only comparison
    return schedule, schedule.last_frame + 2


def run_ppm_link(scn: Scenario, bits, preset: str | None = None, snr_db: float | None = None,
                 label: str | None = None, keep_frames: bool = False) -> LinkResult:
    bits = as_bits(bits)
    snr = scn.cfg.snr_db if snr_db is None else snr_db
    schedule, n_frames = ppm_link_schedule(scn, bits)
    det = scn.detector_config()
    frames = stream_frames(scn.realization(), schedule, scn.motion(preset), scn.source, n_frames, snr,
                           panel=scn.panel, initial_codebook=scn.codebooks[0], noise_rng=scn.noise_rng())
    distances, kept = streamed_distances(frames, det, keep_frames)
    trace = trace_from_distances(distances, det)
    if trace.pulse_indices:
        rx, erasures = ppm_decode(trace, scn.ppm_config())
    else:
        rx, erasures = np.zeros(0, dtype=np.uint8), []
    report = BerReport(label or (preset or scn.cfg.motion.preset), int(bits.size),
                       count_bit_errors(bits, rx), len(erasures), n_frames, scn.cfg.frame_period)
    return LinkResult(bits, rx, erasures, trace, schedule, report, kept)


def run_ofdm_link(scn: Scenario, n_symbols: int, preset: str | None = None, snr_db: float | None = None,
                  schedule: CodebookSchedule | None = None, label="ofdm") -> tuple[BerReport, OfdmResult]:
    """Equalized OFDM through the same cavity, motion and codebook switches as the PPM link."""
    ocfg = scn.ofdm_config()
    bits = scn.payload_rng().integers(0, 2, n_symbols * ocfg.bits_per_symbol)
    n_frames = n_symbols + 1
    if schedule is None:
        schedule = CodebookSchedule(((0, scn.codebooks[0]),))
    schedule = CodebookSchedule(tuple((n, cb) for n, cb in schedule.entries if n < n_frames))
    snr = scn.cfg.snr_db if snr_db is None else snr_db
    res = ofdm_baseline(scn.realization(), schedule, scn.motion(preset), bits, snr, panel=scn.panel,
                        cfg=ocfg, initial_codebook=scn.codebooks[0], noise_rng=scn.noise_rng())
    report = BerReport(label, res.bits_sent, res.bit_errors, 0, n_frames, scn.cfg.frame_period)
    return report, res
