"""Experiment configuration: one structured file fully determines a run."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

import numpy as np
import yaml


class ConfigError(ValueError):
    pass


@dataclass
class CavityConfig:
    volume: float = 0.25
    tau: float = 5e-8
    a0: float = 1.0
    alpha_sigma: float = 1.0
    # modes are drawn over a band this much wider than the signal bandwidth
    band_margin: float = 1.25


@dataclass
class LfmSection:
    n_samples: int = 512
    sample_rate: float = 160e6
    bandwidth: float = 160e6
    center_frequency: float = 3.3e9


@dataclass
class PanelConfig:
    unit_count: int = 512
    unit_area: float = 0.01
    delta_phi: float = float(np.pi)
    # full switch jitter in mean mode spacings; ignored when kappa is set
    kappa_spacings: float = 1.0
    kappa: float | None = None


@dataclass
class DetectorSection:
    eta: float | None = None
    window: int | None = None
    window_fraction: float = 0.02
    calibration_frames: int = 20
    iqr_factor: float = 6.0
    normalization: str = "rms"


@dataclass
class PpmSection:
    m_ary: int = 4
    min_gap: int = 2


# (eigenfrequency drift in mean spacings per frame, phase drift in rad per frame)
DEFAULT_PRESETS = {
    "stationary": [0.0, 0.0],
    "walking": [0.005, 0.005],
    "running": [2.0, 0.2],
}


@dataclass
class MotionSection:
    preset: str = "walking"
    presets: dict = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_PRESETS.items()})


@dataclass
class PsdVarianceSection:
    units: list = field(default_factory=lambda: [0, 1, 2, 4, 8, 16, 32, 64, 128, 256, 512])
    n_seeds: int = 40


@dataclass
class TwoCodebooksSection:
    # a clean bench measurement; None falls back to the top-level snr_db
    snr_db: float | None = 30.0


@dataclass
class ThreeScenariosSection:
    n_frames: int = 100
    switch_period: int = 10
    drift_preset: str = "walking"
    switch_frames: list | None = None


@dataclass
class BerTableSection:
    n_bits: int = 2048
    ofdm_symbols: int = 40
    ofdm_preset: str = "walking"


@dataclass
class RoundtripSection:
    preset: str = "walking"


@dataclass
class ExperimentConfig:
    scenario: str = "default"
    seed: int = 0
    snr_db: float = 20.0
    frame_period: float = 51.2e-6
    plots: bool = True
    cavity: CavityConfig = field(default_factory=CavityConfig)
    lfm: LfmSection = field(default_factory=LfmSection)
    panel: PanelConfig = field(default_factory=PanelConfig)
    detector: DetectorSection = field(default_factory=DetectorSection)
    ppm: PpmSection = field(default_factory=PpmSection)
    motion: MotionSection = field(default_factory=MotionSection)
    psd_variance: PsdVarianceSection = field(default_factory=PsdVarianceSection)
    two_codebooks: TwoCodebooksSection = field(default_factory=TwoCodebooksSection)
    three_scenarios: ThreeScenariosSection = field(default_factory=ThreeScenariosSection)
    ber_table: BerTableSection = field(default_factory=BerTableSection)
    roundtrip: RoundtripSection = field(default_factory=RoundtripSection)

    def validate(self):
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.frame_period <= 0:
            raise ConfigError("frame_period must be positive")
        if self.lfm.bandwidth > self.lfm.sample_rate:
            raise ConfigError("lfm.bandwidth must not exceed lfm.sample_rate")
        for name in (self.motion.preset, self.three_scenarios.drift_preset,
                     self.ber_table.ofdm_preset, self.roundtrip.preset):
            if name not in self.motion.presets:
                raise ConfigError(f"unknown motion preset {name!r}")
        if self.detector.normalization not in ("max", "rms"):
            raise ConfigError("detector.normalization must be 'max' or 'rms'")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, data, path=""):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'} must be a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {path or 'config'}: {sorted(unknown)}")
    kwargs = {}
    defaults = cls()
    for name, value in data.items():
        current = getattr(defaults, name)
        if is_dataclass(current):
            kwargs[name] = _build(type(current), value, f"{path}{name}.")
        else:
            kwargs[name] = value
    return cls(**kwargs)


def config_from_dict(data: dict | None) -> ExperimentConfig:
    return _build(ExperimentConfig, data or {}).validate()


def load_config(path=None, seed: int | None = None) -> ExperimentConfig:
    """Read a YAML or JSON config; ``seed`` overrides the file's value."""
    data = {}
    if path is not None:
        text = Path(path).read_text()
        if str(path).endswith(".json"):
            data = json.loads(text)
        else:
            data = yaml.safe_load(text) or {}
    if seed is not None:
        data = dict(data, seed=int(seed))
    if "seed" not in data:
        raise ConfigError("a seed is mandatory: set it in the config or pass --seed")
    return config_from_dict(data)
