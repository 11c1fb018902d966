"""Eigenmode mathematics and statistical ensembles for reverberant cavities.

A reverberant field is described by three ensembles: modal coefficients
``alpha``, phase-shift angles ``phi`` and eigenfrequencies ``omega`` (plus
a decay time per mode).  Everything here is a pure function of its inputs;
randomness enters only through an explicit seed or ``numpy.random.Generator``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numba as nb
import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
TWO_PI = 2.0 * np.pi


class BandTooNarrowError(ValueError):
    """Raised when a frequency band holds fewer than one mode."""


@dataclass(frozen=True)
class Mode:
    omega_n: float
    alpha_n: float
    phi_n: float
    tau_n: float

    def __post_init__(self):
        if not self.tau_n > 0:
            raise ValueError(f"tau_n must be positive, got {self.tau_n}")
        if not self.omega_n >= 0:
            raise ValueError(f"omega_n must be non-negative, got {self.omega_n}")
        if not 0.0 <= self.phi_n < TWO_PI:
            raise ValueError(f"phi_n must lie in [0, 2pi), got {self.phi_n}")

    @property
    def e_n0(self) -> complex:
        """Initial complex amplitude ``alpha * exp(j phi)``."""
        return self.alpha_n * np.exp(1j * self.phi_n)


@dataclass(frozen=True)
class CavityGeometry:
    volume: float
    tau: float
    a0: float = 1.0
    wavelength: float = 0.1

    def __post_init__(self):
        if not self.volume > 0:
            raise ValueError("volume must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")

    @classmethod
    def from_center_frequency(cls, volume, tau, center_frequency, a0=1.0):
        return cls(volume=volume, tau=tau, a0=a0,
                   wavelength=SPEED_OF_LIGHT / center_frequency)


@dataclass(frozen=True, eq=False)
class EigenmodeEnsemble:
    """A realization of the modal ensembles, stored column-wise.

    Arrays are kept sorted by ``omega``; ``n_m`` always equals ``len(omega)``.
    """

    omega: np.ndarray
    alpha: np.ndarray
    phi: np.ndarray
    tau: np.ndarray
    band_lo: float
    band_hi: float
    n_m: int = field(init=False)

    def __post_init__(self):
        arrays = {}
        for name in ("omega", "alpha", "phi", "tau"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            arrays[name] = arr
            object.__setattr__(self, name, arr)
        n = len(arrays["omega"])
        if any(len(a) != n for a in arrays.values()):
            raise ValueError("ensemble arrays must have equal length")
        if not self.band_lo < self.band_hi:
            raise ValueError("band_lo must be below band_hi")
        om = arrays["omega"]
        if n and (np.any(np.diff(om) < 0)):
            raise ValueError("modes must be sorted by omega")
        if n and (om[0] < self.band_lo or om[-1] > self.band_hi):
            raise ValueError("all eigenfrequencies must lie inside the band")
        if np.any(arrays["tau"] <= 0):
            raise ValueError("decay times must be positive")
        if np.any((arrays["phi"] < 0) | (arrays["phi"] >= TWO_PI)):
            raise ValueError("phases must lie in [0, 2pi)")
        object.__setattr__(self, "n_m", n)

    @classmethod
    def from_modes(cls, modes, band_lo, band_hi):
        modes = sorted(modes, key=lambda m: m.omega_n)
        return cls(
            omega=[m.omega_n for m in modes],
            alpha=[m.alpha_n for m in modes],
            phi=[m.phi_n for m in modes],
            tau=[m.tau_n for m in modes],
            band_lo=band_lo,
            band_hi=band_hi,
        )

    @classmethod
    def from_unsorted(cls, omega, alpha, phi, tau, band_lo, band_hi):
        """Build an ensemble from arrays in any order (sorted here)."""
        omega = np.asarray(omega, dtype=float)
        order = np.argsort(omega, kind="stable")
        return cls(omega=omega[order], alpha=np.asarray(alpha, float)[order],
                   phi=np.mod(np.asarray(phi, float)[order], TWO_PI),
                   tau=np.asarray(tau, float)[order],
                   band_lo=band_lo, band_hi=band_hi)

    @property
    def modes(self) -> list[Mode]:
        return [Mode(float(w), float(a), float(p), float(t))
                for w, a, p, t in zip(self.omega, self.alpha, self.phi, self.tau)]

    @property
    def mean_spacing(self) -> float:
        """Mean eigenfrequency spacing implied by the band and mode count."""
        return (self.band_hi - self.band_lo) / max(self.n_m, 1)

    def __len__(self):
        return self.n_m

    def __eq__(self, other):
        if not isinstance(other, EigenmodeEnsemble):
            return NotImplemented
        return (self.band_lo == other.band_lo and self.band_hi == other.band_hi
                and all(np.array_equal(getattr(self, k), getattr(other, k))
                        for k in ("omega", "alpha", "phi", "tau")))

    def concatenate(self, other: "EigenmodeEnsemble") -> "EigenmodeEnsemble":
        return EigenmodeEnsemble.from_unsorted(
            np.concatenate([self.omega, other.omega]),
            np.concatenate([self.alpha, other.alpha]),
            np.concatenate([self.phi, other.phi]),
            np.concatenate([self.tau, other.tau]),
            min(self.band_lo, other.band_lo), max(self.band_hi, other.band_hi))

    def to_dict(self) -> dict:
        return {
            "band_lo": self.band_lo,
            "band_hi": self.band_hi,
            "n_m": self.n_m,
            "modes": [
                {"omega_n": float(w), "alpha_n": float(a), "phi_n": float(p), "tau_n": float(t)}
                for w, a, p, t in zip(self.omega, self.alpha, self.phi, self.tau)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EigenmodeEnsemble":
        modes = [Mode(**m) for m in doc["modes"]]
        ens = cls.from_modes(modes, doc["band_lo"], doc["band_hi"])
        if ens.n_m != doc.get("n_m", ens.n_m):
            raise ValueError("n_m does not match the number of modes")
        return ens

    def to_json(self) -> str:
        # repr-precision floats keep the round trip exact
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "EigenmodeEnsemble":
        return cls.from_dict(json.loads(text))


def mode_time_response(mode: Mode, t):
    """Damped oscillation ``E_n0 exp(-i w t) exp(-t / 2 tau) U(t)`` of one mode."""
    t = np.asarray(t, dtype=float)
    tp = np.where(t >= 0, t, 0.0)
    val = mode.e_n0 * np.exp(-1j * mode.omega_n * tp) * np.exp(-tp / (2.0 * mode.tau_n))
    out = np.where(t >= 0, val, 0.0 + 0.0j)
    return out[()] if out.ndim == 0 else out


def mode_spectral_magnitude(mode: Mode, omega):
    """Lorentzian magnitude of the Fourier transform of one mode."""
    omega = np.asarray(omega, dtype=float)
    x = 2.0 * mode.tau_n * (omega - mode.omega_n)
    out = abs(mode.e_n0) * mode.tau_n / np.pi / np.sqrt(1.0 + x * x)
    return out[()] if out.ndim == 0 else out


def field_time_response(ensemble: EigenmodeEnsemble, t):
    """Superposition of all modal time responses of the ensemble."""
    t = np.asarray(t, dtype=float)
    if ensemble.n_m == 0:
        out = np.zeros(t.shape, dtype=complex)
        return out[()] if out.ndim == 0 else out
    tt = t[..., None]
    tp = np.where(tt >= 0, tt, 0.0)
    e0 = ensemble.alpha * np.exp(1j * ensemble.phi)
    terms = e0 * np.exp(-1j * ensemble.omega * tp) * np.exp(-tp / (2.0 * ensemble.tau))
    out = np.where(t >= 0, terms.sum(axis=-1), 0.0)
    return out[()] if out.ndim == 0 else out


def power_delay_profile(a0, tau, t):
    """Envelope ``A0 exp(-t / 2 tau) U(t)``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 0, a0 * np.exp(-np.where(t >= 0, t, 0.0) / (2.0 * tau)), 0.0)
    return out[()] if out.ndim == 0 else out


def channel_impulse_response(ensemble: EigenmodeEnsemble, geom: CavityGeometry, t_grid):
    """``h(t) = P(t) * sum_n alpha_n exp(j phi_n) exp(j omega_n t)`` on a time grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size > 1 and np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be ascending")
    env = power_delay_profile(geom.a0, geom.tau, t_grid)
    c = ensemble.alpha * np.exp(1j * ensemble.phi)
    modal = np.exp(1j * np.outer(t_grid, ensemble.omega)) @ c if ensemble.n_m else 0.0
    return env * modal


@nb.njit(cache=True, nogil=True, fastmath=True)
def _lorentz_sum(cre, cim, omega_n, gamma, grid):
    # c / (g + j d) = c (g - j d) / (g^2 + d^2), in real arithmetic
    out = np.empty(grid.size, dtype=np.complex128)
    for k in range(grid.size):
        w = grid[k]
        acc_re = 0.0
        acc_im = 0.0
        for n in range(omega_n.size):
            d = omega_n[n] - w
            g = gamma[n]
            inv = 1.0 / (g * g + d * d)
            acc_re += (cre[n] * g + cim[n] * d) * inv
            acc_im += (cim[n] * g - cre[n] * d) * inv
        out[k] = complex(acc_re, acc_im)
    return out


def transfer_function(ensemble: EigenmodeEnsemble, geom: CavityGeometry, omega_grid):
    """Angular-domain channel ``A0 sum_n alpha_n e^{j phi_n} / (j(w_n - w) + 1/2tau_n)``."""
    omega_grid = np.asarray(omega_grid, dtype=float)
    if omega_grid.size == 0:
        raise ValueError("omega_grid must be nonempty")
    if ensemble.n_m == 0:
        return np.zeros(omega_grid.shape, dtype=complex)
    coef = ensemble.alpha * np.exp(1j * ensemble.phi)
    h = _lorentz_sum(coef.real.copy(), coef.imag.copy(), ensemble.omega, 0.5 / ensemble.tau,
                     omega_grid.ravel())
    return (geom.a0 * h).reshape(omega_grid.shape)


def mode_count(omega, volume):
    """Weyl estimate of the number of EM modes below ``omega`` in volume ``V``."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0) or not volume >= 0:
        raise ValueError("omega and volume must be non-negative")
    out = omega ** 3 * volume / (3.0 * np.pi ** 2 * SPEED_OF_LIGHT ** 3)
    return out[()] if out.ndim == 0 else out


def mode_count_from_wavelength(wavelength, volume):
    return 8.0 * np.pi * volume / (3.0 * wavelength ** 3)


def critical_volume_ratio(wavelength, volume):
    """Relative volume change ``3 lambda^3 / (8 pi V)`` that adds one mode."""
    if not wavelength > 0 or not volume > 0:
        raise ValueError("wavelength and volume must be positive")
    return 3.0 * wavelength ** 3 / (8.0 * np.pi * volume)


def critical_volume(wavelength, volume=1.0):
    """Absolute critical volume change, independent of ``volume``."""
    return critical_volume_ratio(wavelength, volume) * volume


def wigner_surmise_pdf(s):
    s = np.asarray(s, dtype=float)
    return np.where(s >= 0, 0.5 * np.pi * s * np.exp(-0.25 * np.pi * s * s), 0.0)


def wigner_surmise_cdf(s):
    s = np.asarray(s, dtype=float)
    return np.where(s >= 0, 1.0 - np.exp(-0.25 * np.pi * s * s), 0.0)


def sample_wigner_spacings(rng: np.random.Generator, size):
    """Unit-mean GOE nearest-neighbour spacings by inverse-CDF sampling."""
    u = rng.random(size)
    return np.sqrt(-4.0 * np.log1p(-u) / np.pi)


def weyl_mode_number(band_lo, band_hi, volume) -> int:
    return int(np.round(mode_count(band_hi, volume) - mode_count(band_lo, volume)))


def sample_ensemble(seed, geom: CavityGeometry, band_lo, band_hi, alpha_sigma=1.0):
    """Draw one realization of the modal ensembles inside ``[band_lo, band_hi]``.

    The mode count follows Weyl's law; spacings follow the Wigner surmise and
    are cumulated, then rescaled so that all modes fall strictly inside the
    band.  ``alpha`` is zero-mean Gaussian with std ``alpha_sigma``, ``phi``
    uniform on ``[0, 2pi)`` and every mode shares ``geom.tau``.
    """
    if not band_lo < band_hi:
        raise ValueError("band_lo must be below band_hi")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_m = weyl_mode_number(band_lo, band_hi, geom.volume)
    if n_m < 1:
        raise BandTooNarrowError("band too narrow for Weyl count")
    # n_m + 1 gaps: the last one separates the top mode from the band edge
    gaps = sample_wigner_spacings(rng, n_m + 1)
    pos = np.cumsum(gaps)
    omega = band_lo + (band_hi - band_lo) * pos[:-1] / pos[-1]
    alpha = rng.normal(0.0, alpha_sigma, n_m)
    phi = rng.uniform(0.0, TWO_PI, n_m)
    tau = np.full(n_m, geom.tau)
    return EigenmodeEnsemble(omega=omega, alpha=alpha, phi=phi, tau=tau,
                             band_lo=float(band_lo), band_hi=float(band_hi))
