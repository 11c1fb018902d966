"""Boundary perturbation: rectangular-cavity field theory and RIS codebooks.

The rectangular cavity is the analytic test bed for the first-order
frequency-shift integral; the RIS part maps codebook switches onto an
equivalent boundary displacement and onto a statistical perturbation of
an eigenmode ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import epsilon_0, mu_0

from .eigenmode import TWO_PI, EigenmodeEnsemble


class NonexistentModeError(ValueError):
    pass


@dataclass(frozen=True)
class RectangularCavity:
    a: float
    b: float
    d: float
    epsilon: float = epsilon_0
    mu: float = mu_0

    def __post_init__(self):
        if min(self.a, self.b, self.d) <= 0:
            raise ValueError("edge lengths must be positive")
        if not (self.epsilon > 0 and self.mu > 0):
            raise ValueError("epsilon and mu must be positive reals")

    @property
    def volume(self):
        return self.a * self.b * self.d

    @property
    def edges(self):
        return {"x": self.a, "y": self.b, "z": self.d}

    def resized(self, axis, delta):
        """Copy with the edge along ``axis`` changed by ``delta`` (m)."""
        key = {"x": "a", "y": "b", "z": "d"}[axis]
        kw = dict(a=self.a, b=self.b, d=self.d, epsilon=self.epsilon, mu=self.mu)
        kw[key] += delta
        return RectangularCavity(**kw)


def _check_indices(m, n, p):
    idx = (m, n, p)
    if any(int(i) != i or i < 0 for i in idx):
        raise NonexistentModeError(f"nonexistent mode {idx}: indices must be non-negative integers")
    if sum(1 for i in idx if i == 0) > 1:
        raise NonexistentModeError(f"nonexistent mode {idx}: at most one index may be zero")


def rect_mode_frequency(m, n, p, cavity: RectangularCavity) -> float:
    """Angular resonance frequency of mode (m, n, p) in a rectangular cavity."""
    _check_indices(m, n, p)
    k = np.pi * np.sqrt((m / cavity.a) ** 2 + (n / cavity.b) ** 2 + (p / cavity.d) ** 2)
    return float(k / np.sqrt(cavity.mu * cavity.epsilon))


def rect_mode_fields(m, n, p, cavity: RectangularCavity, point, *, atol=1e-12):
    """Standing-wave fields of a TE_m0p mode, normalized to max|E| = 1.

    ``point`` may be a single (x, y, z) triple or an array of shape (..., 3).
    Returns complex arrays ``(E, H)`` of the same shape.
    """
    _check_indices(m, n, p)
    if n != 0 or m < 1 or p < 1:
        raise NonexistentModeError(f"only TE_m0p modes are supported, got {(m, n, p)}")
    pt = np.asarray(point, dtype=float)
    x, y, z = pt[..., 0], pt[..., 1], pt[..., 2]
    tol = atol + 1e-9 * max(cavity.a, cavity.b, cavity.d)
    inside = ((x >= -tol) & (x <= cavity.a + tol) & (y >= -tol) & (y <= cavity.b + tol)
              & (z >= -tol) & (z <= cavity.d + tol))
    if not np.all(inside):
        raise ValueError("point lies outside the cavity")
    kx = m * np.pi / cavity.a
    kz = p * np.pi / cavity.d
    w = rect_mode_frequency(m, n, p, cavity)
    sx, cx = np.sin(kx * x), np.cos(kx * x)
    sz, cz = np.sin(kz * z), np.cos(kz * z)
    zero = np.zeros_like(x, dtype=complex)
    E = np.stack([zero, (sx * sz).astype(complex), zero], axis=-1)
    # H = j curl(E) / (w mu)
    scale = 1j / (w * cavity.mu)
    H = np.stack([scale * (-kz) * sx * cz, zero, scale * kx * cx * sz], axis=-1)
    return E, H


_WALLS = ("x-", "x+", "y-", "y+", "z-", "z+")


def _midpoints(lo, hi, n):
    h = (hi - lo) / n
    return lo + h * (np.arange(n) + 0.5), h


def _face_flux(mode, cavity, box, axis, side, n):
    """Midpoint-rule flux of ``E0* x H0`` through one face of ``box`` (outward)."""
    ax = "xyz".index(axis)
    others = [i for i in range(3) if i != ax]
    u, hu = _midpoints(box[others[0]][0], box[others[0]][1], n)
    v, hv = _midpoints(box[others[1]][0], box[others[1]][1], n)
    if hu == 0 or hv == 0:
        return 0.0j
    U, Vv = np.meshgrid(u, v, indexing="ij")
    pts = np.empty(U.shape + (3,))
    pts[..., others[0]] = U
    pts[..., others[1]] = Vv
    pts[..., ax] = box[ax][1] if side > 0 else box[ax][0]
    E, H = rect_mode_fields(*mode, cavity, pts)
    s = np.cross(np.conj(E), H)[..., ax]
    return side * s.sum() * hu * hv


def _surface_integral(mode, cavity, box, n):
    total = 0.0j
    for axis in "xyz":
        for side in (-1, 1):
            total += _face_flux(mode, cavity, box, axis, side, n)
    return total


def _stored_energy(mode, cavity, n):
    """Midpoint rule for ``int_V (eps |E|^2 + mu |H|^2) dv``."""
    xs, hx = _midpoints(0.0, cavity.a, n)
    ys, hy = _midpoints(0.0, cavity.b, max(2, n // 4))
    zs, hz = _midpoints(0.0, cavity.d, n)
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    E, H = rect_mode_fields(*mode, cavity, np.stack([X, Y, Z], axis=-1))
    dens = cavity.epsilon * np.sum(np.abs(E) ** 2, axis=-1) + cavity.mu * np.sum(np.abs(H) ** 2, axis=-1)
    return dens.sum() * hx * hy * hz


def _refine(fn, n0=8, rtol=1e-3, n_max=1024):
    prev = fn(n0)
    n = n0
    while n < n_max:
        n *= 2
        cur = fn(n)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    return prev


def eigenfrequency_shift(cavity: RectangularCavity, mode, wall: str, inward_displacement: float,
                         rtol: float = 1e-3) -> float:
    """First-order eigenfrequency shift (rad/s) from pushing one wall inward.

    The surface term ``-j oint E0* x H0 . ds`` is taken over the closed
    boundary of the removed slab with outward normals, using the unperturbed
    fields on both sides; the denominator is the stored energy of the
    unperturbed mode.  Both integrals use tensor-product midpoint rules refined
    until they change by less than ``rtol``.
    """
    if wall not in _WALLS:
        raise ValueError(f"wall must be one of {_WALLS}, got {wall!r}")
    axis, side = wall[0], (1 if wall[1] == "+" else -1)
    edge = cavity.edges[axis]
    if inward_displacement < 0 or inward_displacement > edge / 10:
        raise ValueError(f"displacement must lie in [0, {edge / 10}] m for first-order validity")
    mode = tuple(int(i) for i in mode)
    if inward_displacement == 0:
        return 0.0
    box = [[0.0, cavity.a], [0.0, cavity.b], [0.0, cavity.d]]
    ax = "xyz".index(axis)
    if side > 0:
        box[ax] = [edge - inward_displacement, edge]
    else:
        box[ax] = [0.0, inward_displacement]
    num = _refine(lambda n: _surface_integral(mode, cavity, box, n), rtol=rtol)
    den = _refine(lambda n: _stored_energy(mode, cavity, n), rtol=rtol)
    return float(np.real(-1j * num / den))


def equivalent_displacement(delta_phi, wavelength):
    """Virtual wall displacement ``(delta_phi / 2pi) * lambda`` of a phase switch."""
    if not wavelength > 0:
        raise ValueError("wavelength must be positive")
    return delta_phi / TWO_PI * wavelength


@dataclass(frozen=True, eq=False)
class Codebook:
    """Binary ON/OFF states of every RIS unit."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 1 or b.size == 0:
            raise ValueError("codebook must be a nonempty 1-D bit vector")
        if not np.all((b == 0) | (b == 1)):
            raise ValueError("codebook entries must be 0 or 1")
        b = b.astype(np.uint8)
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    def __len__(self):
        return self.bits.size

    def __eq__(self, other):
        return isinstance(other, Codebook) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())

    def __invert__(self):
        return Codebook(1 - self.bits)

    def flipped(self, units) -> "Codebook":
        """Copy with the listed unit indices toggled."""
        b = self.bits.copy()
        idx = np.asarray(units, dtype=np.int64)
        b[idx] ^= 1
        return Codebook(b)

    def hamming(self, other: "Codebook") -> int:
        if len(self) != len(other):
            raise ValueError(f"codebook length mismatch: {len(self)} vs {len(other)}")
        return int(np.count_nonzero(self.bits != other.bits))

    def to_hex(self) -> str:
        """Hex string, most significant unit first (U/4 digits)."""
        if len(self) % 4:
            raise ValueError("hex serialization needs a unit count divisible by 4")
        nib = self.bits.reshape(-1, 4) @ np.array([8, 4, 2, 1])
        return "".join("0123456789abcdef"[v] for v in nib)

    @classmethod
    def from_hex(cls, text: str, unit_count: int | None = None) -> "Codebook":
        text = text.strip().lower()
        if text.startswith("0x"):
            text = text[2:]
        vals = [int(ch, 16) for ch in text]
        bits = np.array([(v >> s) & 1 for v in vals for s in (3, 2, 1, 0)], dtype=np.uint8)
        if unit_count is not None and unit_count != bits.size:
            raise ValueError(f"expected {unit_count} units, hex encodes {bits.size}")
        return cls(bits)

    @classmethod
    def random(cls, unit_count, seed) -> "Codebook":
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return cls(rng.integers(0, 2, unit_count))

    @classmethod
    def zeros(cls, unit_count):
        return cls(np.zeros(unit_count, dtype=np.uint8))


@dataclass(frozen=True)
class RisPanel:
    unit_count: int = 512
    unit_area: float = 0.01
    delta_phi: float = np.pi
    wavelength: float = 0.1
    # std (rad/s) of eigenfrequency jitter caused by flipping one unit
    kappa: float = 0.0

    def __post_init__(self):
        if self.unit_count <= 0:
            raise ValueError("unit_count must be positive")
        if not 0 < self.delta_phi <= TWO_PI:
            raise ValueError("delta_phi must lie in (0, 2pi]")
        if not self.unit_area > 0:
            raise ValueError("unit_area must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")


def calibrate_kappa(ensemble: EigenmodeEnsemble, unit_count: int, spacings: float = 1.0) -> float:
    """Per-unit jitter so that a full switch moves modes by ``spacings`` mean spacings."""
    return spacings * ensemble.mean_spacing / np.sqrt(unit_count)


def codebook_switch_volume(cb_a: Codebook, cb_b: Codebook, panel: RisPanel) -> float:
    """Equivalent volume perturbation (m^3) produced by switching ``cb_a`` -> ``cb_b``."""
    h = cb_a.hamming(cb_b)
    return h * panel.unit_area * equivalent_displacement(panel.delta_phi, panel.wavelength)


def fold_into_band(omega, lo, hi):
    """Reflect frequencies at the band edges until they lie in ``[lo, hi]``."""
    width = hi - lo
    x = np.mod(np.asarray(omega, dtype=float) - lo, 2.0 * width)
    x = np.where(x > width, 2.0 * width - x, x)
    return np.clip(lo + x, lo, hi)


def wrap_angle(x):
    """Map angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x), TWO_PI)


def perturb_ensemble(ensemble: EigenmodeEnsemble, cb_a: Codebook, cb_b: Codebook,
                     panel: RisPanel, seed) -> EigenmodeEnsemble:
    """Statistical effect of a codebook switch on an eigenmode ensemble.

    Every eigenfrequency gets an independent Gaussian jitter with std
    ``kappa * sqrt(h)`` (``h`` = flipped units).  Every phase moves along the
    circle toward an independent uniform draw by the fraction ``h / U``.
    Coefficients are untouched.
    """
    h = cb_a.hamming(cb_b)
    if h == 0:
        return ensemble
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = ensemble.n_m
    omega = ensemble.omega + rng.normal(0.0, panel.kappa * np.sqrt(h), n)
    weight = h / panel.unit_count
    fresh = rng.uniform(0.0, TWO_PI, n)
    phi = np.mod(ensemble.phi + weight * wrap_angle(fresh - ensemble.phi), TWO_PI)
    omega = fold_into_band(omega, ensemble.band_lo, ensemble.band_hi)
    return EigenmodeEnsemble.from_unsorted(omega, ensemble.alpha, phi, ensemble.tau,
                                           ensemble.band_lo, ensemble.band_hi)
