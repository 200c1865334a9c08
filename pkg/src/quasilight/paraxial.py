"""Quasioptical (paraxial) propagation with a linear medium and Langevin noise.

Everything runs in the traveling frame ``t' = t - z/c``, where the field at a
fixed retarded time obeys

    dA/dz = (i / 2m) (d_x^2 + d_y^2) A - (A_drift / c) A + f / c.

Transverse boundaries are periodic; keep the beam inside the central part of
the window (at least 25 % guard band) to avoid wrap-around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .grid import ModeGrid, scaled_delta
from .langevin import DriftDiffusion, complex_normal, ou_variance


class ResolutionError(ValueError):
    """The transverse grid does not resolve the field."""

    def __init__(self, message: str, margin: float):
        super().__init__(message)
        self.margin = margin


@dataclass(frozen=True)
class TransverseGrid:
    """``Nx x Ny`` samples centred on the axis; ``R`` is the medium radius (None: unbounded)."""

    Nx: int
    Ny: int
    dx: float
    dy: float
    R: float | None = None

    def __post_init__(self):
        for n in (self.Nx, self.Ny):
            if n < 2 or n & (n - 1):
                raise ValueError(f"sample counts must be powers of two, got {self.Nx}x{self.Ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("sample spacings must be positive")
        if self.R is not None and not self.R > 0:
            raise ValueError(f"cylinder radius must be positive, got {self.R}")

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.Nx) - self.Nx // 2) * self.dx

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.Ny) - self.Ny // 2) * self.dy

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def radius2(self) -> np.ndarray:
        X, Y = self.mesh()
        return X**2 + Y**2

    def spatial_frequencies(self):
        kx = 2 * math.pi * np.fft.fftfreq(self.Nx, self.dx)
        ky = 2 * math.pi * np.fft.fftfreq(self.Ny, self.dy)
        return np.meshgrid(kx, ky, indexing="ij")

    def medium_mask(self) -> np.ndarray | None:
        """1 inside the cylinder, 0 outside; None for an unbounded medium."""
        if self.R is None:
            return None
        return (self.radius2() < self.R**2).astype(float)


@dataclass(frozen=True)
class TransverseField:
    grid: TransverseGrid
    amps: np.ndarray
    z: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.grid.Nx, self.grid.Ny):
            raise ValueError(f"expected {(self.grid.Nx, self.grid.Ny)} samples, got {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "amps", amps)

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2) * self.grid.cell_area)

    @property
    def spectral_power(self) -> float:
        """Power evaluated from the discrete spectrum (Parseval)."""
        F = np.fft.fft2(self.amps)
        return float(np.sum(np.abs(F) ** 2) / self.amps.size * self.grid.cell_area)


def gaussian_beam(grid: TransverseGrid, w0: float, amplitude: complex = 1.0, z: float = 0.0) -> TransverseField:
    """Waist field ``amplitude * exp(-s^2 / w0^2)``."""
    return TransverseField(grid, amplitude * np.exp(-grid.radius2() / w0**2), z)


def beam_width(f: TransverseField, axis: int = 0) -> float:
    """``2 sqrt(<x^2>)`` of the intensity, equal to ``w`` for ``exp(-2x^2/w^2)``."""
    I = np.abs(f.amps) ** 2
    coord = f.grid.x if axis == 0 else f.grid.y
    prof = I.sum(axis=1 - axis)
    mean = np.sum(coord * prof) / prof.sum()
    return 2.0 * math.sqrt(np.sum((coord - mean) ** 2 * prof) / prof.sum())


def rayleigh_range(m: float, w0: float) -> float:
    return 0.5 * m * w0**2


def gaussian_width(m: float, w0: float, z):
    """Free-space width law ``w0 sqrt(1 + (2z / (m w0^2))^2)``."""
    return w0 * np.sqrt(1.0 + (np.asarray(z, dtype=float) / rayleigh_range(m, w0)) ** 2)


def fresnel_kernel(m: float, z1: float, z: float, s1, s):
    """Green function ``U(z1 s1 | z s) = -i m / (2 pi dz) exp(i m |s - s1|^2 / (2 dz))``.

    ``s1`` and ``s`` are transverse points with the two coordinates on the last axis.
    """
    dz = z - z1
    if not dz > 0:
        raise ValueError(f"need z > z1, got z - z1 = {dz}")
    d = np.asarray(s, dtype=float) - np.asarray(s1, dtype=float)
    r2 = np.sum(d**2, axis=-1)
    return -1j * m / (2 * math.pi * dz) * np.exp(1j * m * r2 / (2 * dz))


def fresnel_kernel_1d(m: float, dz: float, x):
    """Separable factor of :func:`fresnel_kernel`: ``sqrt(m / (2 pi i dz)) exp(i m x^2 / (2 dz))``."""
    if not dz > 0:
        raise ValueError(f"need dz > 0, got {dz}")
    return np.sqrt(m / (2j * math.pi * dz)) * np.exp(1j * m * np.asarray(x, dtype=float) ** 2 / (2 * dz))


@lru_cache(maxsize=32)
def _diffraction_multiplier(grid: TransverseGrid, m: float, dz: float) -> np.ndarray:
    KX, KY = grid.spatial_frequencies()
    mult = np.exp(-1j * (KX**2 + KY**2) * dz / (2 * m))
    mult.setflags(write=False)
    return mult


def diffract(amps: np.ndarray, grid: TransverseGrid, m: float, dz: float) -> np.ndarray:
    """Exact free diffraction over ``dz`` on the periodic grid."""
    return np.fft.ifft2(np.fft.fft2(amps) * _diffraction_multiplier(grid, float(m), float(dz)))


def nyquist_margin(f: TransverseField, fraction: float = 1e-10) -> float:
    """Nyquist frequency over the frequency enclosing all but ``fraction`` of the power.

    Values at or below 1 mean the spectrum reaches the grid edge.
    """
    P = np.abs(np.fft.fft2(f.amps)) ** 2
    total = P.sum()
    if total == 0:
        return math.inf
    KX, KY = f.grid.spatial_frequencies()
    nyq_x, nyq_y = math.pi / f.grid.dx, math.pi / f.grid.dy
    # normalised Chebyshev radius: 1 marks the Nyquist square
    rho = np.maximum(np.abs(KX) / nyq_x, np.abs(KY) / nyq_y).ravel()
    order = np.argsort(rho)[::-1]
    tail = np.cumsum(P.ravel()[order]) / total
    idx = np.searchsorted(tail, fraction, side="right")
    rho_max = rho[order][min(idx, rho.size - 1)]
    return math.inf if rho_max == 0 else 1.0 / rho_max


def check_resolution(f: TransverseField, min_margin: float = 1.25) -> float:
    margin = nyquist_margin(f)
    if margin < min_margin:
        raise ResolutionError(
            f"transverse grid under-resolves the field: Nyquist margin {margin:.3g} < {min_margin}", margin)
    return margin


def paraxial_step(
    f: TransverseField,
    dz: float,
    m: float,
    dd: DriftDiffusion | None = None,
    rng: np.random.Generator | None = None,
    c: float = 1.0,
    a: float = 1.0,
    profile: np.ndarray | None = None,
    check: bool = False,
) -> TransverseField:
    """Strang split step: half drift, exact diffraction, half drift, then noise.

    ``profile`` scales both drift and diffusion across the transverse plane
    (defaults to the cylinder mask of a bounded grid).  Noise is added only
    when ``rng`` is given; its per-sample variance is the exact OU variance
    times ``a^2 / (dx dy)``, i.e. ``2 Q dz a^2 / (c dx dy)`` for weak drift.
    """
    if not dz > 0:
        raise ValueError(f"dz must be positive, got {dz}")
    if check:
        check_resolution(f)
    g = f.grid
    amps = f.amps
    if profile is None:
        profile = g.medium_mask()
    if dd is not None and dd.A != 0:
        A = dd.A if profile is None else dd.A * profile
        half = np.exp(-A * dz / (2 * c))
        amps = half * diffract(half * amps, g, m, dz)
    else:
        amps = diffract(amps, g, m, dz)
    if rng is not None and dd is not None and dd.Q > 0:
        scale = a * a / g.cell_area
        if profile is None:
            var = ou_variance(dd, dz / c) * scale
            amps = amps + complex_normal(rng, amps.shape, var)
        else:
            # per-sample exact variance for the local drift and diffusion
            var = np.vectorize(lambda w: ou_variance(DriftDiffusion(dd.A * w, dd.Q * w), dz / c) if w > 0 else 0.0)(profile)
            amps = amps + np.sqrt(var) * complex_normal(rng, amps.shape, 1.0)
    return TransverseField(g, amps, f.z + dz)


def propagate(f: TransverseField, z: float, steps: int, m: float, dd: DriftDiffusion | None = None,
              rng: np.random.Generator | None = None, c: float = 1.0, a: float = 1.0,
              profile: np.ndarray | None = None) -> TransverseField:
    """``steps`` equal paraxial steps over distance ``z``; resolution checked on entry."""
    check_resolution(f)
    dz = z / steps
    for _ in range(steps):
        f = paraxial_step(f, dz, m, dd, rng, c, a, profile)
    return f


@dataclass(frozen=True)
class DeltaCorrelation:
    """Transverse ``weight * delta(s)``: white noise of an unbounded medium."""

    weight: float = 1.0

    def on_grid(self, s, cell_area: float):
        """Sample-cell average: ``weight / cell_area`` at ``s = 0``, zero elsewhere."""
        s = np.asarray(s, dtype=float)
        return np.where(s == 0, self.weight / cell_area, 0.0)


def noise_correlation_D(m: float, dz: float, s, R: float | None = None):
    """Transverse noise correlation ``D`` after diffraction over ``dz``.

    Unbounded medium: :class:`DeltaCorrelation`.  Cylinder of radius ``R``:
    ``(m R / (2 pi dz |s|)) J1(m |s| R / dz) exp(-i m s^2 / (2 dz))``.
    """
    if not dz > 0:
        raise ValueError(f"dz must be positive, got {dz}")
    if R is None:
        return DeltaCorrelation(1.0)
    s = np.abs(np.asarray(s, dtype=float))
    x = m * s * R / dz
    small = x < 1e-4
    xs = np.where(small, 1.0, x)
    j1_over_x = np.where(small, 0.5 - x**2 / 16.0, special.j1(xs) / xs)
    out = (m * R / dz) ** 2 / (2 * math.pi) * j1_over_x * np.exp(-1j * m * s**2 / (2 * dz))
    return complex(out) if out.ndim == 0 else out


def first_zero_of_D(m: float, dz: float, R: float) -> float:
    """Smallest ``|s| > 0`` where the cylinder correlation vanishes."""
    scale = dz / (m * R)
    f = lambda s: float(special.j1(m * s * R / dz))  # noqa: E731
    from scipy.optimize import brentq
    return brentq(f, 3.0 * scale, 4.5 * scale, xtol=1e-15 * scale, rtol=1e-15)


def _fourier_integral(g, lo: float, omega: float) -> complex:
    """``int_lo^inf g(v) exp(i omega v) dv`` for slowly varying complex ``g``."""
    gr = lambda v: g(v).real  # noqa: E731
    gi = lambda v: g(v).imag  # noqa: E731
    if abs(omega) < 1e-14:
        re = integrate.quad(gr, lo, np.inf, limit=500)[0]
        im = integrate.quad(gi, lo, np.inf, limit=500)[0]
        return complex(re, im)
    w = abs(omega)
    sgn = 1.0 if omega > 0 else -1.0
    q = lambda h, kind: integrate.quad(h, lo, np.inf, weight=kind, wvar=w, limlst=200)[0]  # noqa: E731
    cr, sr = q(gr, "cos"), q(gr, "sin")
    ci, si = q(gi, "cos"), q(gi, "sin")
    return complex(cr - sgn * si, sgn * sr + ci)


def w_correlator(z: float, s: float, tau: float, dd: DriftDiffusion, grid: ModeGrid, m: float,
                 R: float | None = None, cell_area: float | None = None) -> complex:
    """``<W(z, 0, t) W*(z, s, t + tau)>`` of the accumulated noise source.

    ``(2/c^2) Q a^3 delta_a(tau) int_0^z exp(-2 Re A (z - z1)/c) D(z - z1, s) dz1``.
    For an unbounded medium the delta in ``s`` is read as a sample-cell average,
    which needs ``cell_area``.  The bounded case diverges at ``s = 0``.
    """
    if not z > 0:
        raise ValueError(f"z must be positive, got {z}")
    c, a = grid.c, grid.a
    pref = 2.0 / c**2 * dd.Q * a**3 * scaled_delta(grid, tau)
    rate = 2.0 * dd.A.real / c
    s = abs(float(s))
    if R is None:
        if s != 0:
            return 0j
        if cell_area is None:
            raise ValueError("unbounded medium at s = 0 needs the sample cell area")
        length = z if abs(rate * z) < 1e-12 else -math.expm1(-rate * z) / rate
        return complex(pref * length / cell_area)
    if s == 0:
        raise ValueError("cylinder correlation diverges at s = 0")
    # substitute v = 1/u: J1(beta v) exp(-i gamma v) / v with beta = m s R, gamma = m s^2 / 2,
    # split into Hankel parts with smooth envelopes
    beta, gamma = m * s * R, 0.5 * m * s * s
    amp = m * R / (2 * math.pi * s)
    damp = lambda v: math.exp(-rate / v)  # noqa: E731
    h1 = lambda v: 0.5 * amp * damp(v) * special.hankel1e(1, beta * v) / v  # noqa: E731
    h2 = lambda v: 0.5 * amp * damp(v) * special.hankel2e(1, beta * v) / v  # noqa: E731
    lo = 1.0 / z
    total = _fourier_integral(h1, lo, beta - gamma) + _fourier_integral(h2, lo, -(beta + gamma))
    return complex(pref * total)
