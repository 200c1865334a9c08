"""Localized (Wannier) mode geometry on a periodic 1D normalization length.

A band of ``N`` plane waves centred on the wave number ``m`` is traded for
``N`` localized packets sitting on the cells ``l = n*a``.  The two sets of
amplitudes are related by a unitary matrix, so every conversion here is exact
up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np

Representation = Literal["full", "envelope"]


class GridError(ValueError):
    """Invalid grid geometry or mismatched fields."""


@dataclass(frozen=True)
class ModeGrid:
    """One band ``m`` of a length-``L`` space cut into ``N = L/a`` cells.

    Attributes:
        L: Normalization length.
        a: Cell size.
        m: Band-centre wave number.
        c: Propagation speed.
    """

    L: float
    a: float
    m: float = 0.0
    c: float = 1.0
    N: int = field(init=False)

    def __post_init__(self):
        if not (self.L > 0 and self.a > 0):
            raise GridError(f"L and a must be positive, got L={self.L}, a={self.a}")
        if self.c <= 0:
            raise GridError(f"c must be positive, got {self.c}")
        ratio = self.L / self.a
        n = int(round(ratio))
        if n < 2 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
            raise GridError(f"L/a must be an integer >= 2, got {ratio!r}")
        if n % 2:
            raise GridError(f"cell count N = L/a must be even, got {n}")
        object.__setattr__(self, "N", n)

    @property
    def dk(self) -> float:
        return 2.0 * math.pi / self.L

    @property
    def band_index(self) -> np.ndarray:
        """Integer offsets ``j = -N/2 .. N/2-1`` of the band wave numbers."""
        return np.arange(-self.N // 2, self.N // 2)

    @property
    def k(self) -> np.ndarray:
        """Band wave numbers ``m + j*dk`` in ascending order."""
        return self.m + self.dk * self.band_index

    @property
    def positions(self) -> np.ndarray:
        """Cell positions ``l = n*a``."""
        return self.a * np.arange(self.N)

    @property
    def omega_k(self) -> np.ndarray:
        return self.c * self.k

    @property
    def omega_m(self) -> float:
        return self.c * self.m

    @property
    def bandwidth(self) -> float:
        """Local-mode bandwidth ``c/a``."""
        return self.c / self.a


@dataclass(frozen=True)
class CollectiveField:
    """Plane-wave amplitudes, one per band wave number (ascending ``k``)."""

    grid: ModeGrid
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.grid.N,):
            raise GridError(f"expected {self.grid.N} amplitudes, got shape {amps.shape}")
        object.__setattr__(self, "amps", amps)

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))


@dataclass(frozen=True)
class LocalField:
    """Per-cell amplitudes.

    ``representation="full"`` holds ``alpha_m(l)`` itself; ``"envelope"`` holds
    the slowly varying part ``A_m(l, t)`` with the carrier
    ``exp(-i*omega_m*t + i*m*l)`` removed at the stored time ``t``.
    """

    grid: ModeGrid
    amps: np.ndarray
    representation: Representation = "full"
    t: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.grid.N,):
            raise GridError(f"expected {self.grid.N} amplitudes, got shape {amps.shape}")
        if self.representation not in ("full", "envelope"):
            raise GridError(f"unknown representation {self.representation!r}")
        object.__setattr__(self, "amps", amps)

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))


def wannier_value(grid: ModeGrid, n, x):
    """Wannier packet of cell ``n`` evaluated at position(s) ``x``.

    Closed form of the geometric sum
    ``(1/sqrt(N L)) * sum_k exp(i k (x - l))`` with ``l = n*a``.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or not 0 <= n < grid.N:
        raise GridError(f"cell index must be an integer in [0, {grid.N}), got {n!r}")
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x >= grid.L)):
        raise GridError("positions must lie in [0, L)")
    u = x - n * grid.a
    theta = 2.0 * math.pi * u / grid.L
    half = 0.5 * theta
    den = np.sin(half)
    # |u| < L, so the only removable pole is u == 0
    at_pole = np.abs(den) < 1e-12
    dirichlet = np.where(at_pole, float(grid.N), np.sin(grid.N * half) / np.where(at_pole, 1.0, den))
    phase = np.exp(1j * (grid.m * u - half))
    out = phase * dirichlet / math.sqrt(grid.N * grid.L)
    return out[()] if out.ndim == 0 else out


@lru_cache(maxsize=16)
def transform_coefficients(grid: ModeGrid) -> np.ndarray:
    """Unitary ``C[l, k] = exp(-i k l) / sqrt(N)`` (rows cells, columns band); read-only."""
    C = np.exp(-1j * np.outer(grid.positions, grid.k)) / math.sqrt(grid.N)
    C.setflags(write=False)
    return C


def _envelope_carrier(grid: ModeGrid, t: float) -> np.ndarray:
    # exp(-i(w_k - w_m)t + i(k-m)l) for every (l, k)
    dk = grid.k - grid.m
    return np.exp(-1j * grid.c * dk[None, :] * t + 1j * np.outer(grid.positions, dk))


def to_local(f: CollectiveField, representation: Representation = "full", t: float = 0.0) -> LocalField:
    """``alpha_m(l) = sum_k conj(C[l, k]) alpha_k``.

    With ``representation="envelope"`` the collective amplitudes are read as
    interaction-picture amplitudes at time ``t`` and the envelope ``A_m(l, t)``
    is returned.
    """
    grid = f.grid
    if representation == "full":
        amps = np.conj(transform_coefficients(grid)) @ f.amps
        return LocalField(grid, amps, "full", 0.0)
    if representation == "envelope":
        amps = _envelope_carrier(grid, t) @ f.amps / math.sqrt(grid.N)
        return LocalField(grid, amps, "envelope", float(t))
    raise GridError(f"unknown representation {representation!r}")


def to_collective(f: LocalField) -> CollectiveField:
    """Inverse of :func:`to_local` for either representation."""
    grid = f.grid
    if f.representation == "full":
        amps = transform_coefficients(grid).T @ f.amps
    else:
        amps = np.conj(_envelope_carrier(grid, f.t)).T @ f.amps / math.sqrt(grid.N)
    return CollectiveField(grid, amps)


def full_to_envelope(f: LocalField, t: float) -> LocalField:
    """Strip the band-centre carrier from a full local field at time ``t``."""
    if f.representation != "full":
        raise GridError("expected a full-representation field")
    g = f.grid
    carrier = np.exp(-1j * g.omega_m * t + 1j * g.m * g.positions)
    return LocalField(g, f.amps / carrier, "envelope", float(t))


def envelope_to_full(f: LocalField) -> LocalField:
    """Restore the carrier ``exp(-i omega_m t + i m l)`` at the stored time."""
    if f.representation != "envelope":
        raise GridError("expected an envelope-representation field")
    g = f.grid
    carrier = np.exp(-1j * g.omega_m * f.t + 1j * g.m * g.positions)
    return LocalField(g, f.amps * carrier, "full", 0.0)


def scaled_delta(grid: ModeGrid, tau):
    """Band-limited time delta ``(dnu/N) sin(pi tau dnu) / sin(pi tau dnu / N)``.

    Equals ``dnu`` at ``tau = 0``.  Where both sines vanish the L'Hopital
    limit ``dnu cos(pi tau dnu) / cos(pi tau dnu / N)`` is used.
    """
    dnu = grid.bandwidth
    n = grid.N
    x = math.pi * np.asarray(tau, dtype=float) * dnu
    den = np.sin(x / n)
    pole = np.abs(den) < 1e-12
    regular = (dnu / n) * np.sin(x) / np.where(pole, 1.0, den)
    limit = dnu * np.cos(x) / np.where(pole, np.cos(x / n), 1.0)
    out = np.where(pole, limit, regular)
    return float(out) if out.ndim == 0 else out


def gram_matrix(grid: ModeGrid, oversample: int = 4) -> np.ndarray:
    """Overlap matrix of the cell packets by rectangle-rule quadrature.

    The rule is exact for ``oversample >= 1`` because products of two packets
    are trigonometric polynomials of degree below ``N``.
    """
    npts = oversample * grid.N
    x = np.arange(npts) * (grid.L / npts)
    w = np.stack([wannier_value(grid, n, x) for n in range(grid.N)])
    return (w @ w.conj().T) * (grid.L / npts)
