"""Free-space transfer of local fields.

In the local basis the free Hamiltonian couples every cell to every other one
through ``Omega(l, l')``; the exact solution is diagonal in the collective
basis, which makes it the reference for everything else in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import CollectiveField, GridError, LocalField, ModeGrid, to_collective, to_local


@dataclass(frozen=True)
class CouplingMatrix:
    grid: ModeGrid
    omega: np.ndarray

    def neighbour_profile(self) -> np.ndarray:
        """``|Omega(0, d)|`` for cell separations ``d = 0 .. N/2``."""
        return np.abs(self.omega[0, : self.grid.N // 2 + 1])


def coupling_matrix(grid: ModeGrid) -> CouplingMatrix:
    """``Omega[l, l'] = (c/N) sum_k k exp(i k (l - l'))``."""
    d = grid.positions[:, None] - grid.positions[None, :]
    omega = (grid.c / grid.N) * np.einsum("k,lpk->lp", grid.k, np.exp(1j * d[..., None] * grid.k))
    return CouplingMatrix(grid, omega)


def evolve_free(f: LocalField, t: float) -> LocalField:
    """Exact free evolution of a full local field over time ``t``.

    Envelope fields are handled too: their interaction-picture collective
    amplitudes do not change, only the stored time advances.
    """
    if t < 0:
        raise GridError(f"evolution time must be non-negative, got {t}")
    if f.representation == "envelope":
        return to_local(to_collective(f), "envelope", f.t + t)
    coll = to_collective(f)
    g = f.grid
    return to_local(CollectiveField(g, coll.amps * np.exp(-1j * g.omega_k * t)))


def advect_envelope(f: LocalField, t: float) -> LocalField:
    """Solve ``(d/dt + c d/dl) A = 0`` for time ``t`` by shifting the envelope.

    Whole-cell shifts are plain circular permutations; fractional shifts use
    band-limited (spectral) interpolation.
    """
    if f.representation != "envelope":
        raise GridError("advect_envelope needs an envelope-representation field")
    g = f.grid
    shift = g.c * t / g.a
    whole = round(shift)
    if abs(shift - whole) < 1e-12:
        return LocalField(g, np.roll(f.amps, int(whole)), "envelope", f.t + t)
    # spectral multiplier over the band offsets (k - m) = j * dk
    spec = np.fft.fft(f.amps)
    j = np.fft.fftfreq(g.N, d=1.0 / g.N)
    spec *= np.exp(-2j * math.pi * j * shift / g.N)
    return LocalField(g, np.fft.ifft(spec), "envelope", f.t + t)


def gaussian_packet(grid: ModeGrid, centre: float, width: float, k0: float | None = None) -> LocalField:
    """Full local field of a Gaussian packet ``exp(-(l-centre)^2 / (2 width^2))``.

    The packet is built as an envelope (periodically wrapped) times the carrier
    ``exp(i k0 l)``; ``k0`` defaults to the band centre.  Unit norm.
    """
    k0 = grid.m if k0 is None else k0
    l = grid.positions
    d = (l - centre + grid.L / 2) % grid.L - grid.L / 2
    amps = np.exp(-(d**2) / (2 * width**2)) * np.exp(1j * k0 * l)
    amps /= np.linalg.norm(amps)
    return LocalField(grid, amps)


def centroid(f: LocalField) -> float:
    """Circular mean position of ``|alpha|^2`` on the periodic grid, in ``[0, L)``."""
    g = f.grid
    w = np.abs(f.amps) ** 2
    z = np.sum(w * np.exp(2j * math.pi * g.positions / g.L))
    return float((np.angle(z) / (2 * math.pi) * g.L) % g.L)
