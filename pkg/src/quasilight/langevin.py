"""Linear two-level medium: drift/diffusion coefficients and Langevin ensembles.

Trajectories are samples of the Glauber-Sudarshan P distribution, so their
averages are normally ordered field moments.  Units: hbar = 1.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .grid import GridError, LocalField, ModeGrid

CHUNK = 1024


@dataclass(frozen=True)
class MediumParams:
    """Two-level medium constants.

    ``volume`` is the normalization volume entering ``eps_k = omega_k / (2 eps0 V)``:
    ``a**3`` for a cell-local Hamiltonian, ``L**3`` for the collective one.
    """

    d2: float
    omega0: float
    gamma: float
    N1: float
    N2: float
    eps0: float = 1.0
    volume: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.N1 < 0 or self.N2 < 0:
            raise ValueError(f"populations must be non-negative, got N1={self.N1}, N2={self.N2}")
        if self.d2 < 0:
            raise ValueError(f"d2 must be non-negative, got {self.d2}")
        if not (self.eps0 > 0 and self.volume > 0):
            raise ValueError("eps0 and volume must be positive")


@dataclass(frozen=True)
class DriftDiffusion:
    A: complex
    Q: float

    def __post_init__(self):
        if self.Q < 0:
            raise ValueError(f"diffusion must be non-negative, got {self.Q}")
        object.__setattr__(self, "A", complex(self.A))
        object.__setattr__(self, "Q", float(self.Q))


def susceptibility(p: MediumParams, omega):
    """Linear susceptibility ``|d|^2 / (omega0 - omega - i gamma)``."""
    return p.d2 / (p.omega0 - np.asarray(omega, dtype=float) - 1j * p.gamma)


def coupling_factor(p: MediumParams, omega: float) -> float:
    """``eps_k = omega / (2 eps0 V)`` with hbar = 1."""
    return omega / (2.0 * p.eps0 * p.volume)


def drift_diffusion(p: MediumParams, grid: ModeGrid) -> DriftDiffusion:
    """Band-centre drift ``A(m)`` and diffusion ``Q(m)``; the whole band shares them."""
    return drift_diffusion_at(p, grid.omega_m)


def drift_diffusion_at(p: MediumParams, w: float) -> DriftDiffusion:
    """Drift and diffusion at carrier frequency ``w``."""
    eps = coupling_factor(p, w)
    kap = complex(susceptibility(p, w))
    A = eps * (p.N1 - p.N2) * kap.imag - 1j * eps * (p.N1 + p.N2) * kap.real
    Q = eps * p.N2 * kap.imag
    return DriftDiffusion(A, Q)


def ou_variance(dd: DriftDiffusion, dt: float) -> float:
    """Exact variance ``<|xi|^2>`` of the noise accumulated over ``dt``."""
    rate = 2.0 * dd.A.real * dt
    if abs(rate) < 1e-12:
        return 2.0 * dd.Q * dt * (1.0 - 0.5 * rate)
    return dd.Q * (-math.expm1(-rate)) / dd.A.real


def complex_normal(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circular complex Gaussian samples with ``<|xi|^2> = variance``."""
    z = rng.standard_normal(tuple(np.atleast_1d(shape)) + (2,))
    return math.sqrt(0.5 * variance) * (z[..., 0] + 1j * z[..., 1])


def ou_step(alpha, dd: DriftDiffusion, dt: float, rng: np.random.Generator):
    """Exact Ornstein-Uhlenbeck update ``alpha*exp(-A dt) + xi``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    alpha = np.asarray(alpha, dtype=complex)
    xi = complex_normal(rng, alpha.shape, ou_variance(dd, dt)) if dd.Q > 0 else 0.0
    out = alpha * np.exp(-dd.A * dt) + xi
    return complex(out) if out.ndim == 0 else out


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for trajectory ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


@dataclass
class Moments:
    """Mergeable sums of first and second field moments.

    All arrays share one shape (typically checkpoints x cells).
    """

    count: int
    s1: np.ndarray
    s_re2: np.ndarray
    s_im2: np.ndarray
    s2: np.ndarray
    s4: np.ndarray

    @classmethod
    def empty(cls, shape) -> "Moments":
        z = lambda dt=float: np.zeros(shape, dtype=dt)  # noqa: E731
        return cls(0, z(complex), z(), z(), z(), z())

    @classmethod
    def of(cls, samples: np.ndarray) -> "Moments":
        """Sums over the leading (trajectory) axis."""
        p = np.abs(samples) ** 2
        return cls(
            samples.shape[0],
            samples.sum(axis=0),
            (samples.real**2).sum(axis=0),
            (samples.imag**2).sum(axis=0),
            p.sum(axis=0),
            (p**2).sum(axis=0),
        )

    def merge(self, other: "Moments") -> "Moments":
        return Moments(
            self.count + other.count,
            self.s1 + other.s1,
            self.s_re2 + other.s_re2,
            self.s_im2 + other.s_im2,
            self.s2 + other.s2,
            self.s4 + other.s4,
        )

    @property
    def mean(self) -> np.ndarray:
        return self.s1 / self.count

    @property
    def power(self) -> np.ndarray:
        return self.s2 / self.count

    def _sem(self, sq, mean):
        n = self.count
        var = np.maximum(sq / n - mean**2, 0.0) * n / max(n - 1, 1)
        return np.sqrt(var / n)

    @property
    def mean_sem(self) -> np.ndarray:
        """Standard errors of ``Re<alpha>`` and ``Im<alpha>`` packed as a complex number."""
        m = self.mean
        return self._sem(self.s_re2, m.real) + 1j * self._sem(self.s_im2, m.imag)

    @property
    def power_sem(self) -> np.ndarray:
        return self._sem(self.s4, self.power)


@dataclass
class TrajectoryEnsemble:
    """Moments of ``M`` trajectories at the checkpoints ``z``.

    ``moments`` arrays are shaped (len(z), cells); ``final`` keeps the last
    field of every trajectory when requested.
    """

    M: int
    seed: int
    z: np.ndarray
    moments: Moments
    final: np.ndarray | None = field(default=None, repr=False)

    def rows(self, cell: int | None = None):
        """CSV rows ``(z, Re<a>, Im<a>, <|a|^2>, sigma)``; cells pooled by mean if ``cell`` is None.

        ``sigma`` is the standard error of ``<|a|^2>``.
        """
        m = self.moments
        sel = (lambda x: x.mean(axis=1)) if cell is None else (lambda x: x[:, cell])
        mean, power = sel(m.mean), sel(m.power)
        sem = m.power_sem[:, cell] if cell is not None else np.sqrt(np.mean(m.power_sem**2, axis=1) / m.power.shape[1])
        return [(float(z), float(mu.real), float(mu.imag), float(p), float(s)) for z, mu, p, s in zip(self.z, mean, power, sem)]


def _boundary_array(boundary, grid: ModeGrid) -> np.ndarray:
    if isinstance(boundary, LocalField):
        if boundary.grid != grid:
            raise GridError("boundary field lives on a different grid")
        return boundary.amps[None, :]
    b = np.asarray(boundary, dtype=complex)
    if b.ndim == 1:
        b = b[None, :]
    if b.ndim != 2:
        raise GridError(f"boundary must be 1D (time bins) or 2D (trajectories x time bins), got {b.shape}")
    return b


def propagate_1d(
    boundary,
    dd: DriftDiffusion,
    z: float,
    grid: ModeGrid,
    M: int,
    seed: int,
    checkpoints: int = 10,
    dz: float | None = None,
    threads: int = 1,
    keep_final: bool = False,
) -> TrajectoryEnsemble:
    """Propagate boundary time series through a linear medium of length ``z``.

    In the traveling frame ``t' = t - z/c`` every time bin (width ``a/c``) is a
    characteristic obeying ``c d(alpha)/dz = -A alpha + f``; each is advanced by
    exact OU steps of length ``dz`` (default one cell, ``a``) with independent
    noise per bin, per step and per trajectory.

    ``boundary`` is a :class:`LocalField`, a 1D array of time-bin amplitudes
    shared by all trajectories, or an ``(M, bins)`` array.
    """
    if z < 0:
        raise ValueError(f"z must be non-negative, got {z}")
    if M < 1 or checkpoints < 1:
        raise ValueError("M and checkpoints must be positive")
    b = _boundary_array(boundary, grid)
    if b.shape[0] not in (1, M):
        raise GridError(f"boundary has {b.shape[0]} rows, expected 1 or M={M}")
    dz = grid.a if dz is None else float(dz)
    if not dz > 0:
        raise ValueError(f"dz must be positive, got {dz}")
    zs = np.linspace(0.0, z, checkpoints + 1)
    # whole number of dz sub-steps per checkpoint interval, last one shortened
    seg = z / checkpoints
    nsub = max(1, math.ceil(seg / dz - 1e-9))
    h = seg / nsub
    decay = np.exp(-dd.A * h / grid.c)
    var = ou_variance(dd, h / grid.c) if dd.Q > 0 else 0.0
    bins = b.shape[1]

    def run_chunk(start: int):
        stop = min(start + CHUNK, M)
        n = stop - start
        alpha = np.array(np.broadcast_to(b if b.shape[0] == 1 else b[start:stop], (n, bins)))
        if var > 0:
            noise = np.stack([
                complex_normal(trajectory_rng(seed, i), (checkpoints * nsub, bins), var)
                for i in range(start, stop)
            ])
        out = np.empty((n, checkpoints + 1, bins), dtype=complex)
        out[:, 0] = alpha
        step = 0
        for c in range(1, checkpoints + 1):
            for _ in range(nsub):
                alpha = alpha * decay
                if var > 0:
                    alpha = alpha + noise[:, step]
                step += 1
            out[:, c] = alpha
        return Moments.of(out), (alpha if keep_final else None)

    starts = range(0, M, CHUNK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_chunk, starts))
    else:
        results = [run_chunk(s) for s in starts]
    total = Moments.empty((checkpoints + 1, bins))
    for mom, _ in results:
        total = total.merge(mom)
    final = np.concatenate([f for _, f in results]) if keep_final else None
    return TrajectoryEnsemble(M=M, seed=seed, z=zs, moments=total, final=final)


def moment_oracle(dd: DriftDiffusion, t, mean0: complex, power0: float, rtol: float = 1e-10):
    """Integrate the closed moment equations along ``t`` (use ``z/c`` for distance).

    ``d<a>/dt = -A <a>``, ``d<|a|^2>/dt = -2 Re(A) <|a|^2> + 2Q``.
    Returns ``(mean, power)`` arrays sampled at ``t``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    A = dd.A

    def rhs(_, y):
        m = complex(y[0], y[1])
        dm = -A * m
        return [dm.real, dm.imag, -2.0 * A.real * y[2] + 2.0 * dd.Q]

    sol = solve_ivp(rhs, (0.0, float(t.max(initial=0.0))), [mean0.real, mean0.imag, power0],
                    method="DOP853", t_eval=np.sort(t), rtol=rtol, atol=rtol * 1e-2)
    order = np.argsort(np.argsort(t))
    y = sol.y[:, order]
    return y[0] + 1j * y[1], y[2]


def steady_power(dd: DriftDiffusion) -> float:
    """Long-time ``<|a|^2> = Q / Re(A)`` of an absorbing medium."""
    if dd.A.real <= 0:
        raise ValueError("no steady state without absorption (Re A <= 0)")
    return dd.Q / dd.A.real


def spontaneous_power(dd: DriftDiffusion, z: float, c: float = 1.0) -> float:
    """Vacuum-seeded ``<|a|^2>`` after distance ``z``: ``(Q/ReA)(1 - exp(-2 ReA z/c))``."""
    return ou_variance(dd, z / c) if z > 0 else 0.0
