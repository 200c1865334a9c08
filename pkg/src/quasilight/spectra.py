"""Difference-photocurrent noise spectra for a pair of conjugated modes.

Conventions: ``K(Omega) = int <dI(t) dI(t + tau)> exp(i Omega tau) dtau`` with
``dI = I - <I>``; the detector rate is ``eta = q * dnu`` and the photocurrent
spectrum is ``i2 = eta (n1 + n2) + eta^2 K_N``.  Shot noise enters only
through this analytic term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .langevin import DriftDiffusion, complex_normal, ou_variance, steady_power, trajectory_rng


class PhysicalityError(ValueError):
    """Normally ordered spectrum below the vacuum bound ``-(n1 + n2)/dnu``."""

    def __init__(self, message: str, margin: float):
        super().__init__(message)
        self.margin = margin


@dataclass(frozen=True)
class DetectionConfig:
    """Detector efficiency ``q``, scheme bandwidth ``dnu`` and analysis frequencies ``omega``."""

    q: float
    dnu: float
    omega: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"quantum efficiency must lie in [0, 1], got {self.q}")
        if not self.dnu > 0:
            raise ValueError(f"bandwidth must be positive, got {self.dnu}")
        if self.omega is not None:
            object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))

    @property
    def eta(self) -> float:
        return self.q * self.dnu

    @classmethod
    def from_grid(cls, q: float, grid, omega_max: float | None = None, points: int = 0) -> "DetectionConfig":
        omega = np.linspace(0.0, omega_max, points) if omega_max is not None and points > 0 else None
        return cls(q=q, dnu=grid.bandwidth, omega=omega)


@dataclass(frozen=True)
class SpectrumResult:
    omega: np.ndarray
    K: np.ndarray
    K_N: np.ndarray
    i2: np.ndarray
    n1: float
    n2: float
    K_sem: np.ndarray | None = None
    stationary: bool = True

    def rows(self):
        return [(float(w), float(k), float(kn), float(i)) for w, k, kn, i in zip(self.omega, self.K, self.K_N, self.i2)]


def photocurrent_spectrum(K_N, n1: float, n2: float, cfg: DetectionConfig, tol: float = 1e-12):
    """``eta (n1 + n2) + eta^2 K_N``, after checking the vacuum bound on ``K_N``."""
    K_N = np.asarray(K_N, dtype=float)
    floor = -(n1 + n2) / cfg.dnu
    margin = float(np.min(K_N - floor)) if K_N.size else 0.0
    if margin < -tol * max(1.0, abs(floor)):
        raise PhysicalityError(f"K_N falls below -(n1+n2)/dnu = {floor:.6g} by {-margin:.3g}", margin)
    eta = cfg.eta
    return eta * (n1 + n2) + eta**2 * K_N


def output_noise(i2_in, n10: float, n20: float, n1: float, n2: float, cfg: DetectionConfig):
    """Output photocurrent spectrum of a conjugated pair after propagation.

    ``dnu (n1 + n2) q (1 - q) + dnu (n10 + n20) q (q - 1) + i2_in``
    """
    q, dnu = cfg.q, cfg.dnu
    return dnu * (n1 + n2) * q * (1 - q) + dnu * (n10 + n20) * q * (q - 1) + np.asarray(i2_in, dtype=float)


def squeezed_input(n10: float, n20: float, cfg: DetectionConfig) -> float:
    """Input spectrum with shot noise suppressed by the factor ``1 - q``."""
    return cfg.dnu * cfg.q * (n10 + n20) * (1 - cfg.q)


def suppression_factor(i2, n1: float, n2: float, cfg: DetectionConfig):
    """Photocurrent noise relative to the shot level ``eta (n1 + n2)``."""
    return np.asarray(i2, dtype=float) / (cfg.eta * (n1 + n2))


def amplified_photon_numbers(n10: float, n20: float, gz: float):
    """Mean photon numbers after degenerate-phase-matched parametric gain ``gz``.

    Includes the spontaneous contribution ``sinh^2(gz)`` of the quantum
    amplifier; their difference stays ``n10 - n20``.
    """
    ch2, sh2 = math.cosh(gz) ** 2, math.sinh(gz) ** 2
    return n10 * ch2 + (n20 + 1) * sh2, n20 * ch2 + (n10 + 1) * sh2


def _drift_z(I: np.ndarray) -> float:
    """z-score of the difference between first- and second-half means."""
    half = I.shape[-1] // 2
    a, b = I[..., :half].mean(axis=-1), I[..., half:2 * half].mean(axis=-1)
    d = b - a
    if d.size < 2:
        return 0.0
    se = d.std(ddof=1) / math.sqrt(d.size)
    if se == 0:
        return 0.0 if abs(d.mean()) < 1e-12 * (1 + abs(a.mean())) else math.inf
    return float(abs(d.mean()) / se)


def difference_spectrum(
    I,
    dt: float,
    cfg: DetectionConfig,
    n1: float,
    n2: float,
    nperseg: int | None = None,
    ordering: str = "symmetric",
    drift_threshold: float = 4.0,
) -> SpectrumResult:
    """Spectrum of the photon-number difference from an ensemble of time series.

    ``I`` has shape ``(M, T)`` (or ``(T,)``), sampled every ``dt``.  Each
    trajectory gets a Hann-windowed averaged periodogram of ``I - <I>`` (grand
    mean over time and ensemble, so the estimate is unbiased away from
    ``Omega = 0``); the result is their mean, with its standard error in
    ``K_sem``.  ``stationary`` is False when first- and second-half means
    differ by more than ``drift_threshold`` standard errors.

    ``ordering="symmetric"`` treats the sampled spectrum as ``K`` and sets
    ``K_N = K - (n1 + n2)/dnu``; ``ordering="normal"`` treats samples of the
    P representation as already normally ordered, so ``K_N`` is the sampled
    spectrum and ``K = K_N + (n1 + n2)/dnu``.
    """
    if ordering not in ("symmetric", "normal"):
        raise ValueError(f"ordering must be 'symmetric' or 'normal', got {ordering!r}")
    I = np.atleast_2d(np.asarray(I, dtype=float))
    M, T = I.shape
    if nperseg is None:
        nperseg = min(T, 256)
    if nperseg > T:
        raise ValueError(f"segment length {nperseg} exceeds series length {T}")
    dI = I - I.mean()
    f, S = signal.welch(dI, fs=1.0 / dt, window="hann", nperseg=nperseg, detrend=False,
                        return_onesided=False, scaling="density", axis=-1)
    order = np.argsort(f)
    omega_est = 2 * math.pi * f[order]
    S = S[:, order]
    sampled = S.mean(axis=0)
    sem = S.std(axis=0, ddof=1) / math.sqrt(M) if M > 1 else np.full_like(sampled, np.nan)
    omega = omega_est if cfg.omega is None else cfg.omega
    if cfg.omega is not None:
        sampled = np.interp(omega, omega_est, sampled)
        sem = np.interp(omega, omega_est, sem)
    shot = (n1 + n2) / cfg.dnu
    if ordering == "symmetric":
        K, K_N = sampled, sampled - shot
    else:
        K, K_N = sampled + shot, sampled
    i2 = photocurrent_spectrum(K_N, n1, n2, cfg)
    stationary = _drift_z(I) <= drift_threshold
    return SpectrumResult(omega, K, K_N, i2, float(n1), float(n2), sem, stationary)


def pair_spectrum(a1, a2, dt: float, cfg: DetectionConfig, **kw) -> SpectrumResult:
    """:func:`difference_spectrum` of ``|a1|^2 - |a2|^2`` with ``n1``, ``n2`` taken from the series."""
    n1, n2 = np.abs(np.asarray(a1)) ** 2, np.abs(np.asarray(a2)) ** 2
    return difference_spectrum(n1 - n2, dt, cfg, float(n1.mean()), float(n2.mean()), **kw)


def ou_series(dd: DriftDiffusion, dt: float, T: int, M: int, seed: int, start: int = 0) -> np.ndarray:
    """``M`` stationary complex OU series of length ``T``.

    Series ``i`` uses the RNG stream ``start + i`` of ``seed``.

    The exact one-step recursion ``a[t+1] = exp(-A dt) a[t] + xi[t]`` is run
    as a first-order linear filter.
    """
    if not dd.A.real > 0:
        raise ValueError("a stationary series needs Re A > 0")
    decay = np.exp(-dd.A * dt)
    var = ou_variance(dd, dt)
    out = np.empty((M, T), complex)
    for i in range(M):
        rng = trajectory_rng(seed, start + i)
        a0 = complex_normal(rng, (), steady_power(dd))
        xi = complex_normal(rng, T - 1, var)
        drive = np.concatenate(([a0], xi))
        out[i] = signal.lfilter([1.0], [1.0, -decay], drive)
    return out


def segment_for_resolution(resolution: float, dt: float) -> int:
    """Smallest power-of-two segment with ``2 pi / (nperseg dt) <= resolution``."""
    n = int(math.ceil(2 * math.pi / (resolution * dt)))
    return 1 << max(n - 1, 1).bit_length()
