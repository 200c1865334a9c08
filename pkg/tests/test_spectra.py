import math

import numpy as np
import pytest

from quasilight.grid import ModeGrid
from quasilight.langevin import DriftDiffusion
from quasilight.parametric import ConjugatePair, ParametricCoupling, closed_form
from quasilight.spectra import (
    DetectionConfig,
    PhysicalityError,
    amplified_photon_numbers,
    difference_spectrum,
    ou_series,
    output_noise,
    pair_spectrum,
    photocurrent_spectrum,
    segment_for_resolution,
    squeezed_input,
    suppression_factor,
)

from .oracles import lorentzian_intensity_spectrum

DNU = 10.0


class TestDetectionConfig:
    @pytest.mark.parametrize("q", [-0.1, 1.5])
    def test_efficiency_range(self, q):
        with pytest.raises(ValueError):
            DetectionConfig(q, DNU)

    def test_eta_exact(self):
        assert DetectionConfig(0.37, 3.1).eta == 0.37 * 3.1

    def test_from_grid(self):
        cfg = DetectionConfig.from_grid(0.5, ModeGrid(L=8.0, a=0.5, c=2.0), omega_max=3.0, points=4)
        assert cfg.dnu == 4.0
        assert np.array_equal(cfg.omega, [0.0, 1.0, 2.0, 3.0])


class TestPhotocurrent:
    def test_shot_level(self):
        cfg = DetectionConfig(0.8, DNU)
        i2 = photocurrent_spectrum(np.zeros(3), 2.0, 3.0, cfg)
        assert np.all(i2 == cfg.eta * 5.0)

    def test_full_suppression(self):
        n1, n2 = 2.0, 3.0
        i2 = photocurrent_spectrum(np.full(4, -(n1 + n2) / DNU), n1, n2, DetectionConfig(1.0, DNU))
        assert np.all(i2 == 0.0)

    def test_no_detection(self):
        assert np.all(photocurrent_spectrum([0.1, -0.2], 1.0, 2.0, DetectionConfig(0.0, DNU)) == 0.0)

    def test_physicality(self):
        with pytest.raises(PhysicalityError) as err:
            photocurrent_spectrum([-0.6], 2.0, 3.0, DetectionConfig(1.0, DNU))
        assert err.value.margin == pytest.approx(-0.1)


class TestOutputNoise:
    @pytest.mark.parametrize("n", [(1.0, 0.5, 7.0, 6.5), (0.0, 0.0, 3.2, 3.2), (2.0, 1.0, 2.0, 1.0)])
    def test_ideal_detector(self, n):
        cfg = DetectionConfig(1.0, DNU)
        i2_in = np.array([0.3, 1.7, 5.0])
        assert np.array_equal(output_noise(i2_in, *n, cfg), i2_in)

    @pytest.mark.parametrize("q", [0.2, 0.5, 0.9])
    def test_squeezing_preserved_under_gain(self, q):
        cfg = DetectionConfig(q, DNU)
        n10, n20 = 1.5, 0.5
        factors = []
        for gz in (0.0, 0.5, 1.0, 2.0):
            n1, n2 = amplified_photon_numbers(n10, n20, gz)
            out = output_noise(squeezed_input(n10, n20, cfg), n10, n20, n1, n2, cfg)
            assert out == pytest.approx(DNU * q * (n1 + n2) * (1 - q), rel=1e-12)
            factors.append(suppression_factor(out, n1, n2, cfg))
        assert np.ptp(factors) < 1e-12
        assert factors[0] == pytest.approx(1 - q, rel=1e-12)

    @pytest.mark.parametrize("q", [0.3, 0.75])
    def test_transparent_medium(self, q):
        cfg = DetectionConfig(q, DNU)
        i2_in = np.array([0.4, 2.0])
        assert np.allclose(output_noise(i2_in, 1.0, 2.0, 1.0, 2.0, cfg), i2_in, rtol=0, atol=1e-15)

    def test_vacuum_input(self):
        cfg = DetectionConfig(1.0, DNU)
        n1, n2 = amplified_photon_numbers(0.0, 0.0, 1.3)
        i2_in = photocurrent_spectrum(0.0, 0.0, 0.0, cfg)
        assert output_noise(i2_in, 0.0, 0.0, n1, n2, cfg) == 0.0

    def test_amplified_numbers_keep_difference(self):
        n1, n2 = amplified_photon_numbers(3.0, 1.0, 0.8)
        assert n1 - n2 == pytest.approx(2.0, rel=1e-13)


class TestDifferenceSpectrum:
    def test_constant_signal(self):
        cfg = DetectionConfig(1.0, DNU)
        I = np.full((3, 512), 2.0)
        res = difference_spectrum(I, 0.1, cfg, 3.0, 1.0, nperseg=128)
        assert np.all(res.K == 0.0)
        assert np.all(res.K_N == -(4.0) / DNU)
        assert res.stationary

    def test_identity_bitwise(self):
        cfg = DetectionConfig(0.7, DNU)
        a = ou_series(DriftDiffusion(0.5, 0.5), 0.1, 1024, 4, seed=0)
        res = difference_spectrum(np.abs(a) ** 2, 0.1, cfg, 1.0, 0.0, nperseg=256)
        assert np.array_equal(res.i2, cfg.eta * (res.n1 + res.n2) + cfg.eta**2 * res.K_N)

    def test_coherent_seeds_normal_order(self):
        # point-mass P per trajectory: random seeds, each with constant I
        rng = np.random.default_rng(2)
        M, T, nper = 200, 256, 64
        s1 = rng.normal(size=(M, 1)) + 1j * rng.normal(size=(M, 1))
        s2 = 0.5 * (rng.normal(size=(M, 1)) + 1j * rng.normal(size=(M, 1)))
        a1, a2 = np.repeat(s1, T, axis=1), np.repeat(s2, T, axis=1)
        res = pair_spectrum(a1, a2, 0.05, DetectionConfig(1.0, DNU), ordering="normal", nperseg=nper)
        # seed-to-seed spread is a delta at Omega = 0; the Hann window spreads it over one bin
        bin_width = 2 * math.pi / (nper * 0.05)
        off = np.abs(res.omega) > 1.5 * bin_width
        assert np.all(np.abs(res.K_N[off]) <= 3 * res.K_sem[off] + 1e-12 * res.K_N.max())
        assert np.allclose(res.K[off], (res.n1 + res.n2) / DNU)

    def test_rejects_bad_ordering(self):
        with pytest.raises(ValueError):
            difference_spectrum(np.zeros(16), 1.0, DetectionConfig(1.0, DNU), 0.0, 0.0, ordering="weyl")

    def test_flags_drift(self):
        t = np.arange(2048)
        rng = np.random.default_rng(0)
        I = 1.0 + 1e-3 * t + 0.1 * rng.normal(size=(20, t.size))
        res = difference_spectrum(I, 1.0, DetectionConfig(1.0, DNU), 2.0, 0.0)
        assert not res.stationary

    def test_ou_lorentzian(self):
        rate, dt = 0.5, 0.1
        dd = DriftDiffusion(rate + 0.3j, 0.5)
        nbar = dd.Q / rate
        nperseg = segment_for_resolution(rate / 10, dt)
        assert 2 * math.pi / (nperseg * dt) <= rate / 10
        omega = np.array([0.0, 0.5, 1.0, 2.0, 4.0, 8.0])
        cfg = DetectionConfig(1.0, DNU, omega=omega)
        a = ou_series(dd, dt, 16384, 60, seed=1)
        res = difference_spectrum(np.abs(a) ** 2, dt, cfg, nbar, 0.0, nperseg=nperseg)
        expect = lorentzian_intensity_spectrum(nbar, rate, omega)
        # six frequencies: 4 sigma family-wise
        assert np.all(np.abs(res.K - expect) <= 4 * res.K_sem)

    def test_conservation_through_gain(self):
        # pointwise-in-retarded-time amplification preserves the spectrum of I,
        # so K_N + (n1 + n2)/dnu is unchanged
        dt = 0.1
        a1 = ou_series(DriftDiffusion(0.4, 0.4), dt, 2048, 20, seed=3)
        a2 = 0.5 * ou_series(DriftDiffusion(0.7, 0.7), dt, 2048, 20, seed=4)
        cfg = DetectionConfig(0.9, DNU)
        p0 = ConjugatePair(a1, a2)
        pz = closed_form(p0, ParametricCoupling(0.6, phi=0.2), 1.5)
        s0 = pair_spectrum(p0.a1, p0.a2, dt, cfg, nperseg=256)
        sz = pair_spectrum(pz.a1, pz.a2, dt, cfg, nperseg=256)
        lhs = sz.K_N + (sz.n1 + sz.n2) / DNU
        rhs = s0.K_N + (s0.n1 + s0.n2) / DNU
        assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-12 * np.max(rhs))
        assert sz.n1 + sz.n2 > 2 * (s0.n1 + s0.n2)

    def test_segment_for_resolution(self):
        n = segment_for_resolution(0.05, 0.1)
        assert n & (n - 1) == 0 and 2 * math.pi / (n * 0.1) <= 0.05 < 2 * math.pi / (n / 2 * 0.1)
