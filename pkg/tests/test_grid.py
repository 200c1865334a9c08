import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasilight.grid import (
    CollectiveField,
    GridError,
    LocalField,
    ModeGrid,
    envelope_to_full,
    full_to_envelope,
    gram_matrix,
    scaled_delta,
    to_collective,
    to_local,
    transform_coefficients,
    wannier_value,
)


def direct_wannier(grid, n, x):
    """Term-by-term band sum, no closed form."""
    l = n * grid.a
    total = 0j
    for k in grid.k:
        total += np.exp(-1j * k * l) * np.exp(1j * k * x) / math.sqrt(grid.L)
    return total / math.sqrt(grid.N)


def random_amps(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


class TestModeGrid:
    def test_derived_quantities(self):
        g = ModeGrid(L=8.0, a=1.0, m=2 * math.pi, c=2.0)
        assert g.N == 8
        assert g.bandwidth == 2.0
        assert g.omega_m == pytest.approx(4 * math.pi)
        assert np.allclose(np.diff(g.k), g.dk)
        assert np.all(g.k >= g.m - math.pi / g.a)
        assert np.all(g.k < g.m + math.pi / g.a)
        assert len(g.k) == g.N

    @pytest.mark.parametrize("L, a", [(7.5, 1.0), (7.0, 1.0), (1.0, 1.0), (-8.0, 1.0)])
    def test_rejects_bad_geometry(self, L, a):
        with pytest.raises(GridError):
            ModeGrid(L=L, a=a)


class TestWannier:
    def test_peak_value(self):
        g = ModeGrid(L=8.0, a=1.0, m=2 * math.pi)
        for n in range(g.N):
            v = wannier_value(g, n, n * g.a)
            assert abs(v) == pytest.approx(1.0 / math.sqrt(g.a), rel=1e-14)

    def test_matches_direct_sum(self):
        g = ModeGrid(L=8.0, a=1.0, m=2 * math.pi)
        x = np.linspace(0, g.L, 97, endpoint=False)
        for n in (0, 3, 7):
            assert np.allclose(wannier_value(g, n, x), direct_wannier(g, n, x), atol=1e-13)

    def test_antipode_smaller_than_peak(self):
        g = ModeGrid(L=8.0, a=1.0, m=2 * math.pi)
        l = 2 * g.a
        far = direct_wannier(g, 2, l + g.L / 2)
        assert abs(wannier_value(g, 2, l + g.L / 2)) <= abs(wannier_value(g, 2, l))
        assert wannier_value(g, 2, l + g.L / 2) == pytest.approx(far, abs=1e-13)

    @pytest.mark.parametrize("n", [-1, 8, 2.0, True])
    def test_invalid_cell(self, n):
        g = ModeGrid(L=8.0, a=1.0)
        with pytest.raises(GridError):
            wannier_value(g, n, 0.5)

    def test_position_out_of_range(self):
        g = ModeGrid(L=8.0, a=1.0)
        with pytest.raises(GridError):
            wannier_value(g, 0, 8.0)

    @pytest.mark.parametrize("N", [8, 64])
    def test_orthonormal(self, N):
        g = ModeGrid(L=float(N), a=1.0, m=1.3)
        G = gram_matrix(g)
        assert np.max(np.abs(G - np.eye(N))) < 1e-12

    def test_band_completeness_kernel(self):
        # sum_l w(x-l) conj(w(x'-l)) equals the band projector (1/L) sum_k exp(ik(x-x'))
        g = ModeGrid(L=16.0, a=2.0, m=0.7)
        x, xp = 3.3, 11.9
        lhs = sum(wannier_value(g, n, x) * np.conj(wannier_value(g, n, xp)) for n in range(g.N))
        rhs = np.sum(np.exp(1j * g.k * (x - xp))) / g.L
        assert lhs == pytest.approx(rhs, abs=1e-13)


class TestTransforms:
    def test_two_by_two_moduli(self):
        C = transform_coefficients(ModeGrid(L=2.0, a=1.0, m=0.4))
        assert C.shape == (2, 2)
        assert np.allclose(np.abs(C), 1 / math.sqrt(2), atol=1e-15)

    def test_first_row(self):
        C = transform_coefficients(ModeGrid(L=4.0, a=1.0, m=3.0))
        assert np.allclose(C[0], 0.5, atol=1e-15)

    @pytest.mark.parametrize("N", [2, 8, 64, 256])
    def test_unitary(self, N):
        C = transform_coefficients(ModeGrid(L=float(N), a=1.0, m=5.0))
        assert np.max(np.abs(C @ C.conj().T - np.eye(N))) < 1e-12
        assert np.max(np.abs(C.conj().T @ C - np.eye(N))) < 1e-12

    @pytest.mark.parametrize("rep", ["full", "envelope"])
    def test_round_trip(self, rep):
        rng = np.random.default_rng(1)
        g = ModeGrid(L=32.0, a=0.5, m=9.0)
        f = CollectiveField(g, random_amps(rng, g.N))
        back = to_collective(to_local(f, rep, t=1.7))
        assert np.max(np.abs(back.amps - f.amps)) < 1e-12

    def test_single_mode(self):
        g = ModeGrid(L=16.0, a=1.0, m=2.0)
        j0 = 5
        amps = np.zeros(g.N, complex)
        amps[j0] = 1.0
        loc = to_local(CollectiveField(g, amps))
        assert np.allclose(np.abs(loc.amps), 1 / math.sqrt(g.N))
        assert np.allclose(loc.amps, np.exp(1j * g.k[j0] * g.positions) / math.sqrt(g.N))

    def test_envelope_carrier(self):
        rng = np.random.default_rng(2)
        g = ModeGrid(L=16.0, a=1.0, m=2.0)
        t = 0.9
        f = CollectiveField(g, random_amps(rng, g.N))
        env = to_local(f, "envelope", t)
        # interaction-picture amplitudes evolve to Heisenberg ones with exp(-i w_k t)
        heis = to_local(CollectiveField(g, f.amps * np.exp(-1j * g.omega_k * t)))
        assert np.allclose(envelope_to_full(env).amps, heis.amps, atol=1e-12)
        again = full_to_envelope(heis, t)
        assert np.allclose(again.amps, env.amps, atol=1e-12)

    def test_grid_mismatch(self):
        g = ModeGrid(L=8.0, a=1.0)
        with pytest.raises(GridError):
            LocalField(g, np.zeros(4))
        with pytest.raises(GridError):
            LocalField(g, np.zeros(8), representation="mixed")

    @settings(max_examples=50, deadline=None)
    @given(
        st.sampled_from([2, 4, 8, 16, 32]),
        st.floats(-20, 20),
        st.integers(0, 2**32 - 1),
    )
    def test_norm_preserved(self, N, m, seed):
        rng = np.random.default_rng(seed)
        g = ModeGrid(L=float(N), a=1.0, m=m)
        v = random_amps(rng, N)
        C = transform_coefficients(g)
        assert np.linalg.norm(C @ v) == pytest.approx(np.linalg.norm(v), rel=1e-12)
        f = CollectiveField(g, v)
        assert to_local(f).power == pytest.approx(f.power, rel=1e-12)


class TestScaledDelta:
    def test_peak(self):
        g = ModeGrid(L=8.0, a=0.25, c=3.0)
        assert scaled_delta(g, 0.0) == g.bandwidth

    def test_first_zero(self):
        g = ModeGrid(L=8.0, a=1.0)
        assert abs(scaled_delta(g, 1.0 / g.bandwidth)) < 1e-15

    def test_direct_band_sum(self):
        # Symmetric Dirichlet sum over half-integer offsets (j + 1/2) dk; the
        # integer band carries an extra phase exp(-i pi tau dnu / N) that this removes.
        g = ModeGrid(L=8.0, a=1.0, m=4.0)
        tau = 0.5 / g.bandwidth
        offsets = (g.band_index + 0.5) * g.dk
        oracle = np.sum(np.exp(1j * g.c * tau * offsets)) / g.N * g.bandwidth
        assert abs(oracle.imag) < 1e-14
        assert scaled_delta(g, tau) == pytest.approx(oracle.real, rel=1e-13)
        raw = np.sum(np.exp(1j * g.c * tau * (g.k - g.m))) / g.N * g.bandwidth
        assert abs(raw) == pytest.approx(scaled_delta(g, tau), rel=1e-13)

    def test_even(self):
        g = ModeGrid(L=16.0, a=1.0)
        tau = np.linspace(0.01, 30, 311)
        assert np.allclose(scaled_delta(g, tau), scaled_delta(g, -tau), atol=1e-14)

    def test_period(self):
        # even N: antiperiodic over N/dnu, periodic over 2N/dnu
        g = ModeGrid(L=16.0, a=1.0)
        T = g.N / g.bandwidth
        tau = np.linspace(-3, 3, 121)
        assert np.allclose(scaled_delta(g, tau + T), -scaled_delta(g, tau), atol=1e-12)
        assert np.allclose(scaled_delta(g, tau + 2 * T), scaled_delta(g, tau), atol=1e-12)

    def test_lattice_poles(self):
        g = ModeGrid(L=8.0, a=1.0)
        T = g.N / g.bandwidth
        assert scaled_delta(g, T) == pytest.approx(-g.bandwidth)
        assert scaled_delta(g, T * (1 + 1e-15)) == pytest.approx(-g.bandwidth, rel=1e-9)

    @pytest.mark.parametrize("N", [8, 64, 256])
    def test_unit_weight(self, N):
        g = ModeGrid(L=float(N), a=1.0, c=2.0)
        dtau = 1.0 / g.bandwidth
        s = np.sum(scaled_delta(g, np.arange(N) * dtau)) * dtau
        assert s == pytest.approx(1.0, abs=1e-12)
