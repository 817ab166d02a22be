"""Fiberwise Fourier analysis and the angular Hilbert transform."""

import numpy as np
import pytest

from geoxray import fiber as fb
from geoxray import transform as tr


def full_data(fn, n_pts=8, n_angles=64):
    ang = tr.full_angles(n_angles)
    s = (np.arange(n_pts) + 0.5) / n_pts
    vals = fn(s[:, None], ang[None, :])[None, :, :]
    return tr.FanBeamData(vals, np.zeros_like(vals, dtype=bool), ang,
                          "full", np.pi)


def influx_data():
    ang = tr.influx_angles(16)
    vals = np.zeros((1, 4, 16))
    return tr.FanBeamData(vals, np.zeros_like(vals, dtype=bool), ang,
                          "influx")


class TestFiberSpectrum:
    def test_single_mode(self):
        d = full_data(lambda s, a: np.cos(3 * a) + 0 * s)
        spec = fb.fiber_spectrum(d)
        # the grid starts at -pi, so mode k carries the phase e^{-i k pi}
        assert spec[0, 0, 3] == pytest.approx(-0.5, abs=1e-12)
        assert spec[0, 0, -3] == pytest.approx(-0.5, abs=1e-12)
        other = np.abs(spec[0, 0]).sum() - 1.0
        assert abs(other) < 1e-12

    def test_mean_is_zeroth_coefficient(self):
        d = full_data(lambda s, a: 0.7 + np.sin(a) * np.cos(2 * np.pi * s))
        spec = fb.fiber_spectrum(d)
        assert np.allclose(spec[:, :, 0].real, fb.fiber_mean(d)[:, :, 0])
        assert np.allclose(spec[:, :, 0].real, 0.7)

    def test_requires_full_convention(self):
        with pytest.raises(ValueError):
            fb.fiber_spectrum(influx_data())


class TestHilbertFiber:
    def test_rotates_modes(self):
        # H cos(k a) = sin(k a), H sin(k a) = -cos(k a) for k >= 1
        d = full_data(lambda s, a: np.cos(2 * a) + 0 * s)
        h = fb.hilbert_fiber(d)
        ref = np.sin(2 * d.angles)
        assert np.allclose(h.values[0, 0], ref, atol=1e-12)
        d2 = full_data(lambda s, a: np.sin(5 * a) + 0 * s)
        h2 = fb.hilbert_fiber(d2)
        assert np.allclose(h2.values[0, 0], -np.cos(5 * d2.angles),
                           atol=1e-12)

    def test_kills_mean(self):
        d = full_data(lambda s, a: 3.0 + 0 * s + 0 * a)
        assert np.max(np.abs(fb.hilbert_fiber(d).values)) < 1e-12

    def test_square_is_minus_complement_of_mean(self):
        # H^2 = -(Id - P0) on mean-free-and-Nyquist-free input
        d = full_data(lambda s, a: np.cos(a) * (1 + np.sin(2 * np.pi * s))
                      + 0.4 * np.sin(3 * a))
        hh = fb.hilbert_fiber(fb.hilbert_fiber(d))
        mean = fb.fiber_mean(d)
        assert np.allclose(hh.values, -(d.values - mean), atol=1e-12)

    def test_output_stays_real(self):
        r = np.random.default_rng(5)
        d = full_data(lambda s, a: 0 * s + 0 * a, n_pts=4, n_angles=32)
        d.values = r.normal(size=d.values.shape)
        h = fb.hilbert_fiber(d)
        assert h.values.dtype == np.float64

    def test_antisymmetric_pairing(self):
        # <H u, v> = -<u, H v> over the fiber grid
        r = np.random.default_rng(11)
        u = full_data(lambda s, a: 0 * s + 0 * a, n_pts=2, n_angles=64)
        v = full_data(lambda s, a: 0 * s + 0 * a, n_pts=2, n_angles=64)
        u.values = r.normal(size=u.values.shape)
        v.values = r.normal(size=v.values.shape)
        lhs = np.sum(fb.hilbert_fiber(u).values * v.values)
        rhs = -np.sum(u.values * fb.hilbert_fiber(v).values)
        assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_requires_power_of_two(self):
        ang = tr.full_angles(48)
        vals = np.zeros((1, 2, 48))
        d = tr.FanBeamData(vals, np.zeros_like(vals, dtype=bool), ang,
                           "full", np.pi)
        with pytest.raises(ValueError):
            fb.hilbert_fiber(d)

    def test_requires_full_convention(self):
        with pytest.raises(ValueError):
            fb.hilbert_fiber(influx_data())


class TestOddEvenSplit:
    def test_exact_reconstruction(self):
        r = np.random.default_rng(3)
        d = full_data(lambda s, a: 0 * s + 0 * a, n_pts=4, n_angles=32)
        d.values = r.normal(size=d.values.shape)
        odd, even = fb.odd_even_split(d)
        assert np.allclose(odd.values + even.values, d.values, atol=1e-14)

    def test_parities(self):
        r = np.random.default_rng(4)
        d = full_data(lambda s, a: 0 * s + 0 * a, n_pts=4, n_angles=32)
        d.values = r.normal(size=d.values.shape)
        odd, even = fb.odd_even_split(d)
        half = d.n_angles // 2
        assert np.allclose(np.roll(odd.values, half, axis=2), -odd.values)
        assert np.allclose(np.roll(even.values, half, axis=2), even.values)

    def test_pure_parity_inputs(self):
        d_odd = full_data(lambda s, a: np.sin(a) + np.cos(3 * a))
        odd, even = fb.odd_even_split(d_odd)
        assert np.allclose(even.values, 0.0, atol=1e-14)
        d_even = full_data(lambda s, a: np.cos(2 * a) + 0.3)
        odd2, even2 = fb.odd_even_split(d_even)
        assert np.allclose(odd2.values, 0.0, atol=1e-14)

    def test_odd_extension_output_is_odd_part_only(self):
        di = tr.FanBeamData(
            np.random.default_rng(9).normal(size=(1, 8, 32)),
            np.zeros((1, 8, 32), dtype=bool), tr.influx_angles(32), "influx")
        ext = tr.odd_extension(di, n_full=64)
        odd, even = fb.odd_even_split(ext)
        assert np.max(np.abs(even.values)) < 1e-13

    def test_requires_full_convention(self):
        with pytest.raises(ValueError):
            fb.odd_even_split(influx_data())
