import numpy as np
import pytest

from fhnlab.collocation import GridMap, fourier_diff_matrices, trig_interp


def test_diff_matrices_on_trig_polynomials():
    n = 64
    d1, d2 = fourier_diff_matrices(n)
    s = 2 * np.pi * np.arange(n) / n
    f = np.exp(np.sin(3 * s))
    fp = 3 * np.cos(3 * s) * f
    fpp = (9 * np.cos(3 * s) ** 2 - 9 * np.sin(3 * s)) * f
    assert np.max(np.abs(d1 @ f - fp)) < 1e-8
    assert np.max(np.abs(d2 @ f - fpp)) < 1e-7


def test_diff_matrices_require_even_size():
    with pytest.raises(ValueError):
        fourier_diff_matrices(33)


def test_uniform_map():
    gm = GridMap.uniform(32)
    assert gm.is_uniform
    assert np.allclose(gm.weights, 2 * np.pi / 32)
    assert np.allclose(gm.theta, gm.sigma)


class TestStretchedMap:
    def test_round_trip_and_weights(self):
        gm = GridMap.stretched(256, [(0.0, 0.02, 0.3), (np.pi, 0.05, 0.2)])
        assert np.max(np.abs(gm.sigma_of_theta(gm.theta) - gm.sigma)) < 1e-12
        assert abs(gm.weights.sum() - 2 * np.pi) < 1e-9
        assert np.all(np.diff(gm.theta) > 0.0)

    def test_sharp_feature_resolution(self):
        gm = GridMap.stretched(256, [(0.0, 0.05, 0.3), (np.pi, 0.05, 0.3)])
        d1, _ = gm.diff_matrices()
        th = gm.theta
        w = 0.05
        h = np.tanh(np.sin(th) / w)
        hp = np.cos(th) / w * (1.0 - np.tanh(np.sin(th) / w) ** 2)
        rel = np.max(np.abs(d1 @ h - hp)) / np.max(np.abs(hp))
        assert rel < 1e-9
        # the same feature on a uniform grid of equal size is far less accurate
        gu = GridMap.uniform(256)
        d1u, _ = gu.diff_matrices()
        hu = np.tanh(np.sin(gu.theta) / w)
        hpu = np.cos(gu.theta) / w * (1.0 - np.tanh(np.sin(gu.theta) / w) ** 2)
        rel_u = np.max(np.abs(d1u @ hu - hpu)) / np.max(np.abs(hpu))
        assert rel_u > 1e-5

    def test_smooth_function_derivatives(self):
        gm = GridMap.stretched(128, [(1.0, 0.1, 0.25)])
        d1, d2 = gm.diff_matrices()
        th = gm.theta
        g = np.exp(np.sin(th - 0.3))
        gp = np.cos(th - 0.3) * g
        gpp = (np.cos(th - 0.3) ** 2 - np.sin(th - 0.3)) * g
        assert np.max(np.abs(d1 @ g - gp)) < 1e-7
        assert np.max(np.abs(d2 @ g - gpp)) < 1e-5

    def test_serialization_round_trip(self):
        gm = GridMap.stretched(64, [(0.5, 0.08, 0.2)])
        gm2 = GridMap.from_dict(gm.to_dict())
        assert np.max(np.abs(gm.theta - gm2.theta)) < 1e-12
        assert np.max(np.abs(gm.mtilde - gm2.mtilde)) < 1e-12

    def test_fraction_budget(self):
        with pytest.raises(ValueError):
            GridMap.stretched(64, [(0.0, 0.1, 0.5), (1.0, 0.1, 0.45)])


def test_trig_interp_exact_on_modes():
    n = 32
    s = 2 * np.pi * np.arange(n) / n
    vals = np.sin(2 * s) + 0.3 * np.cos(5 * s)
    pts = np.array([0.1234, 2.345, 5.0])
    exact = np.sin(2 * pts) + 0.3 * np.cos(5 * pts)
    assert np.max(np.abs(trig_interp(vals, pts) - exact)) < 1e-13
