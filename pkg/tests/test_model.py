import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhnlab import model as M
from fhnlab.errors import RegimeViolation, ShootingFailure

# frozen oracle values at a=0.2, gamma=1, c=2 (40-digit evaluation of the
# closed forms and quadratures; the spec's rounded quotes agree to ~4 digits)
THETA_LF = 0.222753808929
THETA_UF = 0.357994128019
KAPPA = 1.94424777309


def test_eval_cubic_roots():
    f, fp = M.eval_cubic(0.0, 0.2)
    assert f == 0.0 and abs(fp + 0.2) < 1e-15
    f, fp = M.eval_cubic(0.2, 0.2)
    assert f == 0.0 and abs(fp - 0.16) < 1e-15


def test_eval_cubic_at_fold():
    u1 = (1.2 - np.sqrt(0.84)) / 3.0
    f, fp = M.eval_cubic(u1, 0.2)
    assert abs(f + 0.0090277) < 5e-7
    assert abs(fp) < 1e-14


@given(st.floats(-2.0, 3.0), st.floats(0.05, 0.45))
@settings(max_examples=60, deadline=None)
def test_eval_cubic_derivative_is_consistent(u, a):
    h = 1e-6
    f_m = M.eval_cubic(u - h, a)[0]
    f_p = M.eval_cubic(u + h, a)[0]
    fp = M.eval_cubic(u, a)[1]
    assert abs((f_p - f_m) / (2 * h) - fp) < 5e-8


@given(st.floats(0.05, 0.45))
@settings(max_examples=60, deadline=None)
def test_fold_jump_identity(a):
    s = np.sqrt(1 - a + a * a)
    u1, ubar1, u2, ubar2 = M._classic_points(a)
    assert abs((u2 - u1) - s) < 1e-12
    assert abs((ubar1 - ubar2) - s) < 1e-12
    # co-level identities f(u1) = f(u2), f(ubar1) = f(ubar2)
    assert abs(M.eval_cubic(u1, a)[0] - M.eval_cubic(u2, a)[0]) < 1e-12
    assert abs(M.eval_cubic(ubar1, a)[0] - M.eval_cubic(ubar2, a)[0]) < 1e-12


def test_regime_bounds_grid():
    for a in np.linspace(0.05, 0.45, 30):
        assert 0.0 < M.gamma_star(a) < 6.0
        assert M.c_star(a) > 0.0


def test_regime_values_at_02():
    assert abs(M.gamma_star(0.2) - 4.81306822878312) < 1e-12
    assert abs(M.c_star(0.2) - 0.6480740698407861) < 1e-12
    assert abs(M.c_star(0.2) - 0.648) < 1e-3


def test_singular_limit_classic(classic_sl):
    sl = classic_sl
    s = np.sqrt(0.84)
    assert abs(sl.u1 - 0.0944950) < 5e-8
    assert abs(sl.ubar1 - 0.7055050) < 5e-8
    assert abs(sl.u2 - 1.0110101) < 5e-8
    assert abs(sl.ubar2 + 0.2110101) < 5e-8
    assert abs((sl.ubar1 - sl.ubar2) - s) < 1e-12
    assert abs((sl.u2 - sl.u1) - s) < 1e-12
    assert abs(sl.theta_lf - THETA_LF) < 1e-10
    assert abs(sl.theta_uf - THETA_UF) < 1e-10
    assert abs(sl.kappa - KAPPA) < 1e-9
    assert sl.theta_uf > sl.theta_lf > 0.0
    assert sl.L0 == sl.L_l + sl.L_r
    assert sl.L_l > 0.0 and sl.L_r > 0.0 and sl.kappa > 0.0


def test_branch_lengths_against_mpmath_oracle(classic_model, classic_sl):
    a, gamma, c = mp.mpf("0.2"), mp.mpf(1), mp.mpf(2)
    s = mp.sqrt(1 - a + a ** 2)
    u1 = (1 + a - s) / 3
    ubar1 = (1 + a + s) / 3
    u2 = (1 + a + 2 * s) / 3
    ubar2 = (1 + a - 2 * s) / 3
    f = lambda u: u * (u - a) * (1 - u)
    fp = lambda u: -3 * u ** 2 + 2 * (1 + a) * u - a
    integ = lambda u: -c * fp(u) / (u - gamma * f(u) - a)
    L_l = mp.quad(integ, [u1, ubar2])
    L_r = mp.quad(integ, [ubar1, u2])
    assert abs(classic_sl.L_l - float(L_l)) < 1e-9
    assert abs(classic_sl.L_r - float(L_r)) < 1e-9


def test_theta_ordering_over_regime_grid():
    # ordering of the fold constants over the bulk of the oscillatory regime;
    # it provably reverses for gamma/gamma_star above ~0.70-0.96 (a-dependent;
    # see companion test), so the grid samples the interior band
    for a in np.linspace(0.05, 0.45, 20):
        for frac in np.linspace(0.05, 0.65, 20):
            gamma = frac * M.gamma_star(a)
            m = M.classic_fhn(M.ModelParams(a=a, gamma=gamma, epsilon=1e-3))
            c = 2.0 * M.c_star(a)
            sl = M.singular_limit(m, c)
            assert sl.theta_uf > sl.theta_lf


def test_theta_ordering_reverses_near_regime_boundary():
    # at gamma = gamma_star the recovery nullcline passes through the upper
    # fold, so theta_uf -> 0 there and the ordering flips close to the
    # boundary: the blanket ordering claim holds only on the regime interior
    a = 0.2
    m = M.classic_fhn(M.ModelParams(a=a, gamma=0.97 * M.gamma_star(a), epsilon=1e-3))
    sl = M.singular_limit(m, 2.0)
    assert sl.theta_uf < sl.theta_lf
    # boundary identity: gamma_star = (ubar1 - a)/f(ubar1)
    u1, ubar1, _, _ = M._classic_points(a)
    f_ubar1 = M.eval_cubic(ubar1, a)[0]
    assert abs(M.gamma_star(a) - (ubar1 - a) / f_ubar1) < 1e-12


def test_kappa_speed_scaling(classic_model):
    vals = [M.singular_limit(classic_model, c).kappa * c * c for c in (1.0, 2.0, 5.0)]
    assert abs(vals[0] - vals[1]) < 1e-10 * abs(vals[0])
    assert abs(vals[0] - vals[2]) < 1e-10 * abs(vals[0])


def test_regime_violation():
    with pytest.raises(RegimeViolation):
        M.singular_limit(M.classic_fhn(M.ModelParams(a=0.6, gamma=1.0, epsilon=1e-3)), 2.0)
    with pytest.raises(RegimeViolation):
        M.singular_limit(M.classic_fhn(M.ModelParams(a=0.2, gamma=5.0, epsilon=1e-3)), 2.0)


def test_partials_match_finite_differences(modified_model, classic_model):
    rng = np.random.default_rng(3)
    us = rng.uniform(-0.1, 1.4, 25)
    ws = rng.uniform(-0.1, 0.4, 25)
    h = 1e-5
    for m in (classic_model, modified_model):
        fd_u = (m.F(us + h, ws) - m.F(us - h, ws)) / (2 * h)
        fd_w = (m.F(us, ws + h) - m.F(us, ws - h)) / (2 * h)
        gd_u = (m.G(us + h, ws) - m.G(us - h, ws)) / (2 * h)
        gd_w = (m.G(us, ws + h) - m.G(us, ws - h)) / (2 * h)
        ref = np.maximum(1e-8, np.abs(m.F_u(us, ws)))
        assert np.max(np.abs(fd_u - m.F_u(us, ws)) / ref) < 1e-6
        assert np.max(np.abs(fd_w - m.F_w(us, ws)) / np.maximum(1e-8, np.abs(m.F_w(us, ws)))) < 1e-6
        assert np.max(np.abs(gd_u - m.G_u(us, ws))) < 1e-6
        assert np.max(np.abs(gd_w - m.G_w(us, ws))) < 1e-6


def test_modified_singular_limit(modified_model):
    sl = M.singular_limit(modified_model, 3.0)
    # fold ordering is reversed by design in the modified system
    assert sl.theta_uf < sl.theta_lf
    assert sl.theta_lf > 0.0 and sl.theta_uf > 0.0
    assert sl.L_l > 0.0 and sl.L_r > 0.0
    # folds satisfy F = F_u = 0
    assert abs(modified_model.F(sl.u1, sl.w_lf)) < 1e-12
    assert abs(modified_model.F_u(sl.u1, sl.w_lf)) < 1e-12
    assert abs(modified_model.F(sl.ubar1, sl.w_uf)) < 1e-12
    # jump points are co-level roots
    assert abs(modified_model.F(sl.u2, sl.w_lf)) < 1e-12
    assert abs(modified_model.F(sl.ubar2, sl.w_uf)) < 1e-12


def test_general_theta_reduces_to_closed_form(classic_model, classic_sl):
    th_lf = M.fold_theta(classic_model, classic_sl.u1, classic_sl.w_lf, 2.0)
    th_uf = M.fold_theta(classic_model, classic_sl.ubar1, classic_sl.w_uf, 2.0)
    assert abs(th_lf - classic_sl.theta_lf) < 1e-13
    assert abs(th_uf - classic_sl.theta_uf) < 1e-13


class TestSlowOrbit:
    def test_left_branch_endpoints(self, classic_model, classic_sl):
        y, u, w = M.slow_orbit(classic_model, "left", 4000, sl=classic_sl)
        assert u[0] == classic_sl.u1
        assert abs(u[-1] - classic_sl.ubar2) < 1e-8
        assert abs(y[-1] - classic_sl.L_l) < 1e-14

    def test_left_branch_monotone(self, classic_model, classic_sl):
        _, u, w = M.slow_orbit(classic_model, "left", 4000, sl=classic_sl)
        assert np.all(np.diff(u) < 0.0)
        # w = f(u) pointwise
        assert np.max(np.abs(w - M.eval_cubic(u, 0.2)[0])) < 1e-12

    def test_right_branch_endpoints(self, classic_model, classic_sl):
        y, u, _ = M.slow_orbit(classic_model, "right", 4000, sl=classic_sl)
        assert u[0] == classic_sl.ubar1
        assert abs(u[-1] - classic_sl.u2) < 1e-8
        assert np.all(np.diff(u) > 0.0)

    def test_sqrt_fold_expansion(self, classic_model, classic_sl):
        sl = classic_sl
        y, u, _ = M.slow_orbit(classic_model, "left", 200000, sl=sl)
        g_fold = sl.u1 - sl.w_lf - 0.2  # G at the fold (negative)
        fpp = -6.0 * sl.u1 + 2.4
        coef = np.sqrt(-2.0 * g_fold / (2.0 * fpp))
        ratios = []
        for i in (2, 8, 32):
            pred = sl.u1 - coef * np.sqrt(y[i])
            ratios.append(abs(u[i] - pred) / np.sqrt(y[i]))
        # o(sqrt(y)): normalized deviation vanishes as y -> 0
        assert ratios[0] < ratios[1] < ratios[2]
        assert ratios[0] < 1e-3


class TestLayerProfile:
    def test_front(self, classic_model, classic_sl):
        lp = M.layer_profile(classic_model, 2.0, "front", sl=classic_sl)
        assert lp.residual < 1e-8
        assert abs(lp.w_level - classic_sl.w_lf) < 1e-14
        # endpoints approach (u2, 0) and (u1, 0) within grid truncation
        assert abs(lp.u[0] - classic_sl.u2) < 1e-3
        assert abs(lp.v[0]) < 1e-3
        assert lp.u[-1] - classic_sl.u1 < 0.05
        assert np.all(np.diff(lp.u) <= 1e-14)

    def test_front_algebraic_tail(self, classic_model, classic_sl):
        lp = M.layer_profile(classic_model, 2.0, "front", xi_span=(-30, 80), sl=classic_sl)
        sel = lp.xi > 10.0
        prod = (lp.u[sel] - classic_sl.u1) * lp.xi[sel]
        omega = 2.0 * 2.0 / (-6.0 * classic_sl.u1 + 2.4)
        assert np.all(prod > 0.3 * omega)
        assert np.all(prod < 1.5 * omega)

    def test_back(self, classic_model, classic_sl):
        lp = M.layer_profile(classic_model, 2.0, "back", sl=classic_sl)
        assert lp.residual < 1e-8
        assert abs(lp.u[0] - classic_sl.ubar2) < 1e-3
        assert np.all(np.diff(lp.u) >= -1e-14)

    def test_shooting_failure_on_bad_start(self, classic_model, classic_sl):
        # no saddle at the fold side: shooting must refuse, not wander
        with pytest.raises((ShootingFailure, ValueError)):
            M.layer_profile(classic_model, 2.0, "sideways", sl=classic_sl)
