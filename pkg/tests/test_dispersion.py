import numpy as np
import pytest

from fhnlab import dispersion as D
from fhnlab import model as M
from fhnlab.errors import BranchJump


def closed_form_limit(a, gamma):
    # product of limiting jump factors of the dispersion relation
    return (a * (1 - a) * (9 - (2 + 4 * a - 4 * a * a) * gamma + a * (1 - a) * gamma ** 2)
            / (9 + 2 * (2 - 5 * a + 5 * a * a) * gamma + (1 - a) ** 2 * a * a * gamma ** 2))


def test_rhs_trivial(classic_sl):
    assert D.main_formula_rhs(0.0, classic_sl, 1e-3) == 1.0 + 0.0j


def test_rhs_large_imaginary_limit(classic_sl):
    limit = D.main_formula_rhs(0.5j, classic_sl, 1e-12)
    closed = closed_form_limit(0.2, 1.0)
    assert abs(limit - closed) < 1e-6
    assert abs(limit) < 1.0


def test_prediction_invariants(classic_sl):
    pred = D.predict(classic_sl, 1e-3)
    assert pred.d_eff_leading > 0.0
    assert pred.lambda_pp_leading == -pred.d_eff_leading
    assert pred.epsilon == 1e-3 and pred.c == 2.0


class TestStabilityFunctions:
    def test_at_zero(self, classic_sl):
        a_lf, a_uf = D.stability_functions(0.0, classic_sl)
        assert a_lf == 1.0 and a_uf == 1.0

    def test_limits(self, classic_sl):
        sl = classic_sl
        a_lf, a_uf = D.stability_functions(1e3, sl)
        lim_lf = (sl.u1 - sl.w_lf - 0.2) / (sl.u2 - sl.w_lf - 0.2)
        lim_uf = (sl.ubar1 - sl.w_uf - 0.2) / (sl.ubar2 - sl.w_uf - 0.2)
        assert abs(a_lf - lim_lf) < 1e-4
        assert abs(a_uf - lim_uf) < 1e-4
        assert -0.5 < lim_lf < 0.0
        assert -2.0 < lim_uf < 0.0

    def test_decreasing_and_product_bound(self, classic_sl):
        z = np.linspace(0.0, 60.0, 1500)
        a_lf, a_uf = D.stability_functions(z, classic_sl)
        assert np.all(np.diff(a_lf) < 0.0)
        assert np.all(np.diff(a_uf) < 0.0)
        prod = a_lf * a_uf
        assert np.min(prod) > -1.0 / 3.0
        # away from the origin the product stays strictly inside the unit disk
        mu = 0.1
        sel = z >= mu / 4.0
        assert np.max(np.abs(prod[sel])) < 1.0


class TestCriticalCurve:
    def test_origin_and_derivatives(self, classic_sl):
        eps = 1e-4
        L = classic_sl.L0 / eps
        rho = np.linspace(-2e-4, 2e-4, 9)
        samples = D.solve_critical_curve(classic_sl, eps, L, rho)
        at0 = [s for s in samples if s.rho == 0.0][0]
        assert abs(at0.lam) < 1e-12
        lam_p, lam_pp = D.curve_derivatives_at_zero(classic_sl, eps, L)
        pred = D.predict(classic_sl, eps)
        assert abs(lam_p - 2.0j) < 1e-4
        assert abs(lam_pp.real - pred.lambda_pp_leading) < 0.10 * abs(pred.lambda_pp_leading)
        assert abs(lam_pp.imag) < 1e-6 * abs(lam_pp.real) + 1e-12

    def test_conjugation_symmetry(self, classic_sl):
        eps = 1e-3
        L = classic_sl.L0 / eps
        rho = np.linspace(-0.02, 0.02, 41)
        samples = D.solve_critical_curve(classic_sl, eps, L, rho)
        lam = {round(s.rho, 12): s.lam for s in samples}
        for s in samples:
            if s.rho > 0:
                assert abs(lam[round(-s.rho, 12)] - np.conj(s.lam)) < 1e-10

    def test_requires_zero_in_grid(self, classic_sl):
        with pytest.raises(ValueError):
            D.solve_critical_curve(classic_sl, 1e-3, 1e3, np.array([0.1, 0.2]))

    def test_branch_jump_on_coarse_grid(self, classic_sl):
        # winding changes inside a huge gap cannot be disambiguated
        eps = 1e-3
        L = classic_sl.L0 / eps
        rho = np.array([0.0, 5e-3])
        with pytest.raises(BranchJump):
            D.solve_critical_curve(classic_sl, eps, L, rho,
                                   jump_factor_threshold=1e-4)


def test_scaling_law_slope(classic_sl):
    slopes = []
    eps_grid = [1e-6, 1e-5, 1e-4, 1e-3]
    vals = []
    for eps in eps_grid:
        L = classic_sl.L0 / eps
        _, lam_pp = D.curve_derivatives_at_zero(classic_sl, eps, L)
        vals.append(abs(lam_pp.real))
    slope = np.polyfit(np.log(eps_grid), np.log(vals), 1)[0]
    assert abs(slope - 2.0 / 3.0) < 0.05


class TestInstabilityScan:
    def test_classic_is_stable(self, classic_sl):
        eps = 1e-3
        L = classic_sl.L0 / eps
        rho = np.linspace(0.0, 0.35, 900)
        rep = D.instability_scan(classic_sl, eps, L, rho)
        assert not rep.unstable
        assert rep.max_re < 0.0
        assert not rep.heuristic

    def test_modified_has_window(self, modified_model):
        sl = M.singular_limit(modified_model, 3.0)
        eps = 0.002
        L = sl.L0 / eps
        rho = np.linspace(0.0, 0.3, 1200)
        rep = D.instability_scan(sl, eps, L, rho)
        assert rep.unstable
        assert rep.max_re > 0.0
        assert rep.heuristic
        lo, hi = rep.unstable_windows[0]
        assert 0.05 < lo < hi < 0.3  # intermediate window, detached from 0

    def test_trivial_branch_persists_at_larger_eps(self, classic_sl):
        eps = 1e-2
        L = classic_sl.L0 / eps
        rho = np.linspace(0.0, 0.05, 60)
        rep = D.instability_scan(classic_sl, eps, L, rho)
        at0 = [s for s in rep.samples if s.rho == 0.0][0]
        assert abs(at0.lam) < 1e-12
