import numpy as np
import pytest
from scipy.integrate import solve_ivp

from fhnlab import dns
from fhnlab import model as M
from fhnlab.errors import BlowUp, DomainMismatch, InsufficientData


def zero_model(params):
    z = lambda u, w: 0.0 * u
    return M.ReactionModel(kind="zero", params=params, F=z, G=z, F_u=z, F_w=z,
                           G_u=z, G_w=z, F_uu=z)


@pytest.fixture(scope="module")
def kinetics_model():
    return M.classic_fhn(M.ModelParams(a=0.2, gamma=1.0, epsilon=1e-2))


class TestStepper:
    def test_constant_data_reduces_to_kinetics(self, kinetics_model):
        m = kinetics_model
        grid = dns.SimGrid(L_domain=100.0, n=256)
        state = dns.SimState(u=np.full(256, 0.9), w=np.full(256, 0.05), t=0.0,
                             frame_speed=0.0, grid=grid)
        stepper = dns.ETDRK4(grid, m, dt=0.1)
        out = stepper.run(state, 1000)
        ref = solve_ivp(lambda t, y: [m.F(y[0], y[1]), 1e-2 * m.G(y[0], y[1])],
                        (0.0, 100.0), [0.9, 0.05], rtol=1e-12, atol=1e-12,
                        method="DOP853")
        assert abs(out.u[0] - ref.y[0, -1]) < 1e-6
        assert abs(out.w[0] - ref.y[1, -1]) < 1e-6
        assert np.max(np.abs(out.u - out.u[0])) < 1e-12

    def test_one_step_recovery_drift_from_rest(self, kinetics_model):
        # (0,0) is not an equilibrium: w moves at rate eps*G(0,0) = -eps*a
        m = kinetics_model
        grid = dns.SimGrid(L_domain=50.0, n=128)
        state = dns.SimState(u=np.zeros(128), w=np.zeros(128), t=0.0,
                             frame_speed=0.0, grid=grid)
        out = dns.etdrk4_step(state, 0.01, m)
        expected = 0.01 * 1e-2 * (-0.2)
        assert abs(out.w[0] - expected) < 1e-8
        assert abs(out.u[0]) < 1e-5

    def test_linear_exact_decay(self):
        params = M.ModelParams(a=0.2, gamma=1.0, epsilon=1e-2)
        zm = zero_model(params)
        c_frame = 0.7
        grid = dns.SimGrid(L_domain=16 * np.pi, n=128)
        x = grid.x
        u0 = np.sin(2 * np.pi * 3 * x / grid.L_domain) + 0.5 * np.cos(2 * np.pi * 5 * x / grid.L_domain)
        state = dns.SimState(u=u0.copy(), w=0 * x, t=0.0, frame_speed=c_frame, grid=grid)
        stepper = dns.ETDRK4(grid, zm, dt=0.5, frame_speed=c_frame)
        out = stepper.run(state, 20)
        k = grid.wavenumbers
        sym = -k * k + 1j * k * c_frame
        sym = sym.copy()
        sym[-1] = -k[-1] ** 2
        exact = np.fft.irfft(np.fft.rfft(u0) * np.exp(sym * 10.0), 128)
        assert np.max(np.abs(out.u - exact)) < 1e-12

    def test_fourth_order_convergence(self, kinetics_model):
        m = kinetics_model
        grid = dns.SimGrid(L_domain=100.0, n=64)
        ref = solve_ivp(lambda t, y: [m.F(y[0], y[1]), 1e-2 * m.G(y[0], y[1])],
                        (0.0, 20.0), [0.9, 0.05], rtol=1e-13, atol=1e-13,
                        method="DOP853")
        errs = []
        for dt in (0.2, 0.1, 0.05):
            state = dns.SimState(u=np.full(64, 0.9), w=np.full(64, 0.05), t=0.0,
                                 frame_speed=0.0, grid=grid)
            out = dns.ETDRK4(grid, m, dt=dt).run(state, int(round(20.0 / dt)))
            errs.append(abs(out.u[0] - ref.y[0, -1]))
        assert 10.0 < errs[0] / errs[1] < 24.0
        assert 10.0 < errs[1] / errs[2] < 24.0

    def test_blowup_detected(self, kinetics_model):
        grid = dns.SimGrid(L_domain=50.0, n=128)
        # the relaxation excursion carries u above 0.9 from this start
        state = dns.SimState(u=np.full(128, 0.5), w=np.zeros(128), t=0.0,
                             frame_speed=0.0, grid=grid)
        stepper = dns.ETDRK4(grid, kinetics_model, dt=0.1, blowup_bound=0.9)
        with pytest.raises(BlowUp):
            stepper.run(state, 500)

    def test_fields_stay_real(self, kinetics_model):
        grid = dns.SimGrid(L_domain=60.0, n=128)
        rng = np.random.default_rng(5)
        state = dns.SimState(u=0.5 + 0.01 * rng.standard_normal(128),
                             w=0.05 + 0.0 * grid.x, t=0.0, frame_speed=1.0, grid=grid)
        out = dns.ETDRK4(grid, kinetics_model, dt=0.1, frame_speed=1.0).run(state, 50)
        spec = np.fft.fft(out.u)
        back = np.fft.ifft(spec)
        assert np.max(np.abs(back.imag)) < 1e-10


class TestEquilibriumAndFrames:
    def test_comoving_equilibrium(self, wt_2e3):
        state = dns.tile_wavetrain(wt_2e3, repeats=2, frame_speed=wt_2e3.c)
        stepper = dns.ETDRK4(state.grid, wt_2e3.model(), dt=0.1, frame_speed=wt_2e3.c)
        out = stepper.run(state, 1000)
        assert np.max(np.abs(out.u - state.u)) < 1e-6

    def test_frame_consistency(self, wt_2e3):
        # steady-frame evolution equals the comoving profile shifted by c*t
        t_run = 5.0
        st_steady = dns.tile_wavetrain(wt_2e3, repeats=2, frame_speed=0.0)
        st_co = dns.tile_wavetrain(wt_2e3, repeats=2, frame_speed=wt_2e3.c)
        m = wt_2e3.model()
        out_s = dns.ETDRK4(st_steady.grid, m, dt=0.05, frame_speed=0.0).run(st_steady, 100)
        out_c = dns.ETDRK4(st_co.grid, m, dt=0.05, frame_speed=wt_2e3.c).run(st_co, 100)
        k = st_steady.grid.wavenumbers
        shifted = np.fft.irfft(np.fft.rfft(out_c.u) * np.exp(-1j * k * wt_2e3.c * t_run),
                               st_steady.grid.n)
        assert np.max(np.abs(out_s.u - shifted)) < 1e-6

    def test_domain_mismatch_detected(self, wt_2e3):
        grid = dns.SimGrid(L_domain=3.37 * wt_2e3.L_eps, n=4096)
        state = dns.SimState(u=np.zeros(4096), w=np.zeros(4096), t=0.0,
                             frame_speed=0.0, grid=grid)
        with pytest.raises(DomainMismatch):
            dns.phase_fit(state, wt_2e3)


class TestPhaseFit:
    def test_exact_translate(self, wt_2e3):
        state = dns.tile_wavetrain(wt_2e3, repeats=2)
        k = state.grid.wavenumbers
        shift = 37.25
        u_shift = np.fft.irfft(np.fft.rfft(state.u) * np.exp(-1j * k * shift),
                               state.grid.n)
        st = dns.SimState(u=u_shift, w=state.w, t=0.0, frame_speed=0.0,
                          grid=state.grid)
        fit = dns.phase_fit(st, wt_2e3)
        assert np.max(np.abs(fit.perturbation)) < 1e-8
        assert abs(np.mod(fit.xi0 - shift, wt_2e3.L_eps)) < 1e-4 or \
               abs(np.mod(fit.xi0 - shift, wt_2e3.L_eps) - wt_2e3.L_eps) < 1e-4
        assert not fit.degenerate

    def test_translate_plus_bump(self, wt_2e3):
        state = dns.tile_wavetrain(wt_2e3, repeats=2)
        k = state.grid.wavenumbers
        u_shift = np.fft.irfft(np.fft.rfft(state.u) * np.exp(-1j * k * 11.0),
                               state.grid.n)
        bump = 1e-3 * np.exp(-((state.grid.x - 0.5 * state.grid.L_domain) ** 2) / 50.0)
        st = dns.SimState(u=u_shift + bump, w=state.w, t=0.0, frame_speed=0.0,
                          grid=state.grid)
        fit = dns.phase_fit(st, wt_2e3)
        assert np.max(np.abs(fit.perturbation - bump)) < 1e-8

    def test_flat_state_flagged_degenerate(self, wt_2e3):
        state = dns.tile_wavetrain(wt_2e3, repeats=2)
        st = dns.SimState(u=np.full(state.grid.n, 0.3), w=state.w, t=0.0,
                          frame_speed=0.0, grid=state.grid)
        fit = dns.phase_fit(st, wt_2e3)
        assert fit.degenerate


class TestWidthMetrology:
    def test_circular_width(self):
        mask = np.zeros(100, dtype=bool)
        mask[10:20] = True
        assert abs(dns._circular_width(mask, 0.5, 50.0) - 0.5 * 9) < 1e-12
        # wrap-around support
        mask = np.zeros(100, dtype=bool)
        mask[95:] = True
        mask[:5] = True
        assert abs(dns._circular_width(mask, 0.5, 50.0) - 0.5 * 9) < 1e-12
        assert dns._circular_width(np.zeros(10, dtype=bool), 0.5, 5.0) == 0.0

    def test_extract_deff_inverts_synthetic_widths(self):
        d_true = 0.05
        t = np.linspace(0.0, 4000.0, 80)
        series = dns.WidthSeries(times=t, widths=np.sqrt(4.0 * d_true * t),
                                 threshold=1e-5)
        est = dns.extract_deff(series, transient_cut=0.1)
        assert abs(est.d_eff - d_true) < 0.01 * d_true
        assert series.d_eff_estimate == est.d_eff

    def test_insufficient_data(self):
        series = dns.WidthSeries(times=np.linspace(0, 10, 5),
                                 widths=np.ones(5), threshold=1e-5)
        with pytest.raises(InsufficientData):
            dns.extract_deff(series)

    def test_zero_perturbation_keeps_zero_width(self, wt_2e3):
        pert = dns.Perturbation(kind="none")
        series, _ = dns.run_perturbation_experiment(
            wt_2e3, repeats=2, perturbation=pert, t_end=2.0, sample_dt=1.0,
            dt=0.1)
        assert np.all(series.widths == 0.0)

    def test_perturbation_kinds(self):
        x = np.linspace(0.0, 100.0, 501)
        g = dns.Perturbation(kind="gaussian", amplitude=1e-2, width_sq=100.0).field(x)
        assert abs(np.max(g) - 1e-2) < 1e-15
        r1 = dns.Perturbation(kind="random", amplitude=0.1, seed=7).field(x)
        r2 = dns.Perturbation(kind="random", amplitude=0.1, seed=7).field(x)
        assert np.array_equal(r1, r2)
        assert np.max(np.abs(r1)) <= 0.1
        with pytest.raises(ValueError):
            dns.Perturbation(kind="wavelet").field(x)
