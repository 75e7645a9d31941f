"""Periodic traveling-wave profiles by Newton iteration on spectral collocation.

A wave train with spatial wavenumber ell = 2*pi/L_eps, speed c, and temporal
frequency omega = ell*c is a 2*pi-periodic solution (u, w)(theta) of

    0 = ell^2 u_thth + F(u, w) + omega u_th,
    0 = eps  G(u, w) + omega w_th,

solved here on (optionally stretched) Fourier collocation nodes with a dense
bordered Newton method: one scalar phase condition pins the translation and
either the wavenumber (mode "fix_c") or the frequency (mode "fix_ell") is
appended as unknown.  Seeds come from the singular orbit (concatenated slow
branches and fast layers) or from time relaxation in a comoving frame, and a
secant-predictor continuation sweeps the family in the wave speed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import LinAlgError, lu_factor, lu_solve

from .collocation import GridMap, trig_interp
from .errors import JacobianSingular, NewtonDivergence, NoRelaxation, StepFailure
from .model import (
    ModelParams,
    ReactionModel,
    SingularLimit,
    classic_fhn,
    layer_profile,
    modified_fhn,
    singular_limit,
    slow_orbit,
)

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class WaveTrain:
    """A converged periodic traveling-wave profile on collocation nodes."""

    grid: GridMap
    u_star: np.ndarray
    w_star: np.ndarray
    ell: float
    omega: float
    c: float
    L_eps: float
    epsilon: float
    model_kind: str
    params: ModelParams
    residual_norm: float
    u_ref: np.ndarray = field(repr=False, default=None)

    @property
    def theta_grid(self) -> np.ndarray:
        return self.grid.theta

    @property
    def n(self) -> int:
        return self.grid.n

    def model(self) -> ReactionModel:
        return classic_fhn(self.params) if self.model_kind == "classic" else modified_fhn(self.params)

    def profile_at(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """Spectral evaluation of (u, w) at arbitrary phases in [0, 2pi)."""
        sig = self.grid.sigma_of_theta(np.mod(np.asarray(theta, dtype=float), _TWO_PI))
        return trig_interp(self.u_star, sig), trig_interp(self.w_star, sig)


@dataclass(frozen=True)
class Seed:
    """Initial guess for the wave-train Newton iteration."""

    grid: GridMap
    u: np.ndarray
    w: np.ndarray
    ell: float
    c: float
    epsilon: float


@dataclass
class ContinuationRecord:
    """Samples of a continuation sweep: (c, L_eps, ell, omega, amplitude)."""

    samples: list = field(default_factory=list)
    direction: str = "c"

    def add(self, wt: WaveTrain):
        amp = float(np.max(wt.u_star) - np.min(wt.u_star))
        self.samples.append((wt.c, wt.L_eps, wt.ell, wt.omega, amp))

    def sorted_by_c(self):
        return sorted(self.samples, key=lambda s: s[0])

    @property
    def period_monotone_in_c(self) -> bool:
        ss = self.sorted_by_c()
        return all(ss[i + 1][1] > ss[i][1] for i in range(len(ss) - 1))


def _layer_rates(model: ReactionModel, c: float, sl: SingularLimit) -> tuple[float, float]:
    """Unstable saddle rates of the front and back layers (inverse core widths)."""
    mu = []
    for u_saddle, w_level in ((sl.u2, sl.w_lf), (sl.ubar2, sl.w_uf)):
        fu = model.F_u(u_saddle, w_level)
        mu.append(0.5 * (-c + np.sqrt(c * c - 4.0 * min(fu, -1e-6))))
    return mu[0], mu[1]


def auto_grid(model: ReactionModel, c: float, epsilon: float, n: int,
              sl: SingularLimit | None = None, stretched: bool | None = None,
              centers: tuple[float, float] | None = None,
              L_ref: float | None = None) -> GridMap:
    """Collocation map adapted to the singular wave-train geometry.

    Nodes concentrate in two windows per interface: a narrow one sized by the
    layer's saddle rate covering its core, and a wider one covering the
    adjacent fold region of width ~eps^(-1/3)/theta (normal-form rescaling).
    ``centers`` overrides the interface phases (used when re-adapting to a
    converged profile); a uniform map is returned when n already resolves the
    layers (grid spacing below ~0.6 in the traveling-wave coordinate).
    """
    if sl is None:
        sl = singular_limit(model, c)
    L_est = L_ref if L_ref is not None else sl.L0 / epsilon
    if stretched is None:
        stretched = L_est / n > 0.6
    if not stretched:
        return GridMap.uniform(n)
    ell = _TWO_PI / L_est
    if centers is None:
        centers = (0.0, _TWO_PI * sl.L_l / sl.L0)
    theta_front, theta_back = centers
    mu_f, mu_b = _layer_rates(model, c, sl)
    core_f = np.clip(12.0 / mu_f, 1.5, 80.0) * ell
    core_b = np.clip(12.0 / mu_b, 1.5, 80.0) * ell
    scale = epsilon ** (-1.0 / 3.0)
    fold_lf = min(4.0 * scale / sl.theta_lf, 0.12 * L_est) * ell
    fold_uf = min(4.0 * scale / sl.theta_uf, 0.12 * L_est) * ell
    feats = [
        (theta_front, core_f, 0.17), (theta_back, core_b, 0.17),
        (theta_front, fold_lf, 0.12), (theta_back, fold_uf, 0.12),
    ]
    return GridMap.stretched(n, feats)


def interface_phases(wt: WaveTrain) -> tuple[float, float]:
    """Phases of the two transition layers (peaks of |d_theta u|)."""
    d1, _ = wt.grid.diff_matrices()
    du = np.abs(d1 @ wt.u_star)
    peaks = []
    work = du.copy()
    for _ in range(2):
        j = int(np.argmax(work))
        peaks.append(wt.grid.theta[j])
        sep = np.abs(np.mod(wt.grid.theta - wt.grid.theta[j] + np.pi, _TWO_PI) - np.pi)
        work[sep < 0.15 * _TWO_PI] = 0.0
    # order as (front, back): the front crosses descending through the midrange
    j0 = int(np.argmin(np.abs(np.mod(wt.grid.theta - peaks[0] + np.pi, _TWO_PI) - np.pi)))
    slope = (d1 @ wt.u_star)[j0]
    if slope > 0:
        peaks = peaks[::-1]
    return float(peaks[0]), float(peaks[1])


def refined_residual(wt: WaveTrain, factor: int = 2) -> float:
    """Max-norm residual of the profile resampled on a factor-refined grid.

    A converged profile that genuinely resolves all scales keeps this small
    (spectral accuracy); under-resolution shows up here even when the
    coarse-grid residual is at solver tolerance.
    """
    model = wt.model()
    g2 = GridMap.from_dict({**wt.grid.to_dict(), "n": factor * wt.n})
    sig_old = wt.grid.sigma_of_theta(g2.theta)
    u2 = trig_interp(wt.u_star, sig_old)
    w2 = trig_interp(wt.w_star, sig_old)
    d1, d2m = g2.diff_matrices()
    ru = wt.ell ** 2 * (d2m @ u2) + wt.omega * (d1 @ u2) + model.F(u2, w2)
    rw = wt.epsilon * model.G(u2, w2) + wt.omega * (d1 @ w2)
    return float(max(np.max(np.abs(ru)), np.max(np.abs(rw))))


def _dev_function(lp, u_minus: float, u_plus: float, tail_coef: float):
    """Layer deviation from its plateau limits, with analytic algebraic tail."""
    xi, u = lp.xi, lp.u

    def dev(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = (s >= xi[0]) & (s <= xi[-1])
        out[inside] = np.interp(s[inside], xi, u) - np.where(s[inside] >= 0.0, u_plus, u_minus)
        beyond = s > xi[-1]
        out[beyond] = tail_coef / (1.0 + s[beyond])
        return out

    return dev


def singular_seed(model: ReactionModel, c: float, epsilon: float, n: int,
                  grid: GridMap | None = None, sl: SingularLimit | None = None,
                  delays: tuple[float, float] = (0.0, 0.0)) -> Seed:
    """Assemble a seed from the singular orbit: slow branches plus layers.

    ``delays`` = (dy_lf, dy_uf) are extra slow-time ledges spent hugging the
    lower/upper fold before the branch drift sets in.  At finite epsilon the
    orbit leaves each fold with an O(eps^(2/3)) delay; seeding it explicitly
    keeps the transition layers near their converged positions, which matters
    when the two fold constants are very different.
    """
    if sl is None:
        sl = singular_limit(model, c)
    dy_lf, dy_uf = delays
    L = (sl.L0 + dy_lf + dy_uf) / epsilon
    ell = _TWO_PI / L
    xi_back = (sl.L_l + dy_lf) / epsilon
    if grid is None:
        grid = auto_grid(model, c, epsilon, n, sl=sl,
                         centers=(0.0, _TWO_PI * xi_back / L), L_ref=L)

    ns = 6000
    y_l, u_l, w_l = slow_orbit(model, "left", ns, sl=sl)
    y_r, u_r, w_r = slow_orbit(model, "right", ns, sl=sl)

    # keep the numeric layer span short of the sensitive far tail; the
    # deviation functions continue with the analytic algebraic tail beyond,
    # and the sampling step resolves the stiffest layer rate
    span_hi = min(120.0, 0.35 * min(sl.L_l, sl.L_r) / epsilon)
    mu_f, mu_b = _layer_rates(model, c, sl)
    n_layer = int(min(4e4, (span_hi + 60.0) / min(0.03, 0.1 / max(mu_f, mu_b)))) + 1
    lp_f = layer_profile(model, c, "front", xi_span=(-60.0, span_hi), n=n_layer, sl=sl)
    lp_b = layer_profile(model, c, "back", xi_span=(-60.0, span_hi), n=n_layer, sl=sl)
    tail_f = (lp_f.u[-1] - sl.u1) * (1.0 + lp_f.xi[-1])
    tail_b = (lp_b.u[-1] - sl.ubar1) * (1.0 + lp_b.xi[-1])
    dev_f = _dev_function(lp_f, sl.u2, sl.u1, tail_f)
    dev_b = _dev_function(lp_b, sl.ubar2, sl.ubar1, tail_b)

    xi = grid.theta * L / _TWO_PI
    on_left = xi < xi_back
    u = np.empty(n)
    w = np.empty(n)
    # the clip against 0 realizes the fold ledge: u sits at the fold value
    # for a slow time dy before the branch drift becomes visible
    y_left = np.clip(xi[on_left] * epsilon - dy_lf, 0.0, sl.L_l)
    y_right = np.clip((xi[~on_left] - xi_back) * epsilon - dy_uf, 0.0, sl.L_r)
    u[on_left] = np.interp(y_left, y_l, u_l)
    w[on_left] = np.interp(y_left, y_l, w_l)
    u[~on_left] = np.interp(y_right, y_r, u_r)
    w[~on_left] = np.interp(y_right, y_r, w_r)

    def wrapdist(x, center):
        return np.mod(x - center + 0.5 * L, L) - 0.5 * L

    u = u + dev_f(wrapdist(xi, 0.0)) + dev_b(wrapdist(xi, xi_back))
    return Seed(grid=grid, u=u, w=w, ell=ell, c=c, epsilon=epsilon)


def _measure_delays(wt: WaveTrain, sl: SingularLimit) -> tuple[float, float]:
    """Slow-time fold delays of a converged train relative to the singular orbit."""
    th_f, th_b = interface_phases(wt)
    arc_left = np.mod(th_b - th_f, _TWO_PI) / _TWO_PI * wt.L_eps
    dy_lf = max(0.0, wt.epsilon * arc_left - sl.L_l)
    dy_uf = max(0.0, wt.epsilon * (wt.L_eps - arc_left) - sl.L_r)
    return dy_lf, dy_uf


def _residual_and_jacobian(u, w, ell, omega, model, epsilon, d1, d2, mode, c,
                           wq, du_ref, u_ref, build_jacobian=True):
    n = len(u)
    r_u = ell * ell * (d2 @ u) + omega * (d1 @ u) + model.F(u, w)
    r_w = epsilon * model.G(u, w) + omega * (d1 @ w)
    r_phase = float(wq @ (du_ref * (u - u_ref)))
    res = np.concatenate([r_u, r_w, [r_phase]])
    if not build_jacobian:
        return res, None
    jac = np.zeros((2 * n + 1, 2 * n + 1))
    jac[:n, :n] = ell * ell * d2 + omega * d1
    jac[:n, :n] += np.diag(model.F_u(u, w))
    jac[:n, n:2 * n] = np.diag(model.F_w(u, w))
    jac[n:2 * n, :n] = np.diag(epsilon * model.G_u(u, w))
    jac[n:2 * n, n:2 * n] = omega * d1 + np.diag(epsilon * model.G_w(u, w))
    if mode == "fix_c":
        # omega = ell*c, so d/d ell brings in both terms
        jac[:n, 2 * n] = 2.0 * ell * (d2 @ u) + c * (d1 @ u)
        jac[n:2 * n, 2 * n] = c * (d1 @ w)
    else:
        jac[:n, 2 * n] = d1 @ u
        jac[n:2 * n, 2 * n] = d1 @ w
    jac[2 * n, :n] = wq * du_ref
    return res, jac


def newton_wavetrain(seed: Seed, model: ReactionModel, mode: str = "fix_c",
                     target: float | None = None, tol: float = 1e-10,
                     max_iter: int = 120, u_ref: np.ndarray | None = None,
                     step_cap: float = 0.3) -> WaveTrain:
    """Solve the rescaled traveling-wave system by damped bordered Newton.

    ``mode`` is "fix_c" (speed given; profile and wavenumber unknown) or
    "fix_ell" (wavenumber given; profile and frequency unknown); ``target``
    overrides the corresponding value from the seed.  The integral phase
    condition <d_theta u_ref, u - u_ref> = 0 removes the translation kernel.

    ``step_cap`` limits the initial profile update per iteration: the layer
    interaction pinning the relative interface positions is exponentially
    weak in the timescale separation, so the Jacobian has a soft mode along
    which a full Newton step can leave the basin; capped steps creep along
    that valley without giving up quadratic convergence near the solution.
    """
    if mode not in ("fix_c", "fix_ell"):
        raise ValueError("mode must be 'fix_c' or 'fix_ell'")
    grid = seed.grid
    d1, d2 = grid.diff_matrices()
    wq = grid.weights
    epsilon = seed.epsilon
    u = seed.u.copy()
    w = seed.w.copy()
    u_ref = seed.u.copy() if u_ref is None else u_ref.copy()
    du_ref = d1 @ u_ref

    if mode == "fix_c":
        c = seed.c if target is None else float(target)
        ell = seed.ell
        scalar = ell
    else:
        ell = seed.ell if target is None else float(target)
        omega = ell * seed.c
        scalar = omega
        c = seed.c

    def unpack(scalar):
        if mode == "fix_c":
            return scalar, scalar * c  # ell, omega
        return ell, scalar

    ell_cur, omega_cur = unpack(scalar)
    res, jac = _residual_and_jacobian(u, w, ell_cur, omega_cur, model, epsilon,
                                      d1, d2, mode, c, wq, du_ref, u_ref)
    norm = np.max(np.abs(res))
    for _ in range(max_iter):
        if norm < tol:
            break
        try:
            lu = lu_factor(jac, check_finite=False)
        except LinAlgError as exc:
            raise JacobianSingular(str(exc)) from exc
        step = -lu_solve(lu, res, check_finite=False)
        step_max = np.max(np.abs(step[:2 * len(u)]))
        alpha = min(1.0, step_cap / step_max) if step_max > step_cap else 1.0
        n = len(u)
        while True:
            u_n = u + alpha * step[:n]
            w_n = w + alpha * step[n:2 * n]
            s_n = scalar + alpha * step[2 * n]
            ell_n, omega_n = unpack(s_n)
            res_n, jac_n = _residual_and_jacobian(
                u_n, w_n, ell_n, omega_n, model, epsilon, d1, d2, mode, c,
                wq, du_ref, u_ref)
            norm_n = np.max(np.abs(res_n))
            if np.isfinite(norm_n) and norm_n < (1.0 - 0.1 * alpha) * norm + 1e-14:
                u, w, scalar = u_n, w_n, s_n
                res, jac, norm = res_n, jac_n, norm_n
                break
            alpha *= 0.5
            if alpha < 2.0 ** -24:
                raise NewtonDivergence(
                    f"line search floor reached at residual {norm:.3e}")
    else:
        raise NewtonDivergence(f"no convergence in {max_iter} iterations "
                               f"(residual {norm:.3e})")

    ell_cur, omega_cur = unpack(scalar)
    c_out = omega_cur / ell_cur
    return WaveTrain(
        grid=grid, u_star=u, w_star=w, ell=float(ell_cur), omega=float(omega_cur),
        c=float(c_out), L_eps=float(_TWO_PI / ell_cur), epsilon=epsilon,
        model_kind=model.kind, params=model.params, residual_norm=float(norm),
        u_ref=u_ref,
    )


def _reseed_on_grid(wt: WaveTrain, grid: GridMap, epsilon: float, c: float,
                    ell: float | None = None) -> Seed:
    sig_old = wt.grid.sigma_of_theta(grid.theta)
    return Seed(grid=grid, u=trig_interp(wt.u_star, sig_old),
                w=trig_interp(wt.w_star, sig_old),
                ell=wt.ell if ell is None else ell, c=c, epsilon=epsilon)


def _circle_map(theta, knots_new, knots_old):
    """Piecewise-linear degree-one circle map through matched knot pairs."""
    kn = np.asarray(knots_new, dtype=float)
    ko = np.asarray(knots_old, dtype=float)
    order = np.argsort(kn)
    kn, ko = kn[order], ko[order]
    kn_ext = np.concatenate([kn, [kn[0] + _TWO_PI]])
    ko_ext = np.concatenate([ko, [ko[0] + _TWO_PI]])
    th = np.mod(theta - kn[0], _TWO_PI) + kn[0]
    return np.interp(th, kn_ext, ko_ext)


def _shift_reseed(wt: WaveTrain, grid: GridMap, th_f_new: float, th_b_new: float,
                  ell_new: float, epsilon: float, c: float) -> Seed:
    """Reseed from a converged train with its layers moved to new phases.

    Builds a smooth-enough circle reparametrization that carries each layer
    core rigidly to its predicted phase while stretching only the plateaus,
    i.e. a discrete phase modulation.  This spares Newton from transporting
    layers through the exponentially soft relative-translation mode.
    """
    th_f_o, th_b_o = interface_phases(wt)
    # rigid window half-widths from the narrow map kernels (fall back to 2%)
    if grid.is_uniform or len(grid.rhos) < 2:
        d_f = d_b = 0.02 * _TWO_PI
    else:
        d_f = 3.0 * (1.0 - grid.rhos[0])
        d_b = 3.0 * (1.0 - grid.rhos[1])
    gap = 0.25 * min(np.mod(th_b_new - th_f_new, _TWO_PI),
                     np.mod(th_f_new - th_b_new, _TWO_PI))
    d_f, d_b = min(d_f, gap), min(d_b, gap)
    knots_new = [th_f_new - d_f, th_f_new + d_f, th_b_new - d_b, th_b_new + d_b]
    knots_old = [th_f_o - d_f, th_f_o + d_f, th_b_o - d_b, th_b_o + d_b]
    phi = _circle_map(grid.theta, np.mod(knots_new, _TWO_PI),
                      np.mod(knots_new, _TWO_PI) + _unwrap_targets(knots_new, knots_old))
    sig_old = wt.grid.sigma_of_theta(np.mod(phi, _TWO_PI))
    return Seed(grid=grid, u=trig_interp(wt.u_star, sig_old),
                w=trig_interp(wt.w_star, sig_old),
                ell=ell_new, c=c, epsilon=epsilon)


def _unwrap_targets(knots_new, knots_old):
    """Shifts old-minus-new per knot, each wrapped to the nearest image."""
    kn = np.asarray(knots_new, dtype=float)
    ko = np.asarray(knots_old, dtype=float)
    return np.mod(ko - kn + np.pi, _TWO_PI) - np.pi


def wavetrain_at(model: ReactionModel, c: float, epsilon: float, n: int = 1024,
                 stretched: bool | None = None, tol: float = 1e-10,
                 adapt: bool = True) -> WaveTrain:
    """Converge the wave train at (c, epsilon) from the singular-orbit seed.

    Falls back to a staged march down in epsilon when the direct solve does
    not converge.  When the fold delays displace the transition layers away
    from the node windows of a stretched map (their positions at finite
    epsilon differ from the singular ones), the map is rebuilt around the
    converged layer phases and the solve repeated (at most twice).
    """
    sl = singular_limit(model, c)
    grid = auto_grid(model, c, epsilon, n, sl=sl, stretched=stretched)
    try:
        seed = singular_seed(model, c, epsilon, n, grid=grid, sl=sl)
        wt = newton_wavetrain(seed, model, mode="fix_c", target=c, tol=tol,
                              max_iter=45)
    except NewtonDivergence:
        wt = None
    if wt is None:
        # staged march down in epsilon; each reseed carries the layers to
        # their predicted phases (fold delays extrapolated with eps^(2/3))
        # instead of asking Newton to transport them through the soft mode
        eps_path = [epsilon * 4.0 ** k for k in range(2, -1, -1)]
        for eps_k in eps_path:
            if wt is None:
                grid_k = GridMap.uniform(n) if stretched is False else None
                seed = singular_seed(model, c, eps_k, n, grid=grid_k, sl=sl)
            else:
                ratio = (eps_k / wt.epsilon) ** (2.0 / 3.0)
                dy_lf, dy_uf = (d * ratio for d in _measure_delays(wt, sl))
                L_pred = (sl.L0 + dy_lf + dy_uf) / eps_k
                th_f, _ = interface_phases(wt)
                th_b = th_f + _TWO_PI * (sl.L_l + dy_lf) / (eps_k * L_pred)
                th_b = float(np.mod(th_b, _TWO_PI))
                if stretched is False:
                    grid_k = GridMap.uniform(n)
                else:
                    grid_k = auto_grid(model, c, eps_k, n, sl=sl, stretched=True,
                                       centers=(th_f, th_b), L_ref=L_pred)
                seed = _shift_reseed(wt, grid_k, th_f, th_b,
                                     ell_new=_TWO_PI / L_pred, epsilon=eps_k, c=c)
            wt = newton_wavetrain(seed, model, mode="fix_c", target=c, tol=tol)

    if adapt and not wt.grid.is_uniform:
        for _ in range(2):
            th_f, th_b = interface_phases(wt)
            c_f, c_b = wt.grid.centers[0], wt.grid.centers[1]
            drift = max(
                abs(np.mod(th_f - c_f + np.pi, _TWO_PI) - np.pi),
                abs(np.mod(th_b - c_b + np.pi, _TWO_PI) - np.pi),
            ) * wt.L_eps / _TWO_PI
            window = min(wt.grid.rhos[0], wt.grid.rhos[1])
            core_xi = (1.0 - window) * wt.L_eps / _TWO_PI
            if drift < 0.4 * core_xi:
                break
            grid2 = auto_grid(model, c, epsilon, n, sl=sl, stretched=True,
                              centers=(th_f, th_b), L_ref=wt.L_eps)
            seed2 = _reseed_on_grid(wt, grid2, epsilon, c)
            wt = newton_wavetrain(seed2, model, mode="fix_c", target=c, tol=tol)
    return wt


def relax_seed(model: ReactionModel, c: float, epsilon: float, L_guess: float,
               t_relax: float = 400.0, n: int = 1024, dt: float = 0.05,
               shape_tol: float = 1e-4) -> Seed:
    """Time-relax one fundamental period in a comoving frame into a seed.

    Starts from a two-plateau profile with smoothed interfaces, evolves the
    comoving-frame dynamics, and monitors the shape-change rate, i.e. the
    time derivative with the residual translation drift projected out (the
    relaxed pattern travels at its own speed, not exactly at c).  Raises
    ``NoRelaxation`` if that rate stalls above ``shape_tol``.
    """
    from . import dns  # local import; dns also consumes wave trains

    sl = singular_limit(model, c)
    grid_sim = dns.SimGrid(L_domain=L_guess, n=n)
    x = grid_sim.x
    xi_back = L_guess * sl.L_l / sl.L0
    width = 2.0
    bump = 0.5 * (np.tanh((x - 0.0) / width) - np.tanh((x - xi_back) / width)
                  + np.tanh((x - L_guess) / width) + 1.0)
    # bump ~ 1 on the left-branch stretch, ~0 on the right-branch stretch
    u0 = sl.u2 + (sl.ubar2 - sl.u2) * bump
    w0 = sl.w_lf + (sl.w_uf - sl.w_lf) * bump
    state = dns.SimState(u=u0, w=w0, t=0.0, frame_speed=c, grid=grid_sim)

    stepper = dns.ETDRK4(grid_sim, model, dt=dt, frame_speed=c)
    n_steps = int(np.ceil(t_relax / dt))
    check_every = max(1, int(round(5.0 / dt)))
    rate_prev = np.inf
    stall_count = 0
    u_prev, t_prev = state.u.copy(), state.t
    for k in range(n_steps):
        state = stepper.step(state)
        if (k + 1) % check_every == 0:
            du = state.u - u_prev
            dt_win = state.t - t_prev
            # remove the best-fit translation drift before measuring change
            ux = np.fft.irfft(1j * grid_sim.wavenumbers * np.fft.rfft(state.u), n)
            denom = float(ux @ ux)
            shift_rate = float(ux @ du) / denom / dt_win if denom > 0 else 0.0
            rate = np.max(np.abs(du / dt_win - shift_rate * ux))
            u_prev, t_prev = state.u.copy(), state.t
            if rate < shape_tol:
                break
            if rate > 0.99 * rate_prev:
                stall_count += 1
                if stall_count >= 8:
                    raise NoRelaxation(
                        f"shape-change rate stalled at {rate:.3e} > {shape_tol:.1e}")
            else:
                stall_count = 0
            rate_prev = rate
    else:
        raise NoRelaxation(f"no relaxation within t = {t_relax}")

    gmap = GridMap.uniform(n)
    return Seed(grid=gmap, u=state.u.copy(), w=state.w.copy(),
                ell=_TWO_PI / L_guess, c=c, epsilon=epsilon)


def continue_in_c(model: ReactionModel, epsilon: float, c_range: tuple[float, float],
                  steps: int, n: int = 2048, stretched: bool | None = False,
                  tol: float = 1e-10, min_step_factor: float = 1e-3):
    """Secant-predictor/Newton-corrector sweep of the wave-train family in c.

    Walks from c_range[0] to c_range[1] in ``steps`` increments, halving the
    step on failure (``StepFailure`` below the minimum step).  Returns the
    continuation record and the list of converged trains.
    """
    c0, c1 = c_range
    wt = wavetrain_at(model, c0, epsilon, n=n, stretched=stretched, tol=tol)
    record = ContinuationRecord(direction="c")
    record.add(wt)
    trains = [wt]
    d1 = None  # previous solution for secant predictor
    step = (c1 - c0) / steps
    min_step = abs(c1 - c0) * min_step_factor
    c_cur = c0
    x_prev = None
    x_cur = np.concatenate([wt.u_star, wt.w_star, [wt.ell]])
    c_prev = None
    while (c1 - c_cur) * np.sign(step) > 1e-12:
        c_next = c_cur + step
        if (c1 - c_next) * np.sign(step) < 0:
            c_next = c1
        if x_prev is not None and c_cur != c_prev:
            x_pred = x_cur + (x_cur - x_prev) * ((c_next - c_cur) / (c_cur - c_prev))
        else:
            x_pred = x_cur
        nn = wt.n
        seed = Seed(grid=wt.grid, u=x_pred[:nn], w=x_pred[nn:2 * nn],
                    ell=float(x_pred[2 * nn]), c=c_next, epsilon=epsilon)
        try:
            wt_next = newton_wavetrain(seed, model, mode="fix_c", target=c_next,
                                       tol=tol, u_ref=wt.u_star)
        except NewtonDivergence:
            step *= 0.5
            if abs(step) < min_step:
                raise StepFailure(f"continuation stalled near c = {c_cur:.6g}")
            continue
        x_prev, c_prev = x_cur, c_cur
        x_cur = np.concatenate([wt_next.u_star, wt_next.w_star, [wt_next.ell]])
        c_cur = c_next
        wt = wt_next
        record.add(wt)
        trains.append(wt)
    return record, trains


def save_wavetrain(wt: WaveTrain, csv_path, json_path=None):
    """Serialize the profile as CSV (theta, u, w) plus a JSON header."""
    data = np.column_stack([wt.theta_grid, wt.u_star, wt.w_star])
    np.savetxt(csv_path, data, delimiter=",", header="theta,u,w", comments="",
               fmt="%.17g")
    header = {
        "c": wt.c, "ell": wt.ell, "omega": wt.omega, "L_eps": wt.L_eps,
        "epsilon": wt.epsilon, "residual_norm": wt.residual_norm,
        "model": {"kind": wt.model_kind, "a": wt.params.a, "gamma": wt.params.gamma,
                  "epsilon": wt.params.epsilon, "r": wt.params.r},
        "grid": wt.grid.to_dict(),
    }
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump(header, fh, indent=2)
    return header
