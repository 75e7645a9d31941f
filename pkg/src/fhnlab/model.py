"""Reaction models and their singular-limit geometry.

Two kinetics are supported: the classic cubic FitzHugh-Nagumo system

    u_t = u_xx + u(u-a)(1-u) - w,      w_t = eps*(u - gamma*w - a),

and a modified variant whose u-nonlinearity

    F(u,w) = u(u-a)(3/2-u)/(2/5+u-a) - w*(5/4 - r(u-a))

reverses the ordering of the two fold rescaling constants and thereby admits
finite-wavelength instabilities of its wave trains.

For a model at wave speed c this module computes every epsilon-independent
constant of the singular (eps -> 0) wave train: fold and jump abscissae, slow
branch traversal lengths, the fold normal-form constants theta, and the
quadratic dispersion coefficient kappa.  It also samples the slow orbits on
the outer branches of the critical manifold and the fast front/back layers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .airy import airy_first_zero
from .errors import QuadratureFailure, RegimeViolation, ShootingFailure, SingularityAtFold


@dataclass(frozen=True)
class ModelParams:
    """Kinetics parameters; ``r`` is only used by the modified model."""

    a: float
    gamma: float
    epsilon: float
    r: float = 0.0

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class ReactionModel:
    """Reaction kinetics with evaluation and partial-derivative maps.

    ``F`` is the reaction rate of u, ``G`` the recovery rate of w divided by
    epsilon, i.e. G(u, w) = u - gamma*w - a for both model kinds.
    """

    kind: str  # "classic" | "modified"
    params: ModelParams
    F: Callable
    G: Callable
    F_u: Callable
    F_w: Callable
    G_u: Callable
    G_w: Callable
    F_uu: Callable


def eval_cubic(u, a):
    """The cubic u(u-a)(1-u) and its derivative -3u^2 + 2(1+a)u - a."""
    f = u * (u - a) * (1.0 - u)
    fp = -3.0 * u * u + 2.0 * (1.0 + a) * u - a
    return f, fp


def gamma_star(a: float) -> float:
    """Upper bound on gamma for the oscillatory regime of the classic model."""
    return 9.0 / (1.0 + 2.0 * a - 2.0 * a * a + (1.0 - 2.0 * a) * np.sqrt(a * a - a + 1.0))


def c_star(a: float) -> float:
    """Transition speed between trigger waves (below) and phase waves (above)."""
    return np.sqrt((1.0 - a + a * a) / 2.0)


def in_oscillatory_regime(params: ModelParams) -> bool:
    """Whether the classic kinetics admit relaxation oscillations."""
    return 0.0 < params.a < 0.5 and 0.0 < params.gamma < gamma_star(params.a)


def classic_fhn(params: ModelParams) -> ReactionModel:
    a, gamma = params.a, params.gamma
    return ReactionModel(
        kind="classic",
        params=params,
        F=lambda u, w: u * (u - a) * (1.0 - u) - w,
        G=lambda u, w: u - gamma * w - a,
        F_u=lambda u, w: -3.0 * u * u + 2.0 * (1.0 + a) * u - a,
        F_w=lambda u, w: -1.0 + 0.0 * u,
        G_u=lambda u, w: 1.0 + 0.0 * u,
        G_w=lambda u, w: -gamma + 0.0 * u,
        F_uu=lambda u, w: -6.0 * u + 2.0 * (1.0 + a),
    )


def modified_fhn(params: ModelParams) -> ReactionModel:
    a, gamma, r = params.a, params.gamma, params.r

    def p(u):
        return u * (u - a) * (1.5 - u)

    def pp(u):
        return -3.0 * u * u + 2.0 * (1.5 + a) * u - 1.5 * a

    def ppp(u):
        return -6.0 * u + 2.0 * (1.5 + a)

    def d(u):
        return 0.4 + u - a

    def R(u):
        return p(u) / d(u)

    def Rp(u):
        return (pp(u) * d(u) - p(u)) / d(u) ** 2

    def Rpp(u):
        return ppp(u) / d(u) - 2.0 * Rp(u) / d(u)

    def S(u):
        return 1.25 - r * (u - a)

    return ReactionModel(
        kind="modified",
        params=params,
        F=lambda u, w: R(u) - w * S(u),
        G=lambda u, w: u - gamma * w - a,
        F_u=lambda u, w: Rp(u) + w * r,
        F_w=lambda u, w: -S(u),
        G_u=lambda u, w: 1.0 + 0.0 * u,
        G_w=lambda u, w: -gamma + 0.0 * u,
        F_uu=lambda u, w: Rpp(u) + 0.0 * w,
    )


@dataclass(frozen=True)
class SingularLimit:
    """All epsilon-independent constants of a model at wave speed c.

    ``u1``/``ubar1`` are the lower/upper fold abscissae, ``u2``/``ubar2`` the
    co-level jump abscissae on the opposite branches, ``w_lf``/``w_uf`` the
    frozen recovery levels of the fast layers.  ``L_l``/``L_r`` are the slow
    traversal lengths of the left/right branch and ``L0`` their sum (the
    leading-order rescaled period).  ``kappa`` is the coefficient of the
    quadratic term in the small-argument expansion of the dispersion relation.
    """

    u1: float
    ubar1: float
    u2: float
    ubar2: float
    w_lf: float
    w_uf: float
    c_star: float
    gamma_star: float
    theta_lf: float
    theta_uf: float
    L_l: float
    L_r: float
    L0: float
    kappa: float
    c: float
    kind: str
    params: ModelParams


def _classic_points(a: float):
    s = np.sqrt(1.0 - a + a * a)
    u1 = (1.0 + a - s) / 3.0
    ubar1 = (1.0 + a + s) / 3.0
    u2 = (1.0 + a + 2.0 * s) / 3.0
    ubar2 = (1.0 + a - 2.0 * s) / 3.0
    return u1, ubar1, u2, ubar2


def _nullcline_scan(model: ReactionModel, n: int = 4000):
    """Bracket the two folds of the modified nullcline w = R(u)/S(u)."""
    a, r = model.params.a, model.params.r
    lo = a - 0.4 + 1e-3
    hi = a + 1.25 / r - 1e-3 if r > 0 else a + 2.0
    u = np.linspace(lo, hi, n)
    w = model.F(u, 0.0) / (-model.F_w(u, 0.0))  # R(u)/S(u)
    dw = np.gradient(w, u)
    sign_change = np.where(np.diff(np.sign(dw)) != 0)[0]
    return u, w, sign_change


def _fold_newton(model: ReactionModel, u0: float, w0: float):
    """2-D Newton on (F = 0, F_u = 0) for a fold of the critical manifold."""
    u, w = u0, w0
    for _ in range(60):
        f1 = model.F(u, w)
        f2 = model.F_u(u, w)
        j11, j12 = model.F_u(u, w), model.F_w(u, w)
        j21, j22 = model.F_uu(u, w), model.params.r if model.kind == "modified" else 0.0
        det = j11 * j22 - j12 * j21
        if det == 0.0:
            raise RegimeViolation("degenerate fold (singular Newton system)")
        du = (f1 * j22 - f2 * j12) / det
        dw = (j11 * f2 - j21 * f1) / det
        u, w = u - du, w - dw
        if abs(f1) < 1e-14 and abs(f2) < 1e-14:
            break
    return u, w


def _modified_folds(model: ReactionModel):
    u, w, idx = _nullcline_scan(model)
    if len(idx) < 2:
        raise RegimeViolation("modified nullcline has no S-shape (folds not found)")
    folds = []
    for i in (idx[0], idx[-1]):
        uf, wf = _fold_newton(model, u[i], w[i])
        folds.append((uf, wf))
    folds.sort(key=lambda t: t[0])
    (u1, w_lf), (ubar1, w_uf) = folds
    return u1, w_lf, ubar1, w_uf


def _co_level_root(model: ReactionModel, w_level: float, bracket: tuple) -> float:
    """Root of F(u, w_level) = 0 on the branch opposite a fold.

    The bracket endpoints are scanned for a sign change first; the modified
    model's rational nonlinearity restricts how far the search may reach.
    """
    g = lambda u: model.F(u, w_level)
    lo, hi = bracket
    grid = np.linspace(lo, hi, 400)
    vals = g(grid)
    sign_change = np.where(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if len(sign_change) == 0:
        raise RegimeViolation(
            f"no co-level root of F(., w={w_level:.6g}) in [{lo:.6g}, {hi:.6g}]"
        )
    i = sign_change[-1] if vals[0] > 0 else sign_change[0]
    return brentq(g, grid[i], grid[i + 1], xtol=1e-14, rtol=8.9e-16)


def _branch_w(model: ReactionModel, u):
    """Critical-manifold level w with F(u, w) = 0 (F is affine in w)."""
    return model.F(u, 0.0) / (-model.F_w(u, 0.0))


def _branch_wprime(model: ReactionModel, u):
    # W'(u) = -F_u/F_w along F(u, W(u)) = 0
    w = _branch_w(model, u)
    return -model.F_u(u, w) / model.F_w(u, w)


def fold_theta(model: ReactionModel, u_fold: float, w_fold: float, c: float) -> float:
    """Normal-form rescaling constant of a fold at wave speed c.

    Derived from the quadratic normal form of the layer dynamics coupled to
    the slow drift: theta = cbrt(F_uu * F_w * G / 2) / c evaluated at the
    fold.  Positive for both folds of an oscillatory configuration.
    """
    prod = 0.5 * model.F_uu(u_fold, w_fold) * model.F_w(u_fold, w_fold) * model.G(u_fold, w_fold)
    theta = np.cbrt(prod) / c
    if theta <= 0.0:
        raise RegimeViolation(f"nonpositive fold constant theta = {theta:.3e}")
    return float(theta)


def _branch_length(model: ReactionModel, u_from: float, u_to: float, c: float) -> float:
    """Slow traversal length: integral of -c W'(u)/G(u, W(u)) from fold to jump."""

    def integrand(u):
        return -c * _branch_wprime(model, u) / model.G(u, _branch_w(model, u))

    val, err = quad(integrand, u_from, u_to, epsabs=1e-10, epsrel=1e-12, limit=200)
    if err > 1e-8 * max(1.0, abs(val)):
        raise QuadratureFailure(f"slow-branch quadrature error {err:.2e}")
    return float(val)


def singular_limit(model: ReactionModel, c: float) -> SingularLimit:
    """Compute every epsilon-independent singular-limit constant at speed c.

    For the classic model the fold and jump points come from closed forms and
    kappa from its explicit expression; for the modified model folds are found
    by 2-D Newton on (F=0, F_u=0) and the constants from the general fold
    normal form.  Raises ``RegimeViolation`` outside the oscillatory regime.
    """
    if c <= 0.0:
        raise RegimeViolation("wave speed must be positive")
    params = model.params
    a, gamma = params.a, params.gamma
    om = airy_first_zero()

    if model.kind == "classic":
        if not in_oscillatory_regime(params):
            raise RegimeViolation(
                f"classic model outside oscillatory regime: a={a}, gamma={gamma}, "
                f"gamma_star={gamma_star(a):.6g}"
            )
        u1, ubar1, u2, ubar2 = _classic_points(a)
        w_lf = eval_cubic(u1, a)[0]
        w_uf = eval_cubic(ubar1, a)[0]
        g_lf = u1 - gamma * w_lf - a
        g_uf = ubar1 - gamma * w_uf - a
        root6 = (a * a - a + 1.0) ** (1.0 / 6.0)
        theta_lf = -root6 * np.cbrt(g_lf) / c
        theta_uf = root6 * np.cbrt(g_uf) / c
        kappa = -(2.0 * om * (1.0 - a + a * a) ** (1.0 / 3.0) / (3.0 * c * c)) * (
            1.0 / (np.cbrt(u1 - gamma * w_lf - a) * (u2 - gamma * w_lf - a))
            + 1.0 / (np.cbrt(ubar1 - gamma * w_uf - a) * (ubar2 - gamma * w_uf - a))
        )
        cs, gs = c_star(a), gamma_star(a)
    else:
        u1, w_lf, ubar1, w_uf = _modified_folds(model)
        # interior equilibrium must sit on the middle branch
        equib = brentq(lambda u: model.G(u, _branch_w(model, u)), u1, ubar1, xtol=1e-13)
        if not (u1 < equib < ubar1):
            raise RegimeViolation("modified model equilibrium not on the middle branch")
        span = ubar1 - u1
        pole = a - 0.4  # denominator zero of the rational nonlinearity
        u2 = _co_level_root(model, w_lf, (ubar1 + 1e-6 * span, ubar1 + 1.5 * span))
        ubar2 = _co_level_root(model, w_uf, (pole + 1e-4, u1 - 1e-6 * span))
        theta_lf = fold_theta(model, u1, w_lf, c)
        theta_uf = fold_theta(model, ubar1, w_uf, c)
        # general small-argument dispersion coefficient: with jump factors
        # k_j = (u_fold - u_jump)/G(u_jump, w_fold), kappa collects the
        # quadratic terms of both fold kernels
        k_lf = (u1 - u2) / model.G(u2, w_lf)
        k_uf = (ubar1 - ubar2) / model.G(ubar2, w_uf)
        kappa = -(2.0 * om / 3.0) * (
            k_lf / (theta_lf * c ** 3) + k_uf / (theta_uf * c ** 3)
        )
        cs, gs = float("nan"), float("nan")

    L_l = _branch_length(model, u1, ubar2, c)
    L_r = _branch_length(model, ubar1, u2, c)
    if L_l <= 0.0 or L_r <= 0.0:
        raise RegimeViolation(f"nonpositive slow traversal lengths: {L_l}, {L_r}")

    return SingularLimit(
        u1=float(u1), ubar1=float(ubar1), u2=float(u2), ubar2=float(ubar2),
        w_lf=float(w_lf), w_uf=float(w_uf), c_star=float(cs), gamma_star=float(gs),
        theta_lf=float(theta_lf), theta_uf=float(theta_uf),
        L_l=L_l, L_r=L_r, L0=L_l + L_r, kappa=float(kappa), c=float(c),
        kind=model.kind, params=params,
    )


def jump_factors(sl: SingularLimit, model: ReactionModel) -> tuple[float, float]:
    """Fold jump factors (u_fold - u_jump)/G(u_jump, w_fold) for both folds."""
    k_lf = (sl.u1 - sl.u2) / model.G(sl.u2, sl.w_lf)
    k_uf = (sl.ubar1 - sl.ubar2) / model.G(sl.ubar2, sl.w_uf)
    return float(k_lf), float(k_uf)


def slow_orbit(model: ReactionModel, branch: str, n: int, c: float = 1.0,
               sl: SingularLimit | None = None):
    """Sample the reduced slow flow on one outer branch of the critical manifold.

    Returns arrays (y, u, w) with u solving c W'(u) u_y = -G(u, W(u)) on
    [0, L_branch], u(0) at the fold and u(L_branch) at the jump point, and
    w = W(u) pointwise.  The square-root fold expansion regularizes the
    separable integral on y in [0, 1e-6 * L_branch].
    """
    if branch not in ("left", "right"):
        raise ValueError("branch must be 'left' or 'right'")
    if sl is None:
        sl = singular_limit(model, c)
    c = sl.c
    if branch == "left":
        u_fold, u_end, w_fold = sl.u1, sl.ubar2, sl.w_lf
    else:
        u_fold, u_end, w_fold = sl.ubar1, sl.u2, sl.w_uf
    L = sl.L_l if branch == "left" else sl.L_r
    sgn = np.sign(u_end - u_fold)

    w_curv = -model.F_uu(u_fold, w_fold) / model.F_w(u_fold, w_fold)  # W''(u_fold)
    g_fold = model.G(u_fold, w_fold)
    # u(y) = u_fold + sgn*sqrt(-2 G y/(c W'')) + o(sqrt(y)); the ratio under
    # the root is positive at both folds of an oscillatory configuration
    root_coef = -2.0 * g_fold / (c * w_curv)
    if root_coef <= 0.0:
        raise RegimeViolation("fold expansion coefficient not positive")

    y = np.linspace(0.0, L, n)
    u = np.empty(n)
    y_cut = 1e-6 * L
    near = y <= y_cut
    u[near] = u_fold + sgn * np.sqrt(root_coef * y[near])

    def rhs(t, uu):
        wp = _branch_wprime(model, uu[0])
        if wp == 0.0:
            raise SingularityAtFold("reduced flow evaluated exactly at a fold")
        return [-model.G(uu[0], _branch_w(model, uu[0])) / (c * wp)]

    u_start = u_fold + sgn * np.sqrt(root_coef * y_cut)
    far_idx = np.where(~near)[0]
    if len(far_idx):
        sol = solve_ivp(
            rhs, (y_cut, L), [u_start], t_eval=y[far_idx],
            rtol=1e-11, atol=1e-13, method="LSODA", dense_output=False,
        )
        if not sol.success:
            raise QuadratureFailure(f"slow orbit integration failed: {sol.message}")
        u[far_idx] = sol.y[0]
    w = _branch_w(model, u)
    return y, u, w


@dataclass(frozen=True)
class LayerProfile:
    """A fast front or back layer at frozen recovery level ``w_level``."""

    xi: np.ndarray
    u: np.ndarray
    v: np.ndarray
    kind: str  # "front" | "back"
    w_level: float
    residual: float


def layer_profile(model: ReactionModel, c: float, kind: str,
                  xi_span: tuple[float, float] = (-30.0, 80.0), n: int = 2001,
                  sl: SingularLimit | None = None) -> LayerProfile:
    """Compute a heteroclinic layer by shooting from the saddle's unstable manifold.

    The front at w_level = W(u1) runs from (u2, 0) down to the fold (u1, 0)
    with u strictly decreasing; the back at W(ubar1) runs from (ubar2, 0) up
    to (ubar1, 0).  The profile is centered so that u crosses the midpoint of
    its range at xi = 0.  ``residual`` reports the max deviation from a
    refined-tolerance re-integration on the grid.
    """
    if kind not in ("front", "back"):
        raise ValueError("kind must be 'front' or 'back'")
    if sl is None:
        sl = singular_limit(model, c)
    if kind == "front":
        u_start, u_end, w_level = sl.u2, sl.u1, sl.w_lf
    else:
        u_start, u_end, w_level = sl.ubar2, sl.ubar1, sl.w_uf
    direction = np.sign(u_end - u_start)

    fu = model.F_u(u_start, w_level)
    if fu >= 0.0:
        raise ShootingFailure(f"start point u={u_start} is not a saddle (F_u={fu:.3e})")
    mu_plus = 0.5 * (-c + np.sqrt(c * c - 4.0 * fu))
    delta = 1e-7

    def rhs(t, yv):
        return [yv[1], -c * yv[1] - model.F(yv[0], w_level)]

    u0 = u_start + direction * delta
    v0 = direction * delta * mu_plus
    mid = 0.5 * (u_start + u_end)

    def crossing(t, yv):
        return yv[0] - mid

    crossing.terminal = False
    crossing.direction = direction

    # time to reach the transversal grows only logarithmically in the offset
    t_budget = (np.log(abs(u_end - u_start) / delta) + 10.0) / mu_plus
    span = (0.0, t_budget + xi_span[1] + 10.0)

    sol = solve_ivp(rhs, span, [u0, v0], events=[crossing], rtol=1e-13,
                    atol=1e-15, method="DOP853", dense_output=True)
    if not sol.success or len(sol.t_events[0]) == 0:
        raise ShootingFailure("transversal crossing not reached within the budget")
    t_cross = sol.t_events[0][0]

    xi = np.linspace(xi_span[0], xi_span[1], n)
    t_samples = xi + t_cross  # recentered so the crossing sits at xi = 0
    u = np.empty(n)
    v = np.empty(n)
    inside = (t_samples >= 0.0) & (t_samples <= sol.t[-1])
    vals = sol.sol(t_samples[inside])
    u[inside], v[inside] = vals[0], vals[1]
    # ahead of the shooting start: saddle linearization (error O(delta^2))
    before = t_samples < 0.0
    amp = direction * delta * np.exp(mu_plus * t_samples[before])
    u[before] = u_start + amp
    v[before] = mu_plus * amp
    after = t_samples > sol.t[-1]
    if np.any(after):
        tail = sol.sol(np.full(after.sum(), sol.t[-1]))
        u[after], v[after] = tail[0], tail[1]

    # independent-method re-integration bounds the shape error; both runs are
    # recentered at their own transversal crossing, since the saddle departure
    # amplifies any tolerance difference into a pure time shift
    sol_ref = solve_ivp(rhs, span, [u0, v0], events=[crossing], rtol=1e-11,
                        atol=1e-13, method="RK45", dense_output=True, max_step=2.0)
    if len(sol_ref.t_events[0]) == 0:
        raise ShootingFailure("reference integration missed the transversal")
    t_ref = sol_ref.t_events[0][0] + xi[inside]
    ref = sol_ref.sol(np.clip(t_ref, 0.0, sol_ref.t[-1]))
    residual = float(np.max(np.abs(vals[0] - ref[0])))
    if residual > 1e-8:
        raise ShootingFailure(f"layer integration residual {residual:.2e} exceeds 1e-8")

    return LayerProfile(xi=xi, u=u, v=v, kind=kind, w_level=float(w_level),
                        residual=residual)
