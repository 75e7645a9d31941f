"""Critical spectral curve and stability functions from the dispersion relation.

The critical Floquet spectrum of a singularly perturbed wave train obeys a
transcendental relation between the spectral parameter lam and the Bloch
frequency rho,

    exp((lam/c - i*rho) * L_eps) = RHS(lam),
    RHS(lam) = (1 + Y_lf(lam*eps^(-1/6)) * k_lf) * (1 + Y_uf(lam*eps^(-1/6)) * k_uf),

where Y_lf/Y_uf are the fold scattering factors (``airy.fold_scattering``)
and k_lf/k_uf the jump factors (u_fold - u_jump)/G(u_jump, w_fold).  This
module solves the relation for the curve lam(rho), expands it near the
origin (group velocity and effective diffusivity), evaluates the monotone
stability functions whose product bound excludes intermediate-scale
instabilities in the classic model, and scans for sign changes of Re(lam)
in configurations (such as the modified model) where the fold constants are
reordered.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .airy import fold_scattering, fold_scattering_deriv, fold_transmission
from .errors import BranchJump, NewtonFailure
from .model import SingularLimit

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class DispersionPrediction:
    """Leading-order curve coefficients predicted from singular-limit data."""

    d_eff_leading: float
    c_g_bound: float
    lambda_pp_leading: float
    epsilon: float
    c: float
    L0: float
    kappa: float

    def __post_init__(self):
        if self.d_eff_leading <= 0.0:
            raise ValueError("leading-order effective diffusivity must be positive")


def predict(sl: SingularLimit, epsilon: float) -> DispersionPrediction:
    """Leading-order d_eff = 2*kappa*c^3*eps^(2/3)/L0 and lam''(0) = -d_eff.

    The group velocity in the steady frame vanishes at leading order for
    phase waves; ``c_g_bound`` records that leading-order value.
    """
    d_eff = 2.0 * sl.kappa * sl.c ** 3 * epsilon ** (2.0 / 3.0) / sl.L0
    return DispersionPrediction(
        d_eff_leading=d_eff, c_g_bound=0.0, lambda_pp_leading=-d_eff,
        epsilon=epsilon, c=sl.c, L0=sl.L0, kappa=sl.kappa,
    )


def jump_factors(sl: SingularLimit) -> tuple[float, float]:
    """Fold jump factors (u_fold - u_jump)/G(u_jump, w_fold) at both folds."""
    a, gamma = sl.params.a, sl.params.gamma
    k_lf = (sl.u1 - sl.u2) / (sl.u2 - gamma * sl.w_lf - a)
    k_uf = (sl.ubar1 - sl.ubar2) / (sl.ubar2 - gamma * sl.w_uf - a)
    return float(k_lf), float(k_uf)


def main_formula_rhs(lam, sl: SingularLimit, epsilon: float):
    """Right-hand side of the dispersion relation at spectral parameter lam.

    Equals 1 at lam = 0 and tends to the product of the limiting jump
    factors (modulus < 1 in the oscillatory classic regime) for large
    arguments along the imaginary axis.
    """
    k_lf, k_uf = jump_factors(sl)
    z = np.asarray(lam, dtype=complex) * epsilon ** (-1.0 / 6.0)
    y_lf = fold_scattering(z, sl.theta_lf, sl.c)
    y_uf = fold_scattering(z, sl.theta_uf, sl.c)
    return (1.0 + y_lf * k_lf) * (1.0 + y_uf * k_uf)


def _rhs_and_deriv(lam: complex, sl: SingularLimit, epsilon: float):
    k_lf, k_uf = jump_factors(sl)
    s = epsilon ** (-1.0 / 6.0)
    z = lam * s
    y_lf = complex(fold_scattering(z, sl.theta_lf, sl.c))
    y_uf = complex(fold_scattering(z, sl.theta_uf, sl.c))
    dy_lf = complex(fold_scattering_deriv(z, sl.theta_lf, sl.c)) * s
    dy_uf = complex(fold_scattering_deriv(z, sl.theta_uf, sl.c)) * s
    f1 = 1.0 + y_lf * k_lf
    f2 = 1.0 + y_uf * k_uf
    return f1 * f2, k_lf * dy_lf * f2 + k_uf * dy_uf * f1


@dataclass(frozen=True)
class CriticalCurveSample:
    """One solved point of the critical curve with its winding bookkeeping."""

    rho: float
    lam: complex
    branch_tag: int


def _solve_at_rho(rho: float, lam0: complex, m: int, sl: SingularLimit,
                  epsilon: float, L_eps: float, tol: float = 1e-13,
                  budget: int = 60) -> complex:
    """Damped Newton on g(lam) = lam - (c/L)(i rho L + Log RHS(lam) + 2 pi i m)."""
    c = sl.c
    lam = lam0
    scale = c / L_eps

    def g_val(lm):
        rhs, drhs = _rhs_and_deriv(lm, sl, epsilon)
        if abs(rhs) < 1e-300:
            raise NewtonFailure(f"dispersion RHS vanished at lam={lm}")
        g = lm - scale * (1j * rho * L_eps + cmath.log(rhs) + _TWO_PI * 1j * m)
        gp = 1.0 - scale * drhs / rhs
        return g, gp

    g, gp = g_val(lam)
    for _ in range(budget):
        if abs(g) < tol * max(1.0, abs(lam)):
            return lam
        step = -g / gp
        alpha = 1.0
        for _ in range(40):
            try:
                g_new, gp_new = g_val(lam + alpha * step)
            except (NewtonFailure, ValueError):
                alpha *= 0.5
                continue
            if abs(g_new) < (1.0 - 0.25 * alpha) * abs(g):
                lam = lam + alpha * step
                g, gp = g_new, gp_new
                break
            alpha *= 0.5
        else:
            raise NewtonFailure("dispersion Newton line search stalled")
    raise NewtonFailure("dispersion Newton exhausted its budget")


def solve_critical_curve(sl: SingularLimit, epsilon: float, L_eps: float,
                         rho_grid, jump_factor_threshold: float = 8.0):
    """Continue the critical curve lam(rho) through the dispersion relation.

    ``rho_grid`` must contain 0; the branch is seeded with lam(0) = 0 and the
    winding index of the complex logarithm is continued outward by nearest
    prediction.  Raises ``BranchJump`` when consecutive solutions are farther
    apart than the continuity threshold even after adjusting the winding.
    """
    rho_grid = np.asarray(rho_grid, dtype=float)
    if not np.any(rho_grid == 0.0):
        raise ValueError("rho_grid must contain 0")
    order = np.argsort(rho_grid)
    rho_sorted = rho_grid[order]
    i0 = int(np.where(rho_sorted == 0.0)[0][0])

    results: dict[int, CriticalCurveSample] = {
        i0: CriticalCurveSample(rho=0.0, lam=_solve_at_rho(0.0, 0.0 + 0.0j, 0, sl, epsilon, L_eps), branch_tag=0)
    }

    def march(indices):
        m = 0
        prev = results[i0]
        prev2 = None
        for i in indices:
            rho = rho_sorted[i]
            drho = rho - prev.rho
            if prev2 is not None and prev.rho != prev2.rho:
                slope = (prev.lam - prev2.lam) / (prev.rho - prev2.rho)
            else:
                slope = 1j * sl.c
            lam_pred = prev.lam + slope * drho
            threshold = max(
                jump_factor_threshold * abs(slope) * abs(drho), 1e-9
            )
            best = None
            for m_try in (m, m - 1, m + 1):
                try:
                    lam = _solve_at_rho(rho, lam_pred, m_try, sl, epsilon, L_eps)
                except NewtonFailure:
                    continue
                dist = abs(lam - lam_pred)
                if best is None or dist < best[0]:
                    best = (dist, lam, m_try)
            if best is None:
                raise NewtonFailure(f"curve solve failed at rho={rho:.6g}")
            dist, lam, m = best
            if dist > threshold:
                raise BranchJump(
                    f"discontinuity {dist:.3e} > {threshold:.3e} at rho={rho:.6g}; "
                    "rho grid too coarse"
                )
            prev2, prev = prev, CriticalCurveSample(rho=rho, lam=lam, branch_tag=m)
            results[i] = prev

    march(range(i0 + 1, len(rho_sorted)))
    march(range(i0 - 1, -1, -1))
    return [results[i] for i in range(len(rho_sorted))]


def curve_derivatives_at_zero(sl: SingularLimit, epsilon: float, L_eps: float,
                              h: float | None = None):
    """(lam'(0), lam''(0)) by Richardson-extrapolated central differences.

    Steps h and h/2 in rho; h defaults to a small fraction of the
    eps^(1/6)-scaled curvature window, which keeps the quadratic term of the
    curve well above solver noise at any epsilon while the quartic terms of
    the kernel expansion stay negligible.
    """
    if h is None:
        h = 0.02 * epsilon ** (1.0 / 6.0) / sl.c

    def fd(step):
        rhos = np.array([-step, 0.0, step])
        samples = solve_critical_curve(sl, epsilon, L_eps, rhos)
        lam = {s.rho: s.lam for s in samples}
        d1 = (lam[step] - lam[-step]) / (2.0 * step)
        d2 = (lam[step] - 2.0 * lam[0.0] + lam[-step]) / step ** 2
        return d1, d2

    d1_h, d2_h = fd(h)
    d1_h2, d2_h2 = fd(h / 2.0)
    lam_p = (4.0 * d1_h2 - d1_h) / 3.0
    lam_pp = (4.0 * d2_h2 - d2_h) / 3.0
    return lam_p, lam_pp


def stability_functions(z, sl: SingularLimit):
    """Monotone stability functions (A_lf(z), A_uf(z)) for z >= 0.

    A_lf(z) = 1 - (u2 - u1) T(z^2/(theta_lf c^3)) / (u2 - gamma w_lf - a) and
    analogously at the upper fold; both equal 1 at z = 0, decrease strictly,
    and approach G(u_fold, w_fold)/G(u_jump, w_fold) as z -> inf.
    """
    a, gamma = sl.params.a, sl.params.gamma
    z_arr = np.asarray(z, dtype=float)
    t_lf = fold_transmission(z_arr ** 2 / (sl.theta_lf * sl.c ** 3)).real
    t_uf = fold_transmission(z_arr ** 2 / (sl.theta_uf * sl.c ** 3)).real
    a_lf = 1.0 - (sl.u2 - sl.u1) * t_lf / (sl.u2 - gamma * sl.w_lf - a)
    a_uf = 1.0 - (sl.ubar2 - sl.ubar1) * t_uf / (sl.ubar2 - gamma * sl.w_uf - a)
    if np.asarray(z).ndim == 0:
        return float(a_lf), float(a_uf)
    return a_lf, a_uf


@dataclass
class InstabilityReport:
    """Outcome of a dispersion-relation scan over the Bloch frequency."""

    samples: list = field(default_factory=list)
    max_re: float = -np.inf
    rho_at_max: float = 0.0
    unstable_windows: list = field(default_factory=list)
    heuristic: bool = False

    @property
    def unstable(self) -> bool:
        return len(self.unstable_windows) > 0


def instability_scan(sl: SingularLimit, epsilon: float, L_eps: float,
                     rho_grid, lam_grid=None) -> InstabilityReport:
    """Scan the dispersion relation for Bloch frequencies with Re(lam) > 0.

    Marches the critical curve over ``rho_grid`` (0 is inserted if missing)
    and reports the maximal real part away from the origin together with the
    rho windows of instability.  ``lam_grid`` supplies fallback seeds scanned
    by mismatch magnitude if the continuation fails to start.  For the
    modified model this transfers the classic-model formula verbatim and the
    report is flagged as heuristic.
    """
    rho_grid = np.asarray(rho_grid, dtype=float)
    if not np.any(rho_grid == 0.0):
        rho_grid = np.sort(np.append(rho_grid, 0.0))
    try:
        samples = solve_critical_curve(sl, epsilon, L_eps, rho_grid)
    except (NewtonFailure, BranchJump):
        if lam_grid is None:
            raise
        samples = _scan_with_seeds(sl, epsilon, L_eps, rho_grid, lam_grid)

    report = InstabilityReport(samples=samples, heuristic=sl.kind != "classic")
    interior = [s for s in samples if s.rho != 0.0]
    if interior:
        worst = max(interior, key=lambda s: s.lam.real)
        report.max_re = worst.lam.real
        report.rho_at_max = worst.rho
    # contiguous windows of positive real part
    lo = None
    for s in samples:
        if s.lam.real > 0.0 and s.rho != 0.0:
            lo = s.rho if lo is None else lo
            hi = s.rho
        elif lo is not None:
            report.unstable_windows.append((lo, hi))
            lo = None
    if lo is not None:
        report.unstable_windows.append((lo, hi))
    return report


def _scan_with_seeds(sl, epsilon, L_eps, rho_grid, lam_grid):
    samples = []
    for rho in rho_grid:
        best = None
        for lam0 in np.asarray(lam_grid, dtype=complex):
            try:
                lam = _solve_at_rho(float(rho), complex(lam0), 0, sl, epsilon, L_eps)
            except NewtonFailure:
                continue
            mism = abs(np.exp((lam / sl.c - 1j * rho) * L_eps)
                       - main_formula_rhs(lam, sl, epsilon))
            if best is None or mism < best[0]:
                best = (mism, lam)
        if best is not None:
            samples.append(CriticalCurveSample(rho=float(rho), lam=best[1], branch_tag=0))
    return samples
