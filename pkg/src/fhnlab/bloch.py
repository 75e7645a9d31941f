"""Floquet-Bloch spectra of the linearization about a computed wave train.

For a converged 2*pi-periodic profile with wavenumber ell and speed c, the
Bloch operator at frequency rho acts as

    [ (ell d_th + i rho)^2 + c (ell d_th + i rho) + F_u(u*,w*)    F_w(u*,w*) ]
    [ eps G_u(u*,w*)                    c (ell d_th + i rho) + eps G_w(u*,w*) ]

on 2*pi-periodic functions.  Dense collocation matrices feed a full
nonsymmetric eigensolver; the critical curve through the translation
eigenvalue at the origin is continued in rho by nearest-neighbor matching,
and its derivatives at rho = 0 are obtained both by finite differences and
by the adjoint bordered-system formula

    lam''(0) = <(4 ell d_th d_ell u* + 2 d_th u*, 0), psi> / <(d_th u*, d_th w*), psi>,

with psi the adjoint kernel and d_ell(u*, w*) the wavenumber derivative of
the profile fixed by a solvability and an orthogonality condition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eig, lu_factor, lu_solve

from .errors import SolvabilityFailure, TrackingAmbiguity
from .wavetrain import WaveTrain

_TWO_PI = 2.0 * np.pi


def assemble_bloch(wt: WaveTrain, rho: float) -> np.ndarray:
    """Dense collocation matrix of the Bloch operator at frequency rho."""
    model = wt.model()
    d1, d2 = wt.grid.diff_matrices()
    n = wt.n
    ell, c, eps = wt.ell, wt.c, wt.epsilon
    u, w = wt.u_star, wt.w_star
    eye = np.eye(n)
    dxi = ell * d1 + 1j * rho * eye
    dxi2 = ell * ell * d2 + 2j * rho * ell * d1 - rho * rho * eye
    a = np.empty((2 * n, 2 * n), dtype=complex)
    a[:n, :n] = dxi2 + c * dxi + np.diag(model.F_u(u, w))
    a[:n, n:] = np.diag(model.F_w(u, w) + 0.0 * u)
    a[n:, :n] = np.diag(eps * model.G_u(u, w) + 0.0 * u)
    a[n:, n:] = c * dxi + np.diag(eps * model.G_w(u, w) + 0.0 * u)
    return a


@dataclass
class BlochCurve:
    """Critical spectral curve samples and derivatives at the origin."""

    rho_samples: np.ndarray
    lam_samples: np.ndarray          # tracked branch through lam(0) = 0
    lam_p0: complex
    lam_pp0: complex
    max_re: float                    # over all window eigenvalues, rho != 0
    window_eigs: list = field(default_factory=list, repr=False)
    unstable_rhos: list = field(default_factory=list)

    @property
    def d_eff(self) -> float:
        return -float(self.lam_pp0.real)


def _eigs(wt: WaveTrain, rho: float) -> np.ndarray:
    return eig(assemble_bloch(wt, rho), right=False, check_finite=False)


def _track(evs: np.ndarray, pred: complex, radius: float) -> complex:
    dist = np.abs(evs - pred)
    order = np.argsort(dist)
    nearest = evs[order[0]]
    if len(order) > 1 and dist[order[1]] < radius:
        raise TrackingAmbiguity(
            f"two eigenvalues within matching radius {radius:.3e} of {pred:.6g}",
            candidates=[nearest, evs[order[1]]],
        )
    return complex(nearest)


def critical_curve(wt: WaveTrain, n_rho: int = 48, rho_max: float | None = None,
                   im_window: float = 1.5, re_floor: float = -0.5,
                   fd_h: float | None = None) -> BlochCurve:
    """Scan the Brillouin zone, track the critical branch, report stability.

    Eigensolves run on a one-sided grid concentrated near rho = 0 (quadratic
    spacing) and are reflected by the conjugation symmetry lam(-rho) =
    conj(lam(rho)).  ``max_re`` is the maximal real part over every
    eigenvalue inside the reporting window (Re > re_floor, |Im| < im_window)
    excluding the translation eigenvalue at rho = 0, so instabilities
    anywhere in the window are caught even off the tracked branch.
    """
    zone = np.pi / wt.L_eps
    if rho_max is None:
        rho_max = zone
    s = np.linspace(0.0, 1.0, n_rho)
    rho_pos = rho_max * s * s  # concentrate samples near the origin
    rho_pos[0] = 0.0

    lam_tracked = np.empty(len(rho_pos), dtype=complex)
    window = []
    max_re = -np.inf
    unstable = []
    pred = 0.0 + 0.0j
    lam_prev = None
    for i, rho in enumerate(rho_pos):
        evs = _eigs(wt, rho)
        if i == 0:
            lam0 = evs[np.argmin(np.abs(evs))]
            lam_tracked[0] = lam0
            others = evs[np.abs(evs - lam0) > 1e-12]
            sel = others[(others.real > re_floor) & (np.abs(others.imag) < im_window)]
            window.append((rho, sel))
            if len(sel):
                max_re = max(max_re, float(np.max(sel.real)))
                if np.any(sel.real > 0.0):
                    unstable.append(rho)
            lam_prev = lam_tracked[0]
            continue
        drho = rho - rho_pos[i - 1]
        slope = 1j * wt.c if i == 1 else (lam_prev - lam_tracked[i - 2]) / (rho_pos[i - 1] - rho_pos[i - 2])
        pred = lam_prev + slope * drho
        radius = 5.0 * max(abs(slope * drho), 1e-12)
        lam_tracked[i] = _track(evs, pred, radius)
        lam_prev = lam_tracked[i]
        sel = evs[(evs.real > re_floor) & (np.abs(evs.imag) < im_window)]
        window.append((rho, sel))
        if len(sel):
            max_re = max(max_re, float(np.max(sel.real)))
            if np.any(sel.real > 0.0):
                unstable.append(rho)

    # reflect to the negative half zone by conjugation symmetry
    rho_all = np.concatenate([-rho_pos[:0:-1], rho_pos])
    lam_all = np.concatenate([np.conj(lam_tracked[:0:-1]), lam_tracked])

    if fd_h is None:
        fd_h = zone / 40.0
    lam_p0, lam_pp0 = _fd_derivatives(wt, fd_h)

    return BlochCurve(
        rho_samples=rho_all, lam_samples=lam_all, lam_p0=lam_p0,
        lam_pp0=lam_pp0, max_re=max_re, window_eigs=window,
        unstable_rhos=unstable,
    )


def _fd_derivatives(wt: WaveTrain, h: float) -> tuple[complex, complex]:
    """5-point stencil derivatives of the tracked branch at rho = 0.

    The step shrinks automatically when another eigenvalue (for trigger
    waves, the weakly damped recovery branch) drifts into the matching
    radius.
    """
    evs0 = _eigs(wt, 0.0)
    lam0 = complex(evs0[np.argmin(np.abs(evs0))])
    for attempt in range(4):
        try:
            lam = {0: lam0}
            for k in (1, 2):
                evs = _eigs(wt, k * h)
                pred = lam[k - 1] + 1j * wt.c * h
                lam[k] = _track(evs, pred, 5.0 * max(abs(1j * wt.c * h), 1e-12))
                lam[-k] = np.conj(lam[k])
            break
        except TrackingAmbiguity:
            if attempt == 3:
                raise
            h = h / 4.0
    lam_p = (-lam[2] + 8 * lam[1] - 8 * lam[-1] + lam[-2]) / (12.0 * h)
    lam_pp = (-lam[2] + 16 * lam[1] - 30 * lam[0] + 16 * lam[-1] - lam[-2]) / (12.0 * h * h)
    return lam_p, lam_pp


@dataclass(frozen=True)
class AdjointTriple:
    """Kernel, adjoint kernel, and wavenumber derivative of the profile."""

    dtheta_u: np.ndarray
    dtheta_w: np.ndarray
    u_ad: np.ndarray
    w_ad: np.ndarray
    dl_u: np.ndarray
    dl_w: np.ndarray
    pairing: float  # <kernel, adjoint>, nonzero for a simple eigenvalue


def _stationary_matrix(wt: WaveTrain) -> np.ndarray:
    model = wt.model()
    d1, d2 = wt.grid.diff_matrices()
    n = wt.n
    ell, omega, eps = wt.ell, wt.omega, wt.epsilon
    u, w = wt.u_star, wt.w_star
    a = np.zeros((2 * n, 2 * n))
    a[:n, :n] = ell * ell * d2 + omega * d1 + np.diag(model.F_u(u, w))
    a[:n, n:] = np.diag(model.F_w(u, w) + 0.0 * u)
    a[n:, :n] = np.diag(eps * model.G_u(u, w) + 0.0 * u)
    a[n:, n:] = omega * d1 + np.diag(eps * model.G_w(u, w) + 0.0 * u)
    return a


def _inverse_iterate(lu, v0: np.ndarray, trans: int = 0, sweeps: int = 3) -> np.ndarray:
    v = v0 / np.linalg.norm(v0)
    for _ in range(sweeps):
        v = lu_solve(lu, v, trans=trans, check_finite=False)
        v = v / np.linalg.norm(v)
    return v


def kernel_and_adjoint(wt: WaveTrain) -> AdjointTriple:
    """Compute the translation kernel, adjoint kernel, and d/d(ell) profile.

    The adjoint kernel is taken with respect to the theta-integral inner
    product (quadrature weights of the collocation map): it is W^{-1} times
    the kernel of the transposed collocation matrix.  The wavenumber
    derivative solves the bordered system with the frequency derivative
    omega'(ell) as the extra unknown and <d_ell profile, adjoint> = 0 as the
    extra equation.
    """
    n = wt.n
    d1, d2m = wt.grid.diff_matrices()
    wq = wt.grid.weights
    j0 = _stationary_matrix(wt)
    scale = np.max(np.abs(j0))
    j0_shift = j0 + (1e-14 * scale) * np.eye(2 * n)
    lu = lu_factor(j0_shift, check_finite=False)

    # the raw profile derivative IS the kernel up to discretization accuracy
    du = d1 @ wt.u_star
    dw = d1 @ wt.w_star
    phi = np.concatenate([du, dw])

    psi_t = _inverse_iterate(lu, phi.copy(), trans=1)
    w2 = np.concatenate([wq, wq])
    psi = psi_t / w2  # adjoint kernel in the weighted inner product

    pairing = float(w2 @ (phi * psi))
    norm_ref = float(np.linalg.norm(phi) * np.linalg.norm(psi) * np.max(wq))
    if abs(pairing) < 1e-10 * norm_ref:
        raise SolvabilityFailure("kernel/adjoint pairing vanished (degenerate train)")

    rhs0 = np.concatenate([-2.0 * wt.ell * (d2m @ wt.u_star), np.zeros(n)])
    bordered = np.zeros((2 * n + 1, 2 * n + 1))
    bordered[:2 * n, :2 * n] = j0
    bordered[:2 * n, 2 * n] = phi  # omega'(ell) multiplies (d_th u, d_th w)
    bordered[2 * n, :2 * n] = w2 * psi
    rhs = np.concatenate([rhs0, [0.0]])
    sol = np.linalg.solve(bordered, rhs)
    dl = sol[:2 * n]
    return AdjointTriple(
        dtheta_u=du, dtheta_w=dw, u_ad=psi[:n], w_ad=psi[n:],
        dl_u=dl[:n], dl_w=dl[n:], pairing=pairing,
    ), float(sol[2 * n])


def lambda_pp_adjoint(wt: WaveTrain) -> tuple[float, float]:
    """(omega'(ell), lam''(0)) from the adjoint bordered-system formula.

    Second-order perturbation theory in the Bloch frequency gives, with the
    wavenumber derivative of the profile normalized orthogonally to the
    adjoint kernel (which removes the omega' cross term),

        lam''(0) = -<(4 ell d_th d_ell u* + 2 d_th u*, 0), psi> / <phi, psi>.
    """
    triple, omega_prime = kernel_and_adjoint(wt)
    d1, _ = wt.grid.diff_matrices()
    wq = wt.grid.weights
    num_u = 4.0 * wt.ell * (d1 @ triple.dl_u) + 2.0 * triple.dtheta_u
    numer = float(wq @ (num_u * triple.u_ad))
    denom = float(wq @ (triple.dtheta_u * triple.u_ad)
                  + wq @ (triple.dtheta_w * triple.w_ad))
    return omega_prime, -numer / denom
