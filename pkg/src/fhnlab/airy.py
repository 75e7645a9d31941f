"""Airy function evaluation and the fold transmission kernels built from it.

The Airy function Ai enters the dispersion analysis of relaxation wave trains
through the spectrum of the linearized slow passage past a fold.  This module
provides

* ``airy_ai``: Ai and Ai' on the real line, accurate to 1e-12 absolute,
* ``airy_first_zero``: the magnitude of the largest (negative) zero of Ai,
* ``fold_transmission``: the entire function

      T(z) = z / Ai'(-z0)^2 * int_{-z0}^{inf} exp(-z(s+z0)) (Ai'(s)^2 - s Ai(s)^2) ds

  with z0 the largest-zero magnitude; T(0)=0, T'(0)=2*z0/3, T -> 1 along the
  positive axis,
* ``fold_scattering``: the rescaled kernel T(-z^2/(theta*c^3)) attached to a
  fold with normal-form constant theta and wave speed c.

Evaluation strategy for Ai: Maclaurin series for |s| <= 4, Taylor expansions
about precomputed high-precision anchors for 4 < |s| < 9.5 (down to s = -10.5),
and the standard asymptotic expansion for s >= 9.5.  The kernel integrals use
composite Gauss-Legendre panels with a tail cutoff chosen so that the
superexponential decay of Ai^2 dominates the exponential factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import AiryDomainError

# Ai(0) = 3^(-2/3)/Gamma(2/3), Ai'(0) = -3^(-1/3)/Gamma(1/3)
_AI0 = 0.3550280538878172392601
_AIP0 = -0.2588194037928067984052

# (Ai, Ai') at integer anchors, 22 significant digits, for Taylor stepping in
# the mid-range where the Maclaurin series loses digits to cancellation and
# the asymptotic series has not yet converged.
_ANCHORS = {
    -10: (0.04024123848644319068943, 0.9962650441327900559046),
    -9: (-0.02213372154734140367417, -0.9756639809263315947127),
    -8: (-0.05270505035638620262208, 0.9355609381983065510255),
    -7: (0.1842808352505056372799, -0.7710081684101265477313),
    -6: (-0.3291451736298231052314, 0.3459354872813428949298),
    -5: (0.350761009024114319788, 0.3271928185544431367949),
    -4: (-0.07026553294928951509908, -0.7906285753685813802965),
    4: (0.0009515638512048018736215, -0.001958640950204178900138),
    5: (0.0001083444281360744173499, -0.0002474138908684624760002),
    6: (9.947694360252889570239e-6, -2.476520039703495475418e-5),
    7: (7.492128863997167080771e-7, -2.008150894738791991169e-6),
    8: (4.692207616099231625649e-8, -1.341439297906786574291e-7),
    9: (2.471168430872489843289e-9, -7.48064138965894641276e-9),
    10: (1.104753255289868593355e-10, -3.520633676738923636621e-10),
}

_SERIES_CUT = 4.0      # Maclaurin below, anchored Taylor above
_ASYMPTOTIC_CUT = 9.5  # anchored Taylor below, asymptotic expansion above
_SUPPORT_MIN = -10.5   # callers never need Ai further down the negative axis


def _asymptotic_coeffs(kmax: int = 24) -> tuple[np.ndarray, np.ndarray]:
    u = np.empty(kmax + 1)
    v = np.empty(kmax + 1)
    u[0] = v[0] = 1.0
    for k in range(kmax):
        u[k + 1] = u[k] * (6 * k + 5) * (6 * k + 3) * (6 * k + 1) / (216 * (k + 1) * (2 * k + 1))
        v[k + 1] = u[k + 1] * (6 * (k + 1) + 1) / (1 - 6 * (k + 1))
    return u, v


_UK, _VK = _asymptotic_coeffs()


def _ai_maclaurin(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Ai = c1*f - c2*g with f'' = s f, g'' = s g, f(0)=1, g'(0)=1.
    s3 = s * s * s
    f = np.ones_like(s)
    fp = np.zeros_like(s)
    g = s.copy()
    gp = np.ones_like(s)
    tf = np.ones_like(s)
    tg = s.copy()
    for k in range(60):
        # term_{k+1} = term_k * s^3 / ((3k+2)(3k+3)) for f, /((3k+3)(3k+4)) for g
        tf = tf * s3 / ((3 * k + 2) * (3 * k + 3))
        tg = tg * s3 / ((3 * k + 3) * (3 * k + 4))
        f += tf
        g += tg
        with np.errstate(invalid="ignore", divide="ignore"):
            fp += tf * (3 * k + 3) / np.where(s != 0.0, s, 1.0)
            gp += tg * (3 * k + 4) / np.where(s != 0.0, s, 1.0)
        if max(np.max(np.abs(tf)), np.max(np.abs(tg))) < 1e-19:
            break
    c1, c2 = _AI0, -_AIP0
    return c1 * f - c2 * g, c1 * fp - c2 * gp


def _ai_anchored(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ai = np.empty_like(s)
    aip = np.empty_like(s)
    anchor = np.clip(np.rint(s), -10, 10).astype(int)
    for a in np.unique(anchor):
        mask = anchor == a
        h = s[mask] - a
        y0, y1 = _ANCHORS[int(a)]
        # Taylor coefficients of y'' = x*y about x = a.
        c = np.zeros(30)
        c[0], c[1] = y0, y1
        c[2] = a * c[0] / 2.0
        for k in range(1, 28):
            c[k + 2] = (a * c[k] + c[k - 1]) / ((k + 1) * (k + 2))
        val = np.zeros_like(h)
        der = np.zeros_like(h)
        hp = np.ones_like(h)
        for k in range(30):
            val += c[k] * hp
            if k + 1 < 30:
                der += (k + 1) * c[k + 1] * hp
            hp = hp * h
        ai[mask] = val
        aip[mask] = der
    return ai, aip


def _ai_asymptotic(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    zeta = (2.0 / 3.0) * s ** 1.5
    pref = np.exp(-zeta) / (2.0 * np.sqrt(np.pi) * s ** 0.25)
    prefp = -(s ** 0.25) * np.exp(-zeta) / (2.0 * np.sqrt(np.pi))
    su = np.ones_like(s)
    sv = np.ones_like(s)
    term = np.ones_like(s)
    sign = 1.0
    for k in range(1, len(_UK)):
        sign = -sign
        term = term / zeta
        su = su + sign * _UK[k] * term
        sv = sv + sign * _VK[k] * term
    return pref * su, prefp * sv


def airy_ai(s):
    """Evaluate (Ai(s), Ai'(s)) for real s >= -10.5, elementwise on arrays.

    Absolute accuracy is 1e-12 or better throughout the supported range.
    """
    s_arr = np.asarray(s, dtype=float)
    scalar = s_arr.ndim == 0
    s_arr = np.atleast_1d(s_arr)
    if np.any(s_arr < _SUPPORT_MIN):
        raise AiryDomainError(f"airy_ai supports s >= {_SUPPORT_MIN}")
    ai = np.empty_like(s_arr)
    aip = np.empty_like(s_arr)
    m1 = np.abs(s_arr) <= _SERIES_CUT
    m3 = s_arr >= _ASYMPTOTIC_CUT
    m2 = ~(m1 | m3)
    if np.any(m1):
        ai[m1], aip[m1] = _ai_maclaurin(s_arr[m1])
    if np.any(m2):
        ai[m2], aip[m2] = _ai_anchored(s_arr[m2])
    if np.any(m3):
        ai[m3], aip[m3] = _ai_asymptotic(s_arr[m3])
    if scalar:
        return float(ai[0]), float(aip[0])
    return ai, aip


@lru_cache(maxsize=1)
def airy_first_zero() -> float:
    """Magnitude of the largest (negative) zero of Ai.

    Bisection bracket on [2, 3] followed by Newton polish; the returned x
    satisfies |Ai(-x)| < 1e-13.
    """
    lo, hi = 2.0, 3.0
    flo = airy_ai(-lo)[0]
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        fmid = airy_ai(-mid)[0]
        if flo * fmid <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    x = 0.5 * (lo + hi)
    for _ in range(6):
        f, fp = airy_ai(-x)
        x = x - f / (-fp)
    return float(x)


def _gauss_panels(a: float, b: float, n_panels: int, nodes_per_panel: int):
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    return s, ws


def _tail_cutoff(re_min: float) -> float:
    # smallest s with (4/3) s^(3/2) - |re_min| s >= 40 (superexponential
    # decay of Ai^2 beats the exponential factor by e^-40)
    s = 10.0
    for _ in range(60):
        s = (0.75 * (40.0 + abs(re_min) * s)) ** (2.0 / 3.0)
    return s


@dataclass(frozen=True)
class AiryTable:
    """Immutable cache of Airy data used by the transmission kernel.

    ``nodes``/``weights`` discretize [-omega0, s_max] with composite
    Gauss-Legendre panels; ``p_vals`` and ``q_vals`` hold the two integrand
    profiles (Ai'^2 - s Ai^2)/Ai'(-omega0)^2 and Ai^2/Ai'(-omega0)^2.
    """

    omega0: float
    aip_at_zero_sq: float
    s_max: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    p_vals: np.ndarray = field(repr=False)
    q_vals: np.ndarray = field(repr=False)
    self_check: float = 0.0

    @staticmethod
    def build(panel_width: float = 0.5, nodes_per_panel: int = 16) -> "AiryTable":
        om = airy_first_zero()
        aip_sq = airy_ai(-om)[1] ** 2
        s_max = _tail_cutoff(-1.0)
        n_panels = int(np.ceil((s_max + om) / panel_width))

        def make(npp):
            s, w = _gauss_panels(-om, s_max, n_panels, npp)
            ai, aip = airy_ai(s)
            p = (aip * aip - s * ai * ai) / aip_sq
            q = ai * ai / aip_sq
            return s, w, p, q

        s, w, p, q = make(nodes_per_panel)
        _, w2, _, q2 = make(2 * nodes_per_panel)
        check = abs(float(w @ q) - float(w2 @ q2))
        if check > 1e-12:
            raise AiryDomainError(f"quadrature self-check failed: {check:.3e}")
        return AiryTable(
            omega0=om, aip_at_zero_sq=float(aip_sq), s_max=float(s_max),
            nodes=s, weights=w, p_vals=p, q_vals=q, self_check=check,
        )


_TABLE: AiryTable | None = None


def airy_table() -> AiryTable:
    """Shared immutable Airy cache (built on first use)."""
    global _TABLE
    if _TABLE is None:
        _TABLE = AiryTable.build()
    return _TABLE


def _concentrated_rule(re_z: float, table: AiryTable):
    # For strongly damped integrands the fixed 0.5-wide panels cannot resolve
    # exp(-re_z * s); integrate on [-omega0, -omega0 + 40/re_z] instead.
    om = table.omega0
    s_hi = min(-om + 40.0 / re_z, table.s_max)
    s, w = _gauss_panels(-om, s_hi, 24, 16)
    ai, aip = airy_ai(s)
    q = ai * ai / table.aip_at_zero_sq
    p = (aip * aip - s * ai * ai) / table.aip_at_zero_sq
    return s, w, p, q


def _kernel_quadrature(z: np.ndarray, use_tail_form: np.ndarray) -> np.ndarray:
    table = airy_table()
    om = table.omega0
    out = np.empty(z.shape, dtype=complex)
    for idx in np.ndindex(z.shape):
        zz = complex(z[idx])
        if zz == 0.0:
            out[idx] = 0.0
            continue
        if zz.real > 3.0:
            s, w, p, q = _concentrated_rule(zz.real, table)
        else:
            s, w, p, q = table.nodes, table.weights, table.p_vals, table.q_vals
        damp = np.exp(-zz * (s + om))
        if use_tail_form[idx]:
            out[idx] = 1.0 - np.sum(w * damp * q)
        else:
            out[idx] = zz * np.sum(w * damp * p)
    return out


def fold_transmission(z, form: str = "auto"):
    """Transmission kernel T(z) of slow modulations through a fold.

    T is entire with T(0) = 0 exactly, T'(0) = 2*omega0/3, strictly increasing
    on the real axis, and T(z) -> 1 as Re(z) -> +inf.  Supported arguments have
    Re(z) >= -1 (the half-plane on which the derivative stays bounded and which
    covers every caller in the dispersion computations).

    ``form`` selects the integral representation: "direct" uses the defining
    integral with the (Ai'^2 - s Ai^2) profile, "tail" the integrated-by-parts
    form 1 - int exp(-z(s+omega0)) Ai^2 / Ai'(-omega0)^2, and "auto" picks
    "tail" for Re(z) >= 0 (accurate for large |z|) and "direct" otherwise.
    """
    z_arr = np.asarray(z, dtype=complex)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    if np.any(z_arr.real < -1.0):
        raise AiryDomainError("fold_transmission requires Re(z) >= -1")
    if form == "auto":
        tail = z_arr.real >= 0.0
    elif form == "tail":
        tail = np.ones(z_arr.shape, dtype=bool)
    elif form == "direct":
        tail = np.zeros(z_arr.shape, dtype=bool)
    else:
        raise ValueError(f"unknown form {form!r}")
    out = _kernel_quadrature(z_arr, tail)
    if scalar:
        return complex(out[0])
    return out


def fold_transmission_deriv(z):
    """Derivative T'(z) = int exp(-z(s+omega0)) (s+omega0) Ai^2 ds / Ai'(-omega0)^2."""
    table = airy_table()
    om = table.omega0
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    scalar = np.asarray(z).ndim == 0
    if np.any(z_arr.real < -1.0):
        raise AiryDomainError("fold_transmission_deriv requires Re(z) >= -1")
    out = np.empty(z_arr.shape, dtype=complex)
    for idx in np.ndindex(z_arr.shape):
        zz = complex(z_arr[idx])
        if zz.real > 3.0:
            s, w, _, q = _concentrated_rule(zz.real, table)
        else:
            s, w, q = table.nodes, table.weights, table.q_vals
        out[idx] = np.sum(w * np.exp(-zz * (s + om)) * (s + om) * q)
    if scalar:
        return complex(out[0])
    return out


def fold_scattering(z, theta: float, c: float):
    """Scattering factor attached to one fold: T(-z^2/(theta*c^3)).

    ``theta`` is the positive normal-form rescaling constant of the fold and
    ``c`` the wave speed.  For purely imaginary z the argument of T is a
    nonnegative real number, so the factor is real and lies in [0, 1).
    """
    if theta <= 0.0 or c <= 0.0:
        raise ValueError("fold_scattering requires theta > 0 and c > 0")
    z_arr = np.asarray(z, dtype=complex)
    return fold_transmission(-z_arr * z_arr / (theta * c ** 3))


def fold_scattering_deriv(z, theta: float, c: float):
    """d/dz of ``fold_scattering`` at z (chain rule through the kernel)."""
    z_arr = np.asarray(z, dtype=complex)
    arg = -z_arr * z_arr / (theta * c ** 3)
    return fold_transmission_deriv(arg) * (-2.0 * z_arr / (theta * c ** 3))
