"""Traveling waves with a necrotic tail, a saturated rim and outer density.

Frame: the core/rim interface sits at x = 0 and the front at x = R.  The
construction follows four nested unknowns:

* ``A(sigma)``: the log-derivative c'/c at x = 0 of the decaying nutrient
  in the tail, from the Riccati equation ``a' = psi(n) - a**2``;
* ``B(sigma, c_R)``: the separatrix slope c'(R) of the outer shooting
  problem (in vivo only);
* ``R_sigma``: the rim width giving p(R) = 0, i.e. ``int_0^1 s G(gamma) ds = 0``;
* ``sigma``: the velocity law ``(1 - n_R) sigma = R int_0^1 G(gamma) ds``.

Writing ``k = sqrt(psi(1))`` the rim nutrient is
``c(R - R s) = gamma(s) = c_R cosh(kRs) - (c_R'/k) sinh(kRs)`` and the tail
condition gives ``c_R' / (k c_R) = tanh(k R + phi)`` with ``tanh(phi) = A/k``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import bisect, brentq

from . import _kernels as K
from .model import (IN_VITRO, IN_VIVO, IgnitionConstant, ModelParams, NumericsConfig,
                    TwoLevel)

log = logging.getLogger(__name__)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


class TWError(RuntimeError):
    """Construction failed; ``diagnostics`` carries whatever was computed."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class TruncationError(TWError):
    pass


class ShootingBracketError(TWError):
    pass


class RegimeError(TWError):
    pass


class NoWaveFound(TWError):
    pass


@dataclass(frozen=True)
class TWConfig:
    n_R: float
    mode: str
    params: ModelParams
    numerics: NumericsConfig = NumericsConfig()
    shoot_dx: float = 5e-3
    n_scan: int = 5

    def __post_init__(self):
        if not 0.0 <= self.n_R < 1.0:
            raise ValueError("n_R must lie in [0, 1)")
        if self.mode not in (IN_VITRO, IN_VIVO):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == IN_VIVO:
            p = self.params
            k = math.sqrt(float(p.consumption(1.0)))
            if not p.c_thresh < p.c_B / (1.0 + k):
                raise ValueError("in vivo waves need c_thresh < c_B / (1 + sqrt(psi(1)))")


@dataclass
class ShootOutcome:
    """Outer trajectory classification.

    ``kind`` is "I" (u hits 0 at ``z``) or "II" (u stays positive);
    ``truncated`` marks a Type II decided only by the end of the range.
    """

    kind: str
    z: Optional[float]
    terminal_gap: Optional[float]
    truncated: bool
    x: np.ndarray
    c: np.ndarray
    u: np.ndarray
    n: np.ndarray


@dataclass
class TWSolution:
    sigma: float
    R: float
    c_R: float
    c_R_prime: float
    A_sigma: float
    n_R: float
    mode: str
    x: np.ndarray
    n: np.ndarray
    p: np.ndarray
    c: np.ndarray
    residuals: dict = field(default_factory=dict)
    sign_changes: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def x_min(self):
        return float(self.x[0])

    def summary_row(self):
        return (self.n_R, self.sigma, self.R, self.c_R, self.c_R_prime,
                self.residuals.get("velocity_law", math.nan))


# --------------------------------------------------------------------------
# small helpers
# --------------------------------------------------------------------------

def _k(params):
    return math.sqrt(float(params.consumption(1.0)))


def _g_at(params, c):
    return float(params.growth(c))


def _check_open(lo, x, hi, name):
    if not lo < x < hi:
        raise ValueError(f"{name}={x} outside ({lo}, {hi})")


# --------------------------------------------------------------------------
# A(sigma)
# --------------------------------------------------------------------------

def _tail_start(sigma, params, numerics):
    # far enough that psi(n) is negligible: n = exp(-40) at the start
    return -max(numerics.L_trunc, 40.0 * sigma / params.g_minus)


def _riccati(sigma, params, numerics, dense=False):
    gm, psi = params.g_minus, params.consumption
    x0 = _tail_start(sigma, params, numerics)

    def rhs(x, y):
        nv = math.exp(min(gm * x / sigma, 0.0))
        return [float(psi(nv)) - y[0] * y[0], y[0]]

    a0 = math.sqrt(float(psi(math.exp(gm * x0 / sigma))))
    sol = solve_ivp(rhs, (x0, 0.0), [a0, 0.0], method="DOP853", rtol=1e-12, atol=1e-14,
                    dense_output=dense)
    if not sol.success:
        raise TruncationError(f"Riccati integration failed: {sol.message}")
    return sol


def riccati_A(sigma: float, params: ModelParams,
              numerics: Optional[NumericsConfig] = None) -> float:
    """c'/c at the core interface for the tail density n = exp(g_minus x / sigma).

    Raises
    ------
    TruncationError
        if the result falls outside [0, sqrt(psi(1))).
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    numerics = numerics or NumericsConfig()
    k = _k(params)
    if k == 0.0:
        return 0.0
    A = float(_riccati(sigma, params, numerics).y[0, -1])
    if not (-1e-12 <= A < k):
        raise TruncationError(f"A={A} outside [0, {k}); increase L_trunc",
                              {"A": A, "k": k})
    return max(A, 0.0)


# --------------------------------------------------------------------------
# outer shooting
# --------------------------------------------------------------------------

def _shoot(sigma, c_R, cp, n_R, params, length, dx, record):
    gk, gp, gx, gy = params.growth.encode()
    pk, pp, px, py = params.consumption.encode()
    return K.shoot_outer(float(c_R), float(cp), float(n_R), float(sigma), float(params.c_B),
                         float(length), float(dx), gk, gp, gx, gy, pk, pp, px, py, record)


def classify_shot(sigma: float, c_R: float, c_R_prime: float, n_R: float, R: float,
                  params: ModelParams, numerics: Optional[NumericsConfig] = None,
                  dx: float = 5e-3) -> ShootOutcome:
    """Integrate the outer system from x = R and classify the trajectory.

    A trajectory is Type II as soon as c reaches c_B with u > 0 (after that
    u' > 0 forever); if neither event happens within ``L_trunc`` it is
    reported as a truncated Type II.
    """
    numerics = numerics or NumericsConfig()
    if c_R_prime < 0:
        raise ValueError("c_R_prime must be non-negative")
    if float(params.consumption(n_R)) == 0.0:
        return _linear_shot(c_R, c_R_prime, R, params, numerics.L_trunc, dx)
    code, z, c_end, u_end, n_end, nst, xs, cs, us, ns = _shoot(
        sigma, c_R, c_R_prime, n_R, params, numerics.L_trunc, dx, True)
    xs = xs + R
    if code == K.TYPE_I:
        return ShootOutcome("I", R + z, None, False, xs, cs, us, ns)
    return ShootOutcome("II", None, abs(c_end - params.c_B), code == K.TYPE_II_TRUNCATED,
                        xs, cs, us, ns)


def _linear_shot(c_R, cp, R, params, length, dx):
    """Exact outer trajectory without consumption: (c_B - c)'' = c_B - c."""
    w0 = params.c_B - c_R
    xi = np.arange(0.0, length + 0.5 * dx, dx)
    kind, z = "II", None
    if cp < w0:
        kind, z = "I", math.atanh(cp / w0)
        xi = xi[xi < z]
        xi = np.append(xi, z)
    ep, em = np.exp(xi), np.exp(-xi)
    w = 0.5 * ((w0 - cp) * ep + (w0 + cp) * em)
    u = 0.5 * ((cp - w0) * ep + (cp + w0) * em)
    c = params.c_B - w
    n = np.zeros_like(xi)
    if kind == "I":
        return ShootOutcome("I", R + z, None, False, xi + R, c, u, n)
    return ShootOutcome("II", None, abs(w[-1]), True, xi + R, c, u, n)


def lemma_bracket(c_R: float, n_R: float, params: ModelParams) -> Tuple[float, float]:
    """Lower and upper bounds for B(sigma, c_R)."""
    q = 1.0 + float(params.consumption(n_R))
    return params.c_B / math.sqrt(q) - math.sqrt(q) * c_R, params.c_B - c_R


def shoot_B(sigma: float, c_R: float, n_R: float, params: ModelParams,
            numerics: Optional[NumericsConfig] = None, dx: float = 5e-3,
            hint: Optional[Tuple[float, float]] = None) -> float:
    """Separatrix slope c'(R) between Type I and Type II outer trajectories.

    For n_R = 0 the bracket collapses and B = c_B - c_R exactly.  ``hint``
    is an optional (Type I, Type II) pair of slopes known to bracket B; it
    is intersected with the a priori bracket and not re-checked.
    """
    numerics = numerics or NumericsConfig()
    psi_R = float(params.consumption(n_R))
    _check_open(params.c_thresh, c_R, params.c_B / (1.0 + psi_R), "c_R")
    lo, hi = lemma_bracket(c_R, n_R, params)
    if psi_R == 0.0 or hi - lo <= numerics.bisect_tol:
        return hi
    L = numerics.L_trunc
    if hint is not None and lo <= hint[0] < hint[1] <= hi:
        lo, hi = hint
    else:
        code_lo = _shoot(sigma, c_R, lo, n_R, params, L, dx, False)[0]
        code_hi = _shoot(sigma, c_R, hi, n_R, params, L, dx, False)[0]
        if (code_lo == K.TYPE_I) == (code_hi == K.TYPE_I):
            raise ShootingBracketError(
                "bracket endpoints classify identically",
                {"sigma": sigma, "c_R": c_R, "lo": lo, "hi": hi, "codes": (code_lo, code_hi)})
    while hi - lo > numerics.bisect_tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _shoot(sigma, c_R, mid, n_R, params, L, dx, False)[0] == K.TYPE_I:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


# --------------------------------------------------------------------------
# threshold on n_R
# --------------------------------------------------------------------------

def _nbar_feasible(psi_n, params):
    k = _k(params)
    cb, cbar = params.c_B, params.c_thresh
    q = np.sqrt(1.0 + psi_n)
    cond1 = cb / q - cbar * q > cbar * k
    C = cb / (q * (q + k))
    t = psi_n / k
    ok_t = t < 1.0
    s = np.arctanh(np.where(ok_t, t, 0.0))
    cond2 = ok_t & (C > cbar * np.exp(s))
    return cond1 & cond2


def threshold_nbar(params: ModelParams, scan_step: float = 1e-3, tol: float = 1e-12) -> float:
    """Largest density n_R (supremum of the feasible set) for the in vivo theory."""
    k = _k(params)
    if not params.c_thresh < params.c_B / (1.0 + k):
        raise ValueError("needs c_thresh < c_B / (1 + sqrt(psi(1)))")
    psi = params.consumption

    def feas(n):
        return bool(_nbar_feasible(np.asarray(float(psi(n))), params))

    if feas(1.0):
        return 1.0
    grid = np.arange(1.0, 0.0, -scan_step)
    vals = _nbar_feasible(np.asarray(psi(grid), dtype=float), params)
    hits = np.nonzero(vals)[0]
    if hits.size == 0:
        hi, lo = scan_step, 0.0
    else:
        lo, hi = grid[hits[0]], grid[hits[0]] + scan_step
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feas(mid):
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


# --------------------------------------------------------------------------
# rim geometry
# --------------------------------------------------------------------------

def R0_of_nR(n_R: float, params: ModelParams) -> float:
    k = _k(params)
    t = float(params.consumption(n_R)) / k
    if not t < 1.0:
        raise ValueError("psi(n_R) / sqrt(psi(1)) must be below 1")
    return math.atanh(t) / k


def _gauss_pieces(a, b, cuts):
    pts = [a] + [c for c in sorted(cuts) if a < c < b] + [b]
    xs, ws = [], []
    for s0, s1 in zip(pts[:-1], pts[1:]):
        xs.append(0.5 * (s1 - s0) * _GL_X + 0.5 * (s0 + s1))
        ws.append(0.5 * (s1 - s0) * _GL_W)
    return np.concatenate(xs), np.concatenate(ws)


def _Rb_integral(R, params):
    k = _k(params)
    cuts = []
    arg = params.c_B / params.c_thresh
    if R > 0:
        s_star = math.acosh(arg) / (k * R)
        cuts.append(s_star)
    s, w = _gauss_pieces(0.0, 1.0, cuts)
    return float(np.sum(w * s * params.growth(params.c_B / np.cosh(k * R * s))))


def R_b(params: ModelParams, tol: float = 1e-12) -> float:
    """Rim width bound: int_0^1 s G(c_B / cosh(k R_b s)) ds = 0."""
    if not params.c_thresh < params.c_B:
        raise ValueError("needs c_thresh < c_B")
    hi = 1.0
    while _Rb_integral(hi, params) > 0:
        hi *= 2.0
    return bisect(lambda R: _Rb_integral(R, params), 1e-12, hi, xtol=tol, maxiter=500)


def _rho(R, A, k):
    return (A * math.cosh(k * R) + k * math.sinh(k * R)) / (A * math.sinh(k * R) + k * math.cosh(k * R))


def _gamma(s, R, c_R, A, k):
    s = np.asarray(s, dtype=float)
    num = A * np.sinh(k * R * (1 - s)) + k * np.cosh(k * R * (1 - s))
    den = A * math.sinh(k * R) + k * math.cosh(k * R)
    return c_R * num / den


def gamma_eval(sigma: float, R: float, s, c_R: float, params: ModelParams,
               numerics: Optional[NumericsConfig] = None, A: Optional[float] = None):
    """Rim nutrient at x = R (1 - s) for slope ratio A(sigma)."""
    A = riccati_A(sigma, params, numerics) if A is None else A
    out = _gamma(s, R, c_R, A, _k(params))
    return out if out.ndim else float(out)


def _kink(R, c_R, A, params):
    """s in (0, 1) with gamma = c_thresh, or None when no crossing."""
    k, cbar = _k(params), params.c_thresh
    g0, g1 = c_R, float(_gamma(1.0, R, c_R, A, k))
    if not g1 < cbar < g0:
        return None
    return brentq(lambda s: float(_gamma(s, R, c_R, A, k)) - cbar, 0.0, 1.0,
                  xtol=1e-15, rtol=4 * np.finfo(float).eps)


def rim_integrals(R, c_R, A, params):
    """(int_0^1 s G(gamma) ds, int_0^1 G(gamma) ds) with the kink split."""
    k = _k(params)
    sk = _kink(R, c_R, A, params)
    s, w = _gauss_pieces(0.0, 1.0, [] if sk is None else [sk])
    g = params.growth(_gamma(s, R, c_R, A, k))
    return float(np.sum(w * s * g)), float(np.sum(w * g))


def solve_cR(sigma: float, R: float, n_R: float, params: ModelParams,
             numerics: Optional[NumericsConfig] = None, dx: float = 5e-3,
             A: Optional[float] = None) -> float:
    """c_R matching the tail condition and the outer separatrix at rim width R."""
    numerics = numerics or NumericsConfig()
    k = _k(params)
    A = riccati_A(sigma, params, numerics) if A is None else A
    rho = _rho(R, A, k)
    psi_R = float(params.consumption(n_R))
    top = params.c_B / (1.0 + psi_R)
    if psi_R == 0.0:
        return params.c_B / (1.0 + k * rho)

    def f(c):
        return shoot_B(sigma, c, n_R, params, numerics, dx) / k - c * rho

    eps = 1e-12 * params.c_B
    lo, hi = params.c_thresh + eps, top - eps
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise RegimeError("no sign change for c_R", {"f_lo": flo, "f_hi": fhi, "R": R})
    return bisect(f, lo, hi, xtol=numerics.bisect_tol, maxiter=500)


@dataclass
class RimSolution:
    R: float
    c_R: float
    c_R_prime: float
    A: float
    integral: float


def _R_from_q(q, A, k):
    return (math.atanh(q) - math.atanh(A / k)) / k


def solve_Rsigma(sigma: float, n_R: float, params: ModelParams,
                 numerics: Optional[NumericsConfig] = None, dx: float = 5e-3,
                 A: Optional[float] = None) -> RimSolution:
    """Rim width R_sigma with p(R) = 0 for the in vivo wave.

    The rim width is a monotone function of c_R once B(sigma, c_R) is known,
    ``R = (artanh(B / (k c_R)) - artanh(A / k)) / k``, so the search runs
    over c_R with a single shooting solve per evaluation.
    """
    numerics = numerics or NumericsConfig()
    k = _k(params)
    A = riccati_A(sigma, params, numerics) if A is None else A
    tphi = A / k
    psi_R = float(params.consumption(n_R))
    top = params.c_B / (1.0 + psi_R)
    gm = params.g_minus

    # B decreases in c_R, so earlier evaluations bracket later ones
    seen = []

    def state(c):
        below = [b for cc, b in seen if cc > c]
        above = [b for cc, b in seen if cc < c]
        hint = None
        if below and above:
            hint = (max(below) - 4 * numerics.bisect_tol, min(above) + 4 * numerics.bisect_tol)
        B = shoot_B(sigma, c, n_R, params, numerics, dx, hint)
        seen.append((c, B))
        return B / (k * c), B

    def I_of_c(c):
        q, B = state(c)
        if q >= 1.0:
            return -0.5 * gm
        if q <= tphi:
            return 0.5 * _g_at(params, c)
        return rim_integrals(_R_from_q(q, A, k), c, A, params)[0]

    eps = 1e-12 * params.c_B
    lo, hi = params.c_thresh + eps, top - eps
    flo, fhi = I_of_c(lo), I_of_c(hi)
    if flo * fhi > 0:
        raise RegimeError("no sign change for the rim condition",
                          {"I_lo": flo, "I_hi": fhi, "sigma": sigma})
    c_R = brentq(I_of_c, lo, hi, xtol=numerics.bisect_tol, rtol=4 * np.finfo(float).eps,
                 maxiter=500)
    q, B = state(c_R)
    if not tphi < q < 1.0:
        raise RegimeError("rim width degenerate at the root", {"q": q, "sigma": sigma})
    R = _R_from_q(q, A, k)
    return RimSolution(R, c_R, B, A, rim_integrals(R, c_R, A, params)[0])


def _solve_R_invitro(A, params, numerics):
    """Rim width with c_R = c_B for the in vitro wave."""
    k = _k(params)
    Rb = R_b(params)

    def I(R):
        return rim_integrals(R, params.c_B, A, params)[0]

    hi = Rb
    while I(hi) > 0:
        hi *= 1.5
    R = bisect(I, 1e-12, hi, xtol=numerics.bisect_tol, maxiter=500)
    cp = params.c_B * k * _rho(R, A, k)
    return RimSolution(R, params.c_B, cp, A, I(R))


# --------------------------------------------------------------------------
# speed
# --------------------------------------------------------------------------

def _rim_for_sigma(sigma, cfg: TWConfig):
    A = riccati_A(sigma, cfg.params, cfg.numerics)
    if cfg.mode == IN_VIVO:
        return solve_Rsigma(sigma, cfg.n_R, cfg.params, cfg.numerics, cfg.shoot_dx, A)
    return _solve_R_invitro(A, cfg.params, cfg.numerics)


def _velocity_gap(sigma, cfg):
    rim = _rim_for_sigma(sigma, cfg)
    _, iG = rim_integrals(rim.R, rim.c_R, rim.A, cfg.params)
    return rim.R * iG - (1.0 - cfg.n_R) * sigma, rim


def solve_sigma(cfg: TWConfig) -> TWSolution:
    """Wave speed from the velocity law, with assembled profiles.

    The bracket ``[sigma_lo, sigma_hi]`` is scanned at ``cfg.n_scan`` points
    and every sign change of ``R int G - (1 - n_R) sigma`` is recorded in
    ``sign_changes``; the root in the first one is returned.

    Raises
    ------
    NoWaveFound
        n_R outside the covered range or no sign change on the bracket.
    """
    params, numerics = cfg.params, cfg.numerics
    if cfg.mode == IN_VIVO:
        nbar = threshold_nbar(params)
        if not cfg.n_R < nbar:
            raise NoWaveFound(f"n_R={cfg.n_R} not below the threshold {nbar:.6g}",
                              {"n_bar": nbar})
    Rb = R_b(params)
    g_top = params.growth.sup(params.c_B)
    sigma_hi = 1.01 * Rb * g_top / (1.0 - cfg.n_R)
    sigma_lo = 1e-3 * sigma_hi
    grid = np.geomspace(sigma_lo, sigma_hi, max(cfg.n_scan, 2))
    vals = []
    for s in grid:
        try:
            vals.append(_velocity_gap(s, cfg)[0])
        except TWError as exc:
            vals.append(math.nan)
            log.warning("sigma=%g failed: %s", s, exc)
    vals = np.array(vals)
    changes = [(float(grid[i]), float(grid[i + 1])) for i in range(len(grid) - 1)
               if np.isfinite(vals[i]) and np.isfinite(vals[i + 1]) and vals[i] * vals[i + 1] <= 0]
    if not changes:
        raise NoWaveFound("no sign change of the velocity law on the sigma bracket",
                          {"sigma": grid.tolist(), "gap": vals.tolist()})
    a, b = changes[0]
    sigma = brentq(lambda s: _velocity_gap(s, cfg)[0], a, b, xtol=numerics.bisect_tol,
                   rtol=4 * np.finfo(float).eps, maxiter=200)
    gap, rim = _velocity_gap(sigma, cfg)
    sol = assemble_profiles(sigma, rim, cfg)
    sol.sign_changes = changes
    sol.residuals["velocity_gap"] = abs(gap)
    return sol


# --------------------------------------------------------------------------
# profiles
# --------------------------------------------------------------------------

def _rim_pressure(x, R, c_R, cp, params):
    """p(x) = -int_0^x (x - z) G(c(z)) dz on rim nodes x, and p'(R)."""
    k = _k(params)

    def c_of(z):
        return c_R * np.cosh(k * (z - R)) + (cp / k) * np.sinh(k * (z - R))

    cuts = []
    zk = None
    if float(c_of(0.0)) < params.c_thresh < c_R:
        zk = brentq(lambda z: float(c_of(z)) - params.c_thresh, 0.0, R, xtol=1e-15)
        cuts.append(zk)
    pts = np.concatenate(([0.0], x))
    F1 = np.zeros(pts.size)
    F2 = np.zeros(pts.size)
    gx, gw = np.polynomial.legendre.leggauss(8)
    for i in range(1, pts.size):
        z, w = [], []
        seg = [pts[i - 1]] + [c for c in cuts if pts[i - 1] < c < pts[i]] + [pts[i]]
        for a, b in zip(seg[:-1], seg[1:]):
            z.append(0.5 * (b - a) * gx + 0.5 * (a + b))
            w.append(0.5 * (b - a) * gw)
        z, w = np.concatenate(z), np.concatenate(w)
        g = params.growth(c_of(z))
        F1[i] = F1[i - 1] + np.sum(w * g)
        F2[i] = F2[i - 1] + np.sum(w * z * g)
    p = -(pts * F1 - F2)
    return p[1:]


def assemble_profiles(sigma: float, rim: RimSolution, cfg: TWConfig,
                      h: Optional[float] = None, L_right: Optional[float] = None) -> TWSolution:
    """Profiles of n, p, c on [-L, R + L_right] and the residual checks.

    The grid is uniform with spacing ``h`` and has a node at x = 0.
    """
    params, numerics = cfg.params, cfg.numerics
    h = h or numerics.h
    k = _k(params)
    R, c_R, cp, A = rim.R, rim.c_R, rim.c_R_prime, rim.A
    L = numerics.L_trunc
    L_right = numerics.L_trunc if L_right is None else L_right
    m_left = int(round(L / h))
    m_right = int(math.ceil((R + L_right) / h))
    x = np.arange(-m_left, m_right + 1) * h
    n = np.empty_like(x)
    c = np.empty_like(x)
    p = np.zeros_like(x)

    core = x < 0
    rim_m = (x >= 0) & (x < R)
    out = x >= R

    # tail: n = exp(g_minus x / sigma), c from the integrated log-derivative
    n[core] = np.exp(params.g_minus * x[core] / sigma)
    c0 = float(_gamma(1.0, R, c_R, A, k))
    xc = x[core]
    if isinstance(params.consumption, TwoLevel):
        # psi is constant on n < 1, so the tail is an exact exponential
        c[core] = c0 * np.exp(A * xc)
    else:
        ric = _riccati(sigma, params, numerics, dense=True)
        x0 = ric.t[0]
        logc = ric.sol(np.maximum(xc, x0))[1] - ric.y[1, -1]
        logc = np.where(xc >= x0, logc, logc + ric.y[0, 0] * (xc - x0))
        c[core] = c0 * np.exp(logc)

    # rim
    xr = x[rim_m]
    n[rim_m] = 1.0
    c[rim_m] = c_R * np.cosh(k * (xr - R)) + (cp / k) * np.sinh(k * (xr - R))
    p[rim_m] = _rim_pressure(xr, R, c_R, cp, params)

    # outer
    xo = x[out]
    if cfg.mode == IN_VITRO:
        c[out] = params.c_B
        n[out] = cfg.n_R * np.exp(-(xo - R) * _g_at(params, params.c_B) / sigma)
    else:
        shot = classify_shot(sigma, c_R, cp, cfg.n_R, R, params, numerics, cfg.shoot_dx)
        # keep the part of the separatrix before it peels away from c_B
        gap = np.abs(params.c_B - shot.c) + np.abs(shot.u)
        cut = int(np.argmin(gap))
        turned = np.nonzero((shot.u <= 0) | (shot.c >= params.c_B))[0]
        if turned.size:
            cut = min(cut, max(int(turned[0]) - 1, 0))
        xs, cs, ns = shot.x[:cut + 1], shot.c[:cut + 1], shot.n[:cut + 1]
        c_near = CubicHermiteSpline(xs, cs, shot.u[:cut + 1])
        c_far = np.minimum(params.c_B - (params.c_B - cs[-1]) * np.exp(-(xo - xs[-1])),
                           params.c_B)
        n_far = ns[-1] * np.exp(-(xo - xs[-1]) * _g_at(params, params.c_B) / sigma)
        c[out] = np.where(xo <= xs[-1], c_near(np.minimum(xo, xs[-1])), c_far)
        n[out] = np.where(xo <= xs[-1], np.interp(xo, xs, ns), n_far)

    iS, iG = rim_integrals(R, c_R, A, params)
    dpR = -R * iG
    resid = {
        "velocity_law": abs(sigma * (1.0 - cfg.n_R) + dpR),
        "pressure_bc": abs(R * R * iS),
        "integral": abs(iS),
        "c_monotone_viol": float(max(0.0, np.max(-np.diff(c)))),
        "p_min": float(np.min(p)),
    }
    return TWSolution(float(sigma), float(R), float(c_R), float(cp), float(A), cfg.n_R,
                      cfg.mode, x, n, p, c, resid)


# --------------------------------------------------------------------------
# in vitro
# --------------------------------------------------------------------------

def tw_invitro(cfg: TWConfig, closed_form: Optional[bool] = None) -> TWSolution:
    """In vitro wave: the bulk is independent of n_R and sigma = sigma0 / (1 - n_R).

    With IgnitionConstant growth and TwoLevel consumption the rim width is
    f(sqrt(n_c)) from :mod:`necrosim.analytic`; otherwise the general
    shooting-free construction with c_R = c_B is used.
    """
    params = cfg.params
    if cfg.mode != IN_VITRO:
        raise ValueError("tw_invitro needs mode in_vitro")
    simple = isinstance(params.growth, IgnitionConstant) and \
        isinstance(params.consumption, TwoLevel)
    if closed_form is None:
        closed_form = simple
    if not closed_form:
        return solve_sigma(cfg)
    if not simple:
        raise ValueError("closed form needs IgnitionConstant growth and TwoLevel consumption")
    from .analytic import f_of_beta

    g, psi = params.growth, params.consumption
    R = f_of_beta(math.sqrt(psi.n_c), params, cfg.numerics.bisect_tol)
    sigma0 = (math.sqrt((g.g_plus + g.g_minus) * g.g_minus) - g.g_minus) * R
    sigma = sigma0 / (1.0 - cfg.n_R)
    # in the tail n < 1, so psi = lam n_c and c'/c is constant
    A = math.sqrt(psi.lam * psi.n_c)
    k = _k(params)
    cp = params.c_B * k * _rho(R, A, k)
    rim = RimSolution(R, params.c_B, cp, A, rim_integrals(R, params.c_B, A, params)[0])
    return assemble_profiles(sigma, rim, cfg)
