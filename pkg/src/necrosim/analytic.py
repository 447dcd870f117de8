"""Semi-analytic radially symmetric solution with a necrotic core.

Valid for the piecewise-constant growth law (:class:`IgnitionConstant`) and
the two-level consumption law (:class:`TwoLevel`).  For a bulk (-R, R) the
profiles fall into three regimes:

* ``R <= R0``: nutrient stays above threshold everywhere (case 3),
* ``R0 < R <= R1``: a region with G < 0 but positive pressure (case 2),
* ``R > R1``: a necrotic core [-r, r] where the pressure vanishes (case 1).

All transcendental equations are solved by bracketed bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import bisect, brentq

from .model import IgnitionConstant, ModelParams, NumericsConfig, TwoLevel

_DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class CriticalRadii:
    R0: float
    R1: float
    alpha: float


@dataclass(frozen=True)
class CoreSolution:
    """Unknowns of the core system at a fixed radius ``R``.

    For ``case`` 2 and 3 there is no core: ``r = 0`` and ``Rbar = R``; in
    case 2 ``x1`` is the threshold crossing measured from the center, in
    case 3 it is 0.
    """

    R: float
    case: int
    r: float
    Rbar: float
    beta: float
    x1: float
    xi: float
    cRp: float
    c0: float
    c0p: float


def _laws(params: ModelParams):
    g, psi = params.growth, params.consumption
    if not isinstance(g, IgnitionConstant) or not isinstance(psi, TwoLevel):
        raise TypeError("analytic module needs IgnitionConstant growth and TwoLevel consumption")
    if not g.c_thresh < params.c_B:
        raise ValueError("c_thresh must be below c_B")
    return g, psi


def _logcosh(x):
    x = abs(x)
    return x + math.log1p(math.exp(-2.0 * x)) - math.log(2.0)


def _cosh_ratio(a, b):
    """cosh(a) / cosh(b) without overflow."""
    return math.exp(_logcosh(a) - _logcosh(b))


def _alpha(g: IgnitionConstant):
    return math.sqrt(g.g_minus / (g.g_plus + g.g_minus))


def _expand_bracket(func, lo, hi, max_doublings=200):
    """Double ``hi`` until func changes sign between lo and hi."""
    flo = func(lo)
    for _ in range(max_doublings):
        if flo * func(hi) <= 0:
            return hi
        hi *= 2.0
    raise RuntimeError("failed to bracket root")


def critical_radii(params: ModelParams, tol: float = _DEFAULT_TOL) -> CriticalRadii:
    """Onset radii: ``R0`` where c(0) first reaches the threshold, ``R1``
    where the necrotic core nucleates."""
    g, psi = _laws(params)
    k = math.sqrt(psi.lam)
    ratio = g.c_thresh / params.c_B
    alpha = _alpha(g)
    R0 = math.acosh(1.0 / ratio) / k
    log_ratio = math.log(ratio)

    def eq(R):
        return _logcosh(k * (1 - alpha) * R) - _logcosh(k * R) - log_ratio

    hi = _expand_bracket(eq, R0, 2.0 * R0)
    R1 = bisect(eq, R0, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
    if not R0 < R1:
        raise RuntimeError("expected R0 < R1")
    return CriticalRadii(R0, R1, alpha)


def F_eval(Rbar: float, beta: float, params: ModelParams) -> float:
    """Transcendental function whose zero in ``Rbar`` fixes the rim width."""
    g, psi = _laws(params)
    k = math.sqrt(psi.lam)
    alpha = _alpha(g)
    ratio = g.c_thresh / params.c_B
    a, b = k * Rbar, k * (1 - alpha) * Rbar
    return ratio * (math.cosh(a) + beta * math.sinh(a)) - (math.cosh(b) + beta * math.sinh(b))


@lru_cache(maxsize=64)
def _R_sin(params, tol):
    """Largest root of (cbar/c_B) sinh(kR) - sinh(k(1-alpha)R); 0 if none."""
    g, psi = _laws(params)
    k = math.sqrt(psi.lam)
    alpha = _alpha(g)
    ratio = g.c_thresh / params.c_B
    if ratio >= 1 - alpha:
        return 0.0

    def d(R):
        return ratio * math.sinh(k * R) - math.sinh(k * (1 - alpha) * R)

    lo = 1e-8 / k
    hi = _expand_bracket(d, lo, 1.0 / k)
    return bisect(d, lo, hi, xtol=tol, maxiter=500)


def f_of_beta(beta: float, params: ModelParams, tol: float = _DEFAULT_TOL) -> float:
    """Rim width solving F(Rbar, beta) = 0; decreasing in beta, f(0) = R1."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    lo = _R_sin(params, tol)
    g, psi = _laws(params)
    k = math.sqrt(psi.lam)
    k2 = k * (1 - _alpha(g))
    ratio = g.c_thresh / params.c_B

    def F(R):
        a, b = k * R, k2 * R
        return ratio * (math.cosh(a) + beta * math.sinh(a)) - (math.cosh(b) + beta * math.sinh(b))

    start = max(lo, 1e-12)
    hi = _expand_bracket(F, start, 2.0 * start + 1.0)
    return brentq(F, start, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


def _rim_coefficients(Rbar, beta, params):
    g, psi = _laws(params)
    k = math.sqrt(psi.lam)
    c_B = params.c_B
    ch, sh = math.cosh(k * Rbar), math.sinh(k * Rbar)
    cRp = c_B * (beta * ch + sh) / (beta * sh + ch)
    c0 = c_B * ch - cRp * sh
    c0p = k * (-c_B * sh + cRp * ch)
    return cRp, c0, c0p


def beta_of_r(r: float, params: ModelParams) -> float:
    """sqrt(n_c) tanh(xi r) with xi = sqrt(lam n_c), from c'(center) = 0."""
    _, psi = _laws(params)
    return math.sqrt(psi.n_c) * math.tanh(math.sqrt(psi.lam * psi.n_c) * r)


def h_of_r(r: float, params: ModelParams, tol: float = _DEFAULT_TOL) -> float:
    """r + f(beta(r)); strictly increasing with h(0) = R1."""
    return r + f_of_beta(beta_of_r(r, params), params, tol)


def solve_core(R: float, params: ModelParams, tol: float = _DEFAULT_TOL,
               radii: Optional[CriticalRadii] = None) -> CoreSolution:
    """Core radius and rim data for a bulk of half-width ``R``."""
    if not R > 0:
        raise ValueError("R must be positive")
    g, psi = _laws(params)
    rad = radii or critical_radii(params, tol)
    k = math.sqrt(psi.lam)
    xi = math.sqrt(psi.lam * psi.n_c)
    if R <= rad.R1:
        if R <= rad.R0:
            case, x1 = 3, 0.0
        else:
            case = 2
            x1 = math.acosh(min(g.c_thresh / params.c_B * math.cosh(k * R), math.cosh(k * R))) / k
        # rim formulas with beta = 0 reduce to c = c_B cosh(kx)/cosh(kR)
        cRp, c0, c0p = _rim_coefficients(R, 0.0, params)
        return CoreSolution(R, case, 0.0, R, 0.0, x1, xi, cRp, c0, c0p)

    def eq(r):
        return h_of_r(r, params, tol) - R

    r = brentq(eq, 0.0, R, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
    Rbar = R - r
    beta = beta_of_r(r, params)
    x1 = (1 - rad.alpha) * Rbar
    cRp, c0, c0p = _rim_coefficients(Rbar, beta, params)
    return CoreSolution(R, 1, r, Rbar, beta, x1, xi, cRp, c0, c0p)


def rbar_excess(R: float, params: ModelParams, core: Optional[CoreSolution] = None) -> float:
    """Rbar(R) - f(sqrt(n_c)) for a bulk with a core, at full relative precision.

    Rbar approaches its limit like exp(-2 xi r), so for large R the excess
    falls below the spacing of doubles near Rbar and cannot be read off
    ``solve_core(R).Rbar``.  F is linear in beta and the hyperbolic
    differences factor into products, which gives an equation for the
    excess itself without cancellation.
    """
    g, psi = _laws(params)
    core = core or solve_core(R, params)
    if core.case != 1:
        raise ValueError("no necrotic core at this radius")
    k = math.sqrt(psi.lam)
    k2 = k * (1 - _alpha(g))
    xi = math.sqrt(psi.lam * psi.n_c)
    ratio = g.c_thresh / params.c_B
    bstar = math.sqrt(psi.n_c)
    fstar = f_of_beta(bstar, params)
    e = math.exp(-2 * xi * core.r)
    dbeta = bstar * 2 * e / (1 + e)
    beta = bstar - dbeta
    a, b = k * fstar, k2 * fstar
    S = ratio * math.sinh(a) - math.sinh(b)

    def G(E):
        da = 2 * math.sinh(0.5 * k * E) * (math.sinh(a + 0.5 * k * E) + beta * math.cosh(a + 0.5 * k * E))
        db = 2 * math.sinh(0.5 * k2 * E) * (math.sinh(b + 0.5 * k2 * E) + beta * math.cosh(b + 0.5 * k2 * E))
        return ratio * da - db - dbeta * S

    D = ratio * k * (math.sinh(a) + beta * math.cosh(a)) - k2 * (math.sinh(b) + beta * math.cosh(b))
    E_lin = dbeta * S / D
    if E_lin == 0.0:
        return 0.0
    lo, hi = 0.5 * E_lin, 2.0 * E_lin
    for _ in range(200):
        if G(lo) * G(hi) <= 0:
            break
        lo, hi = 0.5 * lo, 2.0 * hi
    else:
        raise RuntimeError("failed to bracket the excess")
    lo, hi = min(lo, hi), max(lo, hi)
    return brentq(G, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def C_of_R(R: float, params: ModelParams, core: Optional[CoreSolution] = None) -> float:
    """Additive pressure constant of case 2, fixed by p(R) = 0 (0 otherwise)."""
    g, _ = _laws(params)
    core = core or solve_core(R, params)
    if core.case != 2:
        return 0.0
    x1 = core.x1
    return g.g_plus * (R - x1) ** 2 / 2 - g.g_minus * x1 * (R - x1) - g.g_minus * x1 ** 2 / 2


@dataclass(frozen=True)
class PiecewisePressure:
    """Even piecewise-quadratic pressure on [-R, R].

    ``pieces`` holds tuples ``(s0, s1, a0, a1, a2)`` meaning
    ``p = a0 + a1 (|x| - s0) + a2 (|x| - s0)**2`` for ``|x|`` in [s0, s1].
    """

    case: int
    R: float
    pieces: tuple
    C_of_R: float = 0.0

    @property
    def breakpoints(self):
        return tuple(pc[0] for pc in self.pieces[1:])

    def _piece_index(self, s):
        starts = np.array([pc[0] for pc in self.pieces])
        return np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(self.pieces) - 1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s = np.abs(x)
        idx = self._piece_index(s)
        coef = np.array([pc for pc in self.pieces])[idx]
        d = s - coef[..., 0]
        out = coef[..., 2] + coef[..., 3] * d + coef[..., 4] * d * d
        out = np.where(s <= self.R, out, 0.0)
        return out if out.ndim else float(out)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        s = np.abs(x)
        idx = self._piece_index(s)
        coef = np.array([pc for pc in self.pieces])[idx]
        d = s - coef[..., 0]
        out = np.sign(x) * (coef[..., 3] + 2 * coef[..., 4] * d)
        out = np.where(s <= self.R, out, 0.0)
        return out if out.ndim else float(out)


def pressure_profile(R: float, params: ModelParams,
                     core: Optional[CoreSolution] = None) -> PiecewisePressure:
    g, _ = _laws(params)
    gp, gm = g.g_plus, g.g_minus
    core = core or solve_core(R, params)
    if core.case == 3:
        return PiecewisePressure(3, R, ((0.0, R, gp * R * R / 2, 0.0, -gp / 2),))
    x1 = core.x1
    if core.case == 2:
        C = C_of_R(R, params, core)
        return PiecewisePressure(2, R, ((0.0, x1, C, 0.0, gm / 2),
                                        (x1, R, C + gm * x1 * x1 / 2, gm * x1, -gp / 2)), C)
    r = core.r
    return PiecewisePressure(1, R, ((0.0, r, 0.0, 0.0, 0.0),
                                    (r, r + x1, 0.0, 0.0, gm / 2),
                                    (r + x1, R, gm * x1 * x1 / 2, gm * x1, -gp / 2)))


@dataclass(frozen=True)
class NutrientProfile:
    """Even nutrient profile on [-R, R]; callable, with ``derivative``."""

    core: CoreSolution
    c_B: float
    lam: float

    def _eval(self, x, deriv):
        x = np.asarray(x, dtype=float)
        s = np.abs(x)
        co = self.core
        k = math.sqrt(self.lam)
        # rim piece, argument measured from the outer edge
        u = k * (s - co.R)
        if deriv:
            rim = k * (self.c_B * np.sinh(u) + co.cRp * np.cosh(u))
        else:
            rim = self.c_B * np.cosh(u) + co.cRp * np.sinh(u)
        if co.r > 0:
            xi = co.xi
            # c = c(r) cosh(xi s)/cosh(xi r), written overflow-free
            e = np.exp(xi * (np.minimum(s, co.r) - co.r))
            den = 1.0 + math.exp(-2 * xi * co.r)
            e2 = np.exp(-2 * xi * np.minimum(s, co.r))
            if deriv:
                inner = co.c0 * xi * e * (1.0 - e2) / den
            else:
                inner = co.c0 * e * (1.0 + e2) / den
            rim = np.where(s < co.r, inner, rim)
        if deriv:
            rim = np.sign(x) * rim
        return rim if rim.ndim else float(rim)

    def __call__(self, x):
        return self._eval(x, False)

    def derivative(self, x):
        return self._eval(x, True)


def nutrient_profile(R: float, params: ModelParams,
                     core: Optional[CoreSolution] = None) -> NutrientProfile:
    _, psi = _laws(params)
    core = core or solve_core(R, params)
    return NutrientProfile(core, params.c_B, psi.lam)


def boundary_speed(R: float, params: ModelParams,
                   core: Optional[CoreSolution] = None,
                   radii: Optional[CriticalRadii] = None) -> float:
    """dR/dt = -p'(R) for a bulk of half-width R."""
    g, _ = _laws(params)
    gp, gm = g.g_plus, g.g_minus
    core = core or solve_core(R, params, radii=radii)
    if core.case == 3:
        return gp * R
    if core.case == 2:
        return gp * (R - core.x1) - gm * core.x1
    return (math.sqrt((gp + gm) * gm) - gm) * core.Rbar


def asymptotic_speed(params: ModelParams) -> float:
    """Limit speed of the radius: (sqrt((g+ + g-) g-) - g-) f(sqrt(n_c))."""
    g, psi = _laws(params)
    return (math.sqrt((g.g_plus + g.g_minus) * g.g_minus) - g.g_minus) * \
        f_of_beta(math.sqrt(psi.n_c), params)


@dataclass
class RadiusTrajectory:
    t: np.ndarray
    R: np.ndarray
    asymptotic_speed: float


def evolve_radius(R_init: float, t_end: float, params: ModelParams,
                  numerics: Optional[NumericsConfig] = None,
                  dt: Optional[float] = None) -> RadiusTrajectory:
    """Classical RK4 for dR/dt = boundary_speed(R).

    Below R0 the equation is dR/dt = g_plus R and is advanced exactly; a
    step that reaches R0 is split there, because the speed has a square
    root singularity at R0 which would otherwise cost RK4 its accuracy.
    The asymptotic speed is the mean slope over the last 10% of the run.
    """
    if not R_init > 0:
        raise ValueError("R_init must be positive")
    numerics = numerics or NumericsConfig()
    dt = dt or numerics.ode_dt
    radii = critical_radii(params, numerics.bisect_tol)
    tol = max(numerics.bisect_tol, 1e-13)

    def rhs(R):
        return boundary_speed(R, params, solve_core(R, params, tol, radii))

    n_steps = max(int(math.ceil(t_end / dt)), 1)
    dt = t_end / n_steps
    t = np.linspace(0.0, t_end, n_steps + 1)
    R = np.empty(n_steps + 1)
    R[0] = R_init
    gp = params.growth.g_plus

    def rk4(y, tau):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * tau * k1)
        k3 = rhs(y + 0.5 * tau * k2)
        k4 = rhs(y + tau * k3)
        return y + tau * (k1 + 2 * k2 + 2 * k3 + k4) / 6

    for i in range(n_steps):
        y = R[i]
        if y < radii.R0:
            tau = math.log(radii.R0 / y) / gp
            if tau >= dt:
                R[i + 1] = y * math.exp(gp * dt)
                continue
            R[i + 1] = rk4(radii.R0, dt - tau)
        else:
            R[i + 1] = rk4(y, dt)
    j = min(int(0.9 * n_steps), n_steps - 1)
    speed = (R[-1] - R[j]) / (t[-1] - t[j])
    return RadiusTrajectory(t, R, float(speed))


@dataclass(frozen=True)
class DensityHistory:
    """n(x, t) at a fixed point: 0 before t0, 1 until t1, then decays."""

    x: float
    t0: Optional[float]
    t1: Optional[float]
    g_minus: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        if self.t0 is not None:
            out = np.where(t >= self.t0, 1.0, 0.0)
        if self.t1 is not None:
            out = np.where(t > self.t1, np.exp(-self.g_minus * (t - self.t1)), out)
        return out if out.ndim else float(out)


def _first_crossing(t, values, level):
    """Linearly interpolated first time a non-decreasing series reaches level."""
    idx = np.nonzero(values >= level)[0]
    if idx.size == 0:
        return None
    i = idx[0]
    if i == 0:
        return float(t[0])
    v0, v1 = values[i - 1], values[i]
    return float(t[i - 1] + (t[i] - t[i - 1]) * (level - v0) / (v1 - v0))


def density_history(x: float, traj: RadiusTrajectory, params: ModelParams) -> DensityHistory:
    """Density at x from a radius trajectory (entry time t0, core time t1)."""
    g, _ = _laws(params)
    s = abs(x)
    t0 = _first_crossing(traj.t, traj.R, s)
    t1 = None
    if t0 is not None:
        radii = critical_radii(params)

        def r_at(i):
            R = traj.R[i]
            return solve_core(R, params, radii=radii).r if R > radii.R1 else 0.0

        # r(R(t)) is non-decreasing, so locate the crossing by index bisection
        lo, hi = 0, len(traj.t) - 1
        if s == 0.0 and traj.R[-1] > radii.R1:
            t1 = _first_crossing(traj.t, traj.R, radii.R1)
        elif r_at(hi) > s:
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if r_at(mid) > s:
                    hi = mid
                else:
                    lo = mid
            r_lo, r_hi = r_at(lo), r_at(hi)
            t1 = float(traj.t[lo] + (traj.t[hi] - traj.t[lo]) * (s - r_lo) / (r_hi - r_lo))
    return DensityHistory(float(x), t0, t1, g.g_minus)
