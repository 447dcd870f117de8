"""One-dimensional second-order boundary-value solvers.

Three-point finite differences on (possibly non-uniform) node sets:

* plain Poisson with Dirichlet data,
* the obstacle problem ``p >= 0, -p'' >= s, p (-p'' - s) = 0`` for pressure,
* the in vitro and in vivo nutrient equations.

The public functions take a uniform :class:`Grid`; the ``*_nodes`` variants
accept an arbitrary increasing node array and are what the front-tracking
simulator uses (fronts sit between grid nodes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

from ._kernels import psor_sweeps
from .model import NumericsConfig


class ObstacleNonConvergence(RuntimeError):
    """PSOR hit its iteration cap; ``residual`` holds the last residual."""

    def __init__(self, residual, iterations):
        super().__init__(f"obstacle solver did not converge after {iterations} sweeps "
                         f"(residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


class TruncationError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    a: float
    b: float
    n_nodes: int

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("grid requires a < b")
        if self.n_nodes < 3:
            raise ValueError("grid needs at least 3 nodes")

    @classmethod
    def from_spacing(cls, a, b, h):
        n = int(round((b - a) / h)) + 1
        return cls(a, b, max(n, 3))

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n_nodes - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n_nodes)


@dataclass
class Profile:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise ValueError("profile length must equal grid.n_nodes")

    @property
    def x(self):
        return self.grid.x

    @classmethod
    def sample(cls, grid, func):
        return cls(grid, np.asarray(func(grid.x), dtype=float) * np.ones(grid.n_nodes))

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.n_nodes, float(value)))


@dataclass
class ObstacleSolution:
    p: Profile
    coincidence: np.ndarray
    residual_max: float
    iterations: int


@dataclass(frozen=True)
class ComplementarityResidual:
    max_viol_nonneg: float
    max_viol_supersol: float
    max_viol_compl: float

    def max(self):
        return max(self.max_viol_nonneg, self.max_viol_supersol, self.max_viol_compl)


# --------------------------------------------------------------------------
# discrete operator helpers
# --------------------------------------------------------------------------

def _stencil(x):
    """Coefficients of -u'' at interior nodes: lo*u[i-1] + di*u[i] + up*u[i+1]."""
    hl = x[1:-1] - x[:-2]
    hr = x[2:] - x[1:-1]
    lo = -2.0 / (hl * (hl + hr))
    up = -2.0 / (hr * (hl + hr))
    di = 2.0 / (hl * hr)
    return lo, di, up, 0.5 * (hl + hr)


def neg_laplacian(x, u):
    """-u'' at interior nodes of the node set x."""
    lo, di, up, _ = _stencil(x)
    return lo * u[:-2] + di * u[1:-1] + up * u[2:]


def _banded(lo, di, up):
    m = di.size
    ab = np.zeros((3, m))
    ab[0, 1:] = up[:-1]
    ab[1] = di
    ab[2, :-1] = lo[1:]
    return ab


def _solve_dirichlet(x, coef, rhs, left, right):
    """Solve -u'' + coef u = rhs at interior nodes, u pinned at both ends."""
    lo, di, up, _ = _stencil(x)
    b = np.array(rhs, dtype=float, copy=True)
    b[0] -= lo[0] * left
    b[-1] -= up[-1] * right
    u = solve_banded((1, 1), _banded(lo, di + coef, up), b)
    return np.concatenate(([left], u, [right]))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def hat_average(x, func, breakpoints: Sequence[float] = ()):
    """Hat-function weighted averages of ``func`` at the nodes ``x``.

    Interior node i gets int(func * phi_i) / ((h_l + h_r) / 2); end nodes get
    point values.  Integration is split at ``breakpoints`` so jumps of
    ``func`` are resolved exactly.  With this load the three-point Poisson
    scheme coincides with linear finite elements (nodally exact in 1-D).
    """
    x = np.asarray(x, dtype=float)
    out = np.asarray(func(x), dtype=float) * np.ones_like(x)
    bps = np.sort(np.asarray(breakpoints, dtype=float))
    acc = np.zeros_like(x)
    for k in range(x.size - 1):
        xl, xr = x[k], x[k + 1]
        cuts = [xl] + [b for b in bps if xl < b < xr] + [xr]
        for s0, s1 in zip(cuts[:-1], cuts[1:]):
            xs = 0.5 * (s1 - s0) * _GL_X + 0.5 * (s0 + s1)
            w = 0.5 * (s1 - s0) * _GL_W
            fv = np.asarray(func(xs), dtype=float) * np.ones_like(xs)
            phi_r = (xs - xl) / (xr - xl)
            acc[k] += np.sum(w * fv * (1 - phi_r))
            acc[k + 1] += np.sum(w * fv * phi_r)
    width = np.empty_like(x)
    width[1:-1] = 0.5 * (x[2:] - x[:-2])
    out[1:-1] = acc[1:-1] / width[1:-1]
    return out


_GL4_X, _GL4_W = np.polynomial.legendre.leggauss(4)


def growth_load(x, c, law):
    """Hat-weighted average of G(c) for piecewise-linear c on nodes x.

    Each cell is split where c crosses the growth threshold, so the jump of
    G is placed at its sub-cell position rather than snapped to a node.
    """
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    cl, cr = c[:-1], c[1:]
    dc = cr - cl
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = (law.c_thresh - cl) / dc
    theta = np.where(np.isfinite(theta) & (theta > 0) & (theta < 1), theta, 0.5)
    width = x[1:] - x[:-1]
    acc_l = np.zeros_like(cl)
    acc_r = np.zeros_like(cl)
    for lo_, hi_ in ((np.zeros_like(theta), theta), (theta, np.ones_like(theta))):
        xi = 0.5 * (hi_ - lo_)[:, None] * _GL4_X[None, :] + 0.5 * (hi_ + lo_)[:, None]
        w = 0.5 * (hi_ - lo_)[:, None] * _GL4_W[None, :]
        g = law(cl[:, None] + dc[:, None] * xi)
        acc_l += np.sum(w * g * (1 - xi), axis=1)
        acc_r += np.sum(w * g * xi, axis=1)
    acc_l *= width
    acc_r *= width
    out = np.asarray(law(c), dtype=float).copy()
    out[1:-1] = (acc_r[:-1] + acc_l[1:]) / (0.5 * (width[:-1] + width[1:]))
    return out


# --------------------------------------------------------------------------
# Poisson
# --------------------------------------------------------------------------

def solve_poisson_dirichlet(grid: Grid, source: Profile, left_bc: float,
                            right_bc: float) -> Profile:
    """Direct tridiagonal solve of -u'' = source with pinned endpoints."""
    x = grid.x
    u = _solve_dirichlet(x, 0.0, source.values[1:-1], float(left_bc), float(right_bc))
    return Profile(grid, u)


# --------------------------------------------------------------------------
# obstacle problem
# --------------------------------------------------------------------------

def _active_set_predictor(x, f, max_iter=500):
    """Primal-dual active set iteration for the discrete obstacle problem.

    Works on the symmetric form of the operator (rows scaled by the dual
    cell width) which is a Stieltjes matrix, so the iteration terminates
    at the exact discrete solution in finitely many steps.  Each sweep can
    only move a contact edge by one node, so the initial active set comes
    from the same iteration on every other node (recursively).
    """
    lo, di, up, w = _stencil(x)
    lo, di, up, fs = lo * w, di * w, up * w, f * w
    m = di.size
    if m > 64:
        keep = np.arange(0, x.size, 2)
        if keep[-1] != x.size - 1:
            keep = np.append(keep, x.size - 1)
        fc = np.concatenate(([0.0], f, [0.0]))[keep][1:-1]
        pc = np.concatenate(([0.0], _active_set_predictor(x[keep], fc), [0.0]))
        active = np.interp(x[1:-1], x[keep], pc) <= 0.0
    else:
        active = np.zeros(m, dtype=bool)
    p = np.zeros(m)
    scale = float(np.max(di))
    for _ in range(max_iter):
        d = np.where(active, 1.0, di)
        l_ = np.where(active, 0.0, lo)
        u_ = np.where(active, 0.0, up)
        b = np.where(active, 0.0, fs)
        p = solve_banded((1, 1), _banded(l_, d, u_), b)
        p[active] = 0.0
        pe = np.concatenate(([0.0], p, [0.0]))
        mult = lo * pe[:-2] + di * pe[1:-1] + up * pe[2:] - fs
        new = (mult - scale * p) > 0
        if np.array_equal(new, active):
            break
        active = new
    return np.maximum(p, 0.0)


def _compl_residual(x, p_full, f):
    r = neg_laplacian(x, p_full) - f
    return float(np.max(np.abs(np.minimum(p_full[1:-1], r)))) if r.size else 0.0


def solve_obstacle_nodes(x, source, cfg: NumericsConfig, initial=None,
                         predictor: bool = True):
    """Obstacle problem on the node set x with p = 0 at both ends.

    Returns ``(p, coincidence_mask, residual, sweeps)``.  Projected SOR
    sweeps run until ``max |min(p, -D2 p - s)| <= cfg.psor_tol``.  The
    iteration is seeded by the active-set predictor unless ``predictor`` is
    false, in which case ``initial`` (or zero) is used.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(source, dtype=float)[1:-1]
    m = x.size - 2
    if m <= 0:
        return np.zeros_like(x), np.ones(x.size, bool), 0.0, 0
    if predictor:
        p = _active_set_predictor(x, f)
    elif initial is not None:
        p = np.maximum(np.asarray(initial, dtype=float)[1:-1], 0.0).copy()
    else:
        p = np.zeros(m)
    lo, di, up, w = _stencil(x)
    lo_s, di_s, up_s, f_s = lo * w, di * w, up * w, f * w
    p_full = np.zeros(x.size)
    sweeps = 0
    batch = 1
    while True:
        psor_sweeps(p, lo_s, di_s, up_s, f_s, cfg.psor_omega, batch)
        sweeps += batch
        p_full[1:-1] = p
        res = _compl_residual(x, p_full, f)
        if res <= cfg.psor_tol:
            break
        if sweeps >= cfg.max_iter:
            raise ObstacleNonConvergence(res, sweeps)
        batch = min(2 * batch, 256, cfg.max_iter - sweeps)
    pmax = float(np.max(p_full))
    thresh = cfg.eps_coincidence * pmax + 1e-14
    mask = p_full < thresh
    return p_full, mask, res, sweeps


def solve_obstacle(grid: Grid, source: Profile, cfg: NumericsConfig,
                   initial: Profile | None = None, predictor: bool = True) -> ObstacleSolution:
    """Pressure obstacle problem on ``grid`` with homogeneous Dirichlet ends.

    Raises
    ------
    ObstacleNonConvergence
        if ``cfg.max_iter`` sweeps do not reach ``cfg.psor_tol``.
    """
    init = None if initial is None else initial.values
    p, mask, res, it = solve_obstacle_nodes(grid.x, source.values, cfg, init, predictor)
    return ObstacleSolution(Profile(grid, p), mask, res, it)


def complementarity_residual(sol: ObstacleSolution, source: Profile) -> ComplementarityResidual:
    x = sol.p.grid.x
    p = sol.p.values
    lap_plus_s = -neg_laplacian(x, p) + source.values[1:-1]
    pin = p[1:-1]
    return ComplementarityResidual(
        float(np.max(np.maximum(-pin, 0.0))),
        float(np.max(np.maximum(lap_plus_s, 0.0))),
        float(np.max(np.abs(pin * lap_plus_s))),
    )


# --------------------------------------------------------------------------
# nutrient
# --------------------------------------------------------------------------

def solve_nutrient_invitro_nodes(x, psi_values, c_B):
    psi_values = np.asarray(psi_values, dtype=float)
    if np.any(psi_values < 0):
        raise ValueError("consumption field must be non-negative")
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        return np.full(x.size, float(c_B))
    return _solve_dirichlet(x, psi_values[1:-1], np.zeros(x.size - 2), c_B, c_B)


def solve_nutrient_invitro(grid: Grid, psi_field: Profile, c_B: float) -> Profile:
    """-c'' + psi c = 0 on the grid with c = c_B at both ends."""
    return Profile(grid, solve_nutrient_invitro_nodes(grid.x, psi_field.values, c_B))


def _hat_step(t):
    """Hat average of the unit step at 0, for a node at offset t (in cells)."""
    t = np.clip(t, -1.0, 1.0)
    return np.where(t <= 0, 0.5 * (1 + t) ** 2, 1 - 0.5 * (1 - t) ** 2)


def solve_nutrient_invivo(grid: Grid, omega, psi_field: Profile, c_B: float,
                          L_trunc: float | None = None) -> Profile:
    """-c'' + psi c = 1_{x not in omega} (c_B - c) on a truncated line.

    ``omega = (a, b)`` is the tumor bulk; a node counts as outside when
    x >= b or x <= a.  The right end is pinned to c_B.  If the bulk reaches
    the left end of the grid (a necrotic tail running off to -inf) the left
    end uses the Robin closure c' = sqrt(psi) c; otherwise it is pinned to
    c_B as well.

    Raises
    ------
    TruncationError
        when a margin between the bulk and a free end is below ``L_trunc``.
    """
    x = grid.x
    h = grid.h
    a, b = omega
    psi = np.asarray(psi_field.values, dtype=float)
    if np.any(psi < 0):
        raise ValueError("consumption field must be non-negative")
    tail = a <= grid.a
    if L_trunc is not None:
        if grid.b - b < L_trunc - 1e-12:
            raise TruncationError(f"right margin {grid.b - b:.4g} below L_trunc={L_trunc}")
        if not tail and a - grid.a < L_trunc - 1e-12:
            raise TruncationError(f"left margin {a - grid.a:.4g} below L_trunc={L_trunc}")
    # hat-weighted indicator of the outside, so the edge of omega may sit
    # anywhere in a cell without costing an order of accuracy
    if b <= a:
        outside = np.ones(x.size)
    elif tail:
        outside = _hat_step((x - b) / h)
    else:
        outside = np.minimum(_hat_step((x - b) / h) + _hat_step((a - x) / h), 1.0)
    q = psi + outside
    rhs = outside * c_B
    n = x.size
    lo = np.full(n, -1.0 / h**2)
    up = np.full(n, -1.0 / h**2)
    di = 2.0 / h**2 + q
    f = rhs.copy()
    # right end Dirichlet
    di[-1], lo[-1], f[-1] = 1.0, 0.0, c_B
    if tail:
        # ghost node from c'(x0) = kappa c(x0)
        kappa = math.sqrt(max(psi[0], 0.0))
        di[0] = 2.0 / h**2 + 2.0 * kappa / h + q[0]
        up[0] = -2.0 / h**2
    else:
        di[0], up[0], f[0] = 1.0, 0.0, c_B
    ab = np.zeros((3, n))
    ab[0, 1:] = up[:-1]
    ab[1] = di
    ab[2, :-1] = lo[1:]
    c = solve_banded((1, 1), ab, f)
    return Profile(grid, c)
