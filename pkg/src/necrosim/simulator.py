"""Front-tracking simulation of the free-boundary model on a fixed grid.

The tumor bulk is an interval ``(a, b)`` whose endpoints move between grid
nodes.  Each step solves, in this order, the nutrient equation, the
pressure obstacle problem on the bulk, extracts the necrotic core (the
coincidence set), updates the density away from the saturated rim, and
moves the fronts with the outer-density corrected Darcy law

    V = -dp/dnu / (1 - n_out).

Elliptic solves use the node set ``{a} + interior grid nodes + {b}``, so the
front positions enter the discretization exactly.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .elliptic import (Grid, Profile, growth_load, solve_nutrient_invitro_nodes,
                       solve_nutrient_invivo, solve_obstacle_nodes)
from .model import IN_VITRO, ModelParams, NumericsConfig

log = logging.getLogger(__name__)

# interior nodes closer than this fraction of h to a front are dropped from
# the elliptic node set (they are filled by interpolation)
_FRONT_GAP = 0.1
# density clamp: the update keeps n strictly below saturation off the rim
_N_MAX = 1.0 - 1e-12


class SimulationError(RuntimeError):
    pass


class BoundaryCollision(SimulationError):
    pass


class CoreTouchesBoundary(SimulationError):
    pass


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OuterDensity:
    """amplitude * exp(-decay * (|x - center| - width)) outside the patch."""

    amplitude: float = 0.0
    decay: float = 0.0
    center: float = 0.0
    width: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-self.decay * (np.abs(x - self.center) - self.width))


@dataclass(frozen=True)
class OuterTable:
    """Tabulated outer density, linearly interpolated (0 outside the table)."""

    x: tuple
    values: tuple

    def __call__(self, x):
        return np.interp(x, np.asarray(self.x, float), np.asarray(self.values, float),
                         left=0.0, right=0.0)


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    numerics: NumericsConfig
    x_min: float
    x_max: float
    patch: Tuple[float, float]
    outer: Callable = OuterDensity()
    t_end: float = 1.0
    snapshot_every: Optional[float] = None
    probes: Tuple[float, ...] = ()


def figure3_config(numerics: Optional[NumericsConfig] = None, t_end: float = 24.0,
                   probes: Sequence[float] = (2.0,)) -> SimConfig:
    """The [0, 3] necrotic-core experiment with outer density."""
    from .model import IgnitionAffine, Linear

    params = ModelParams(1.0, IgnitionAffine(2.0, 0.2, 1.2, 0.9), Linear(1.0))
    return SimConfig(params, numerics or NumericsConfig(), 0.0, 3.0, (1.2, 1.8),
                     OuterDensity(0.1, 40.0, 1.5, 0.3), t_end, 1.0, tuple(probes))


# --------------------------------------------------------------------------
# state and records
# --------------------------------------------------------------------------

@dataclass
class SimState:
    """Density on the global grid plus the bulk (left, right).

    ``p``, ``c`` and ``core`` are the fields of the last solve (``None``
    before the first step).
    """

    t: float
    left: float
    right: float
    n: Profile
    p: Optional[Profile] = None
    c: Optional[Profile] = None
    core: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def grid(self) -> Grid:
        return self.n.grid


@dataclass(frozen=True)
class EventRecord:
    probe_x: float
    t0: Optional[float]
    t1: Optional[float]


@dataclass
class StepDiagnostics:
    """Everything computed from one state before it is advanced."""

    c: np.ndarray
    p: np.ndarray
    core: List[Tuple[float, float]]
    rim_mask: np.ndarray
    speed_left: float
    speed_right: float
    n_out_left: float
    n_out_right: float
    residual: float


@dataclass
class Trajectory:
    """Per-step summaries; full profiles at the snapshot cadence."""

    t: List[float] = field(default_factory=list)
    a: List[float] = field(default_factory=list)
    b: List[float] = field(default_factory=list)
    core: List[List[Tuple[float, float]]] = field(default_factory=list)
    speed_left: List[float] = field(default_factory=list)
    speed_right: List[float] = field(default_factory=list)
    profiles: List[Tuple[float, np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = \
        field(default_factory=list)
    events: List[EventRecord] = field(default_factory=list)
    status: str = "running"
    final_state: Optional[SimState] = None

    def append(self, state: SimState, diag: StepDiagnostics):
        if self.t and not state.t > self.t[-1]:
            raise ValueError("snapshot times must increase")
        self.t.append(state.t)
        self.a.append(state.left)
        self.b.append(state.right)
        self.core.append(list(diag.core))
        self.speed_left.append(diag.speed_left)
        self.speed_right.append(diag.speed_right)

    def rows(self):
        """(t, a, b, core_lo, core_hi, speed_left, speed_right) rows.

        With several core intervals the hull is reported; no core gives NaN.
        """
        for i, t in enumerate(self.t):
            cores = self.core[i]
            lo = min(c[0] for c in cores) if cores else math.nan
            hi = max(c[1] for c in cores) if cores else math.nan
            yield (t, self.a[i], self.b[i], lo, hi, self.speed_left[i], self.speed_right[i])


# --------------------------------------------------------------------------
# initialization
# --------------------------------------------------------------------------

def _global_grid(x_min, x_max, h):
    return Grid.from_spacing(x_min, x_max, h)


def init_from_config(cfg: SimConfig) -> SimState:
    """Saturated patch plus outer density on the global grid."""
    lo, hi = cfg.patch
    if not cfg.x_min <= lo < hi <= cfg.x_max:
        raise ValueError("patch must satisfy x_min <= lo < hi <= x_max")
    grid = _global_grid(cfg.x_min, cfg.x_max, cfg.numerics.h)
    x = grid.x
    inside = (x >= lo) & (x <= hi)
    outer = np.asarray(cfg.outer(x), dtype=float) * np.ones_like(x)
    outer_vals = outer[~inside]
    if np.any(outer_vals >= 1.0):
        raise ValueError("outer density must stay below 1")
    if np.any(outer_vals < 0.0):
        raise ValueError("outer density must be non-negative")
    n = np.where(inside, 1.0, outer)
    return SimState(0.0, float(lo), float(hi), Profile(grid, n))


def state_from_profiles(grid: Grid, n, left: float, right: float, t: float = 0.0) -> SimState:
    """Wrap an externally assembled density (e.g. a traveling wave)."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0) or np.any(n > 1):
        raise ValueError("density must lie in [0, 1]")
    return SimState(t, float(left), float(right), Profile(grid, n))


def stable_dt(params: ModelParams, dt: float) -> float:
    """Largest step not above ``dt`` with |G| dt <= 0.1."""
    gmax = max(params.growth.g_minus, params.growth.sup(params.c_B))
    return min(dt, 0.1 / gmax)


# --------------------------------------------------------------------------
# one step
# --------------------------------------------------------------------------

def _front_slope(xf, x1, p1, x2, p2):
    """d/dx at xf of the quadratic through (xf, 0), (x1, p1), (x2, p2)."""
    d1, d2 = x1 - xf, x2 - xf
    q = (p2 / d2 - p1 / d1) / (d2 - d1)
    return p1 / d1 - q * d1


def _runs(mask):
    """(start, stop) index pairs of maximal True runs."""
    m = np.concatenate(([False], mask, [False]))
    d = np.diff(m.astype(np.int8))
    return list(zip(np.nonzero(d == 1)[0], np.nonzero(d == -1)[0]))


def diagnose(state: SimState, params: ModelParams, numerics: NumericsConfig) -> StepDiagnostics:
    """Nutrient, pressure, core and front speeds for ``state``.

    A front sitting on a grid end is treated as pinned (zero speed); this
    is how a bulk extending past the computational domain is represented.
    """
    grid = state.grid
    X = grid.x
    h = grid.h
    a, b = state.left, state.right
    if not a < b:
        raise BoundaryCollision(f"fronts collided: a={a}, b={b}")
    n = state.n.values
    law, psi = params.growth, params.consumption
    pinned_l = a <= X[0]
    pinned_r = b >= X[-1]
    idx = np.nonzero((X > a + _FRONT_GAP * h) & (X < b - _FRONT_GAP * h))[0]
    if idx.size < 2:
        raise SimulationError("bulk spans fewer than two grid nodes")
    xs = np.concatenate(([a], X[idx], [b]))
    inside = (X > a) & (X < b)

    if params.nutrient_mode == IN_VITRO:
        cs = solve_nutrient_invitro_nodes(xs, np.concatenate(([0.0], psi(n[idx]), [0.0])),
                                          params.c_B)
        c = np.where(inside, np.interp(X, xs, cs), params.c_B)
    else:
        c = solve_nutrient_invivo(grid, (a, b), Profile(grid, psi(n)), params.c_B).values
        cs = np.interp(xs, X, c)

    src = growth_load(xs, cs, law)
    ps, mask, res, _ = solve_obstacle_nodes(xs, src, numerics)
    p = np.where(inside, np.interp(X, xs, ps), 0.0)

    # coincidence runs of at least two interior nodes form the core
    cmask = mask[1:-1]
    core = []
    core_nodes = np.zeros(X.size, dtype=bool)
    for s, e in _runs(cmask):
        if e - s < 2:
            continue
        if (s == 0 and not pinned_l) or (e == cmask.size and not pinned_r):
            raise CoreTouchesBoundary(
                f"necrotic core reached the bulk boundary at t={state.t:.6g}")
        lo_x = a if s == 0 else X[idx[s]]
        hi_x = b if e == cmask.size else X[idx[e - 1]]
        core.append((float(lo_x), float(hi_x)))
        core_nodes[idx[s:e]] = True
    rim = inside & ~core_nodes

    if pinned_r:
        v_r, n_out_r = 0.0, math.nan
    else:
        j = np.searchsorted(X, b, side="right")
        n_out_r = float(n[j])
        v_r = -_front_slope(b, xs[-2], ps[-2], xs[-3], ps[-3]) / (1.0 - n_out_r)
    if pinned_l:
        v_l, n_out_l = 0.0, math.nan
    else:
        j = np.searchsorted(X, a, side="left") - 1
        n_out_l = float(n[j])
        v_l = _front_slope(a, xs[1], ps[1], xs[2], ps[2]) / (1.0 - n_out_l)
    return StepDiagnostics(c, p, core, rim, float(v_l), float(v_r), n_out_l, n_out_r, res)


class DomainExit(SimulationError):
    pass


def step(state: SimState, dt: float, params: ModelParams, numerics: NumericsConfig,
         diag: Optional[StepDiagnostics] = None) -> Tuple[SimState, StepDiagnostics]:
    """Advance by ``dt``; returns the new state and the diagnostics of the old.

    Raises
    ------
    DomainExit
        if a front would leave the grid (no node left beyond it).
    BoundaryCollision, CoreTouchesBoundary, ObstacleNonConvergence
    """
    diag = diag or diagnose(state, params, numerics)
    grid = state.grid
    X = grid.x
    n = state.n.values.copy()
    a, b = state.left, state.right

    off_rim = ~diag.rim_mask
    n[off_rim] = np.clip(n[off_rim] * (1.0 + dt * params.growth(diag.c[off_rim])), 0.0, _N_MAX)
    n[diag.rim_mask] = 1.0

    a_new = a - diag.speed_left * dt
    b_new = b + diag.speed_right * dt
    if b_new >= X[-1] and diag.speed_right > 0 or a_new <= X[0] and diag.speed_left > 0:
        raise DomainExit(f"front left the domain at t={state.t + dt:.6g}")
    if not a_new < b_new:
        raise BoundaryCollision(f"fronts collided at t={state.t + dt:.6g}")
    newly = (X > a_new) & (X < b_new) & ~((X > a) & (X < b))
    n[newly] = 1.0

    new = SimState(state.t + dt, float(a_new), float(b_new), Profile(grid, n))
    state.p = Profile(grid, diag.p)
    state.c = Profile(grid, diag.c)
    state.core = diag.core
    return new, diag


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

def run(cfg: SimConfig, state: Optional[SimState] = None) -> Trajectory:
    """Integrate to ``cfg.t_end``.

    Stops early, with ``status = "domain_exit"``, if a front reaches the end
    of the grid; otherwise ``status = "completed"``.  Events for
    ``cfg.probes`` are filled in at the end.
    """
    params, numerics = cfg.params, cfg.numerics
    state = state or init_from_config(cfg)
    dt = stable_dt(params, numerics.dt)
    n_steps = int(math.ceil(cfg.t_end / dt - 1e-9))
    dt = cfg.t_end / n_steps if n_steps else dt
    traj = Trajectory()
    next_snap = 0.0
    snap_tol = 1e-9 * max(dt, 1.0)
    t0 = state.t
    for k in range(n_steps + 1):
        diag = diagnose(state, params, numerics)
        traj.append(state, diag)
        if cfg.snapshot_every is not None and state.t >= next_snap - snap_tol:
            traj.profiles.append((state.t, state.grid.x.copy(), state.n.values.copy(),
                                  diag.p.copy(), diag.c.copy()))
            next_snap += cfg.snapshot_every
        if k == n_steps:
            traj.status = "completed"
            break
        try:
            new, _ = step(state, dt, params, numerics, diag)
        except DomainExit as exc:
            log.info("%s", exc)
            traj.status = "domain_exit"
            break
        new.t = t0 + (k + 1) * dt
        state = new
    traj.final_state = state
    traj.events = [detect_events(traj, x) for x in cfg.probes]
    return traj


def _crossing_time(t, values, level, rising=True):
    v = np.asarray(values)
    hit = v >= level if rising else v <= level
    idx = np.nonzero(hit)[0]
    if idx.size == 0:
        return None
    i = idx[0]
    if i == 0:
        return float(t[0])
    v0, v1 = v[i - 1], v[i]
    return float(t[i - 1] + (t[i] - t[i - 1]) * (level - v0) / (v1 - v0))


def detect_events(traj: Trajectory, x: float) -> EventRecord:
    """Entry time t0 of ``x`` into the bulk and entry time t1 into the core."""
    if not traj.t:
        return EventRecord(float(x), None, None)
    a0, b0 = traj.a[0], traj.b[0]
    if a0 <= x <= b0:
        t0 = float(traj.t[0])
    elif x > b0:
        t0 = _crossing_time(traj.t, traj.b, x, rising=True)
    else:
        t0 = _crossing_time(traj.t, traj.a, x, rising=False)
    t1 = None
    for i, cores in enumerate(traj.core):
        if any(lo <= x <= hi for lo, hi in cores):
            t1 = float(traj.t[i])
            break
    return EventRecord(float(x), t0, t1)


def front_speed(traj: Trajectory, fraction: float = 0.2, side: str = "right") -> float:
    """Mean front speed over the final ``fraction`` of the recorded run."""
    t = np.asarray(traj.t)
    pos = np.asarray(traj.b if side == "right" else traj.a)
    j = min(int((1 - fraction) * (t.size - 1)), t.size - 2)
    v = (pos[-1] - pos[j]) / (t[-1] - t[j])
    return float(v if side == "right" else -v)
