"""Config-driven command line front end.

Usage::

    necrosim <mode> --config <path> [--out <dir>] [--svg]

``mode`` is one of simulate, analytic, radius-evolve, travelwave, sweep and
must agree with the ``mode`` key of the config.  Exit codes: 0 success,
2 config error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Any, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import analytic, simulator, travelwave
from .elliptic import ObstacleNonConvergence, TruncationError
from .model import (GeneralMonotone, IgnitionAffine, IgnitionConstant, IgnitionGeneral,
                    Linear, ModelParams, NumericsConfig, TwoLevel)

log = logging.getLogger("necrosim")

MODES = ("simulate", "analytic", "radius-evolve", "travelwave", "sweep")

TRAJECTORY_HEADER = ("t", "a", "b", "core_lo", "core_hi", "speed_left", "speed_right")
PROFILE_HEADER = ("x", "n", "p", "c")
EVENTS_HEADER = ("probe_x", "t0", "t1")
TW_HEADER = ("n_R", "sigma", "R", "c_R", "c_R_prime", "resid_vlaw")
ANALYTIC_HEADER = ("R", "case", "r", "Rbar", "x1", "speed", "flag")


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# schema
# --------------------------------------------------------------------------

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class IgnitionConstantCfg(_Strict):
    kind: Literal["ignition_constant"]
    g_plus: float
    g_minus: float
    c_thresh: float


class IgnitionAffineCfg(_Strict):
    kind: Literal["ignition_affine"]
    g_minus: float
    slope: float
    intercept: float
    c_thresh: float


class IgnitionTableCfg(_Strict):
    kind: Literal["ignition_table"]
    g_minus: float
    c_thresh: float
    c_table: List[float]
    g_table: List[float]
    lipschitz: Optional[float] = None


class TwoLevelCfg(_Strict):
    kind: Literal["two_level"]
    lam: float
    n_c: float


class LinearCfg(_Strict):
    kind: Literal["linear"]
    coef: float


class ConsumptionTableCfg(_Strict):
    kind: Literal["table"]
    n_table: List[float]
    psi_table: List[float]
    lipschitz: Optional[float] = None


GrowthCfg = Union[IgnitionConstantCfg, IgnitionAffineCfg, IgnitionTableCfg]
ConsumptionCfg = Union[TwoLevelCfg, LinearCfg, ConsumptionTableCfg]


class ParamsCfg(_Strict):
    c_B: float
    growth: GrowthCfg = Field(discriminator="kind")
    consumption: ConsumptionCfg = Field(discriminator="kind")
    nutrient_mode: Literal["in_vitro", "in_vivo"] = "in_vitro"

    def build(self) -> ModelParams:
        g = self.growth
        if g.kind == "ignition_constant":
            law = IgnitionConstant(g.g_plus, g.g_minus, g.c_thresh)
        elif g.kind == "ignition_affine":
            law = IgnitionAffine(g.g_minus, g.slope, g.intercept, g.c_thresh)
        else:
            law = IgnitionGeneral(g.g_minus, g.c_thresh, np.array(g.c_table),
                                  np.array(g.g_table),
                                  math.inf if g.lipschitz is None else g.lipschitz)
        c = self.consumption
        if c.kind == "two_level":
            psi = TwoLevel(c.lam, c.n_c)
        elif c.kind == "linear":
            psi = Linear(c.coef)
        else:
            psi = GeneralMonotone(np.array(c.n_table), np.array(c.psi_table),
                                  math.inf if c.lipschitz is None else c.lipschitz)
        return ModelParams(self.c_B, law, psi, self.nutrient_mode)


class NumericsCfg(_Strict):
    h: Optional[float] = None
    dt: Optional[float] = None
    psor_omega: float = 1.8
    psor_tol: float = 1e-8
    eps_coincidence: float = 1e-9
    L_trunc: float = 40.0
    bisect_tol: float = 1e-12
    max_iter: int = 200_000
    ode_dt: float = 5e-3

    def build(self) -> NumericsConfig:
        if self.h is None or self.dt is None:
            raise ConfigError("numerics defaults were not filled")
        return NumericsConfig(**self.model_dump())


class OuterExpCfg(_Strict):
    kind: Literal["exponential"] = "exponential"
    amplitude: float
    decay: float
    center: float
    width: float = 0.0


class OuterTableCfg(_Strict):
    kind: Literal["table"]
    x: List[float]
    values: List[float]


class DomainCfg(_Strict):
    x_min: float
    x_max: float
    patch: Tuple[float, float]
    outer: Optional[Union[OuterExpCfg, OuterTableCfg]] = Field(default=None,
                                                               discriminator="kind")

    @model_validator(mode="after")
    def _order(self):
        a, b = self.patch
        if not self.x_min < a < b < self.x_max:
            raise ValueError("need x_min < patch[0] < patch[1] < x_max")
        return self


class OutputCfg(_Strict):
    csv_dir: str = "out"
    svg: bool = False
    snapshot_every: Optional[float] = None


class AnalyticCfg(_Strict):
    R_values: Optional[List[float]] = None
    num: int = 60
    profiles: bool = False


class RadiusCfg(_Strict):
    R_init: float
    t_end: float
    dt: Optional[float] = None


class TravelwaveCfg(_Strict):
    n_R: List[float]
    closed_form: Optional[bool] = None


class SweepCfg(_Strict):
    parameter: str
    values: Optional[List[Any]] = None
    range: Optional[Tuple[float, float, int]] = None
    base_mode: Literal["simulate", "analytic", "radius-evolve", "travelwave"]
    overrides: Optional[List[dict]] = None
    workers: int = 1

    @model_validator(mode="after")
    def _values(self):
        if (self.values is None) == (self.range is None):
            raise ValueError("give exactly one of values or range")
        if self.overrides is not None and len(self.overrides) != len(self.value_list()):
            raise ValueError("overrides must have one entry per swept value")
        return self

    def value_list(self):
        if self.values is not None:
            return list(self.values)
        a, b, n = self.range
        return [float(v) for v in np.linspace(a, b, n)]


class RunConfig(_Strict):
    mode: Literal["simulate", "analytic", "radius-evolve", "travelwave", "sweep"]
    params: ParamsCfg
    numerics: NumericsCfg = NumericsCfg()
    domain: Optional[DomainCfg] = None
    t_end: Optional[float] = None
    probes: List[float] = []
    output: OutputCfg = OutputCfg()
    analytic: Optional[AnalyticCfg] = None
    radius: Optional[RadiusCfg] = None
    travelwave: Optional[TravelwaveCfg] = None
    sweep: Optional[SweepCfg] = None

    @model_validator(mode="after")
    def _required(self):
        mode = self.sweep.base_mode if self.mode == "sweep" and self.sweep else self.mode
        if self.mode == "sweep" and self.sweep is None:
            raise ValueError("sweep mode needs a 'sweep' section")
        if mode == "simulate" and (self.domain is None or self.t_end is None):
            raise ValueError("simulate mode needs 'domain' and 't_end'")
        if mode == "radius-evolve" and self.radius is None:
            raise ValueError("radius-evolve mode needs a 'radius' section")
        if mode == "travelwave" and self.travelwave is None:
            raise ValueError("travelwave mode needs a 'travelwave' section")
        if self.domain is not None:
            for x in self.probes:
                if not self.domain.x_min <= x <= self.domain.x_max:
                    raise ValueError(f"probe {x} outside [{self.domain.x_min}, "
                                     f"{self.domain.x_max}]")
        if self.mode == "sweep":
            _get_path(self.model_dump(mode="json"), self.sweep.parameter)
        return self


def _get_path(d, path):
    cur = d
    for key in path.split("."):
        if not isinstance(cur, dict) or key not in cur:
            raise ValueError(f"swept parameter {path!r} is not a config field")
        cur = cur[key]
    return cur


def _set_path(d, path, value):
    keys = path.split(".")
    cur = d
    for key in keys[:-1]:
        cur = cur[key]
    cur[keys[-1]] = value


def _merge(base, over):
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _merge(base[k], v)
        else:
            base[k] = v
    return base


def _fill_numerics(cfg: RunConfig) -> RunConfig:
    mode = cfg.sweep.base_mode if cfg.mode == "sweep" else cfg.mode
    num = cfg.numerics
    upd = {}
    if num.h is None:
        upd["h"] = 1e-3 if mode == "analytic" else 2e-3
    if num.dt is None:
        params = cfg.params.build()
        gmax = max(params.growth.g_minus, params.growth.sup(params.c_B))
        upd["dt"] = 0.1 / gmax
    if not upd:
        return cfg
    return cfg.model_copy(update={"numerics": num.model_copy(update=upd)})


def parse_config(text: str) -> RunConfig:
    """Validated RunConfig from JSON text, with numerics defaults filled.

    Raises
    ------
    ConfigError
        malformed JSON or schema violations (messages carry field paths).
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    try:
        cfg = RunConfig.model_validate(raw)
        cfg.params.build()
    except ValidationError as exc:
        lines = [f"{'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}"
                 for e in exc.errors()]
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines)) from exc
    except ValueError as exc:
        raise ConfigError(f"invalid config: params: {exc}") from exc
    return _fill_numerics(cfg)


def serialize_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True)


def bundled_config(name: str) -> str:
    """Text of a config shipped with the package (e.g. ``figure3.json``)."""
    return resources.files("necrosim").joinpath("configs", name).read_text(encoding="utf-8")


def load_config(path: str) -> RunConfig:
    p = Path(path)
    if p.exists():
        text = p.read_text(encoding="utf-8")
    else:
        try:
            text = bundled_config(p.name)
        except (FileNotFoundError, OSError) as exc:
            raise ConfigError(f"config file not found: {path}") from exc
    return parse_config(text)


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_line_chart(series, title="", xlabel="", ylabel="", width=640, height=400) -> str:
    """Standalone SVG with one polyline per ``(label, x, y)`` series."""
    ml, mr, mt, mb = 60, 120, 30, 45
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    ok = np.isfinite(xs) & np.isfinite(ys)
    x0, x1 = (float(xs[ok].min()), float(xs[ok].max())) if ok.any() else (0.0, 1.0)
    y0, y1 = (float(ys[ok].min()), float(ys[ok].max())) if ok.any() else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - ml - mr, height - mt - mb

    def X(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def Y(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
           f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
           f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>']
    for v in np.linspace(x0, x1, 5):
        out.append(f'<line x1="{X(v):.1f}" y1="{mt + ph}" x2="{X(v):.1f}" y2="{mt + ph + 4}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{X(v):.1f}" y="{mt + ph + 16}" text-anchor="middle">{v:.3g}</text>')
    for v in np.linspace(y0, y1, 5):
        out.append(f'<line x1="{ml - 4}" y1="{Y(v):.1f}" x2="{ml}" y2="{Y(v):.1f}" stroke="black"/>')
        out.append(f'<text x="{ml - 6}" y="{Y(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{ylabel}</text>')
    for i, (label, sx, sy) in enumerate(series):
        col = _COLORS[i % len(_COLORS)]
        sx, sy = np.asarray(sx, float), np.asarray(sy, float)
        good = np.isfinite(sx) & np.isfinite(sy)
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(sx[good], sy[good]))
        out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>')
        ly = mt + 14 * (i + 1)
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly - 4}" x2="{ml + pw + 30}" y2="{ly - 4}" '
                   f'stroke="{col}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 34}" y="{ly}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _write_svg(path: Path, *args, **kw):
    path.write_text(svg_line_chart(*args, **kw), encoding="utf-8")


# --------------------------------------------------------------------------
# mode runners
# --------------------------------------------------------------------------

def _sim_config(cfg: RunConfig) -> simulator.SimConfig:
    d = cfg.domain
    if d.outer is None:
        outer = simulator.OuterDensity()
    elif d.outer.kind == "table":
        outer = simulator.OuterTable(tuple(d.outer.x), tuple(d.outer.values))
    else:
        outer = simulator.OuterDensity(d.outer.amplitude, d.outer.decay, d.outer.center,
                                       d.outer.width)
    return simulator.SimConfig(cfg.params.build(), cfg.numerics.build(), d.x_min, d.x_max,
                               tuple(d.patch), outer, cfg.t_end, cfg.output.snapshot_every,
                               tuple(cfg.probes))


def _run_simulate(cfg: RunConfig, out: Path, svg: bool):
    traj = simulator.run(_sim_config(cfg))
    write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, traj.rows())
    for t, x, n, p, c in traj.profiles:
        write_csv(out / f"profiles_t{t:.4f}.csv", PROFILE_HEADER, zip(x, n, p, c))
    write_csv(out / "events.csv", EVENTS_HEADER,
              [(e.probe_x, e.t0, e.t1) for e in traj.events])
    if svg:
        if traj.profiles:
            t, x, n, p, c = traj.profiles[-1]
            _write_svg(out / "profiles.svg", [("n", x, n), ("p", x, p), ("c", x, c)],
                       f"profiles at t = {t:.3g}", "x", "")
        _write_svg(out / "fronts.svg", [("a(t)", traj.t, traj.a), ("b(t)", traj.t, traj.b)],
                   "bulk boundary", "t", "x")
        if cfg.probes and traj.profiles:
            ts = [pr[0] for pr in traj.profiles]
            series = [(f"n({xp:g}, t)", ts,
                       [float(np.interp(xp, pr[1], pr[2])) for pr in traj.profiles])
                      for xp in cfg.probes]
            _write_svg(out / "density_probes.svg", series, "density at probes", "t", "n")
    log.info("simulate: status=%s, %d steps", traj.status, len(traj.t))
    return traj


def _run_analytic(cfg: RunConfig, out: Path, svg: bool):
    params = cfg.params.build()
    tol = cfg.numerics.bisect_tol
    radii = analytic.critical_radii(params, tol)
    acfg = cfg.analytic or AnalyticCfg()
    if acfg.R_values is not None:
        Rs = sorted(acfg.R_values)
    else:
        Rs = sorted(set(np.linspace(0.5 * radii.R0, 3 * radii.R1, acfg.num).tolist()
                        + [radii.R0, radii.R1]))
    rows = []
    for R in Rs:
        core = analytic.solve_core(R, params, tol, radii)
        flag = "R0" if R == radii.R0 else "R1" if R == radii.R1 else ""
        rows.append((R, core.case, core.r, core.Rbar, core.x1,
                     analytic.boundary_speed(R, params, core), flag))
        if acfg.profiles:
            h = cfg.numerics.h
            x = np.linspace(-R, R, int(round(2 * R / h)) + 1)
            p = analytic.pressure_profile(R, params, core)(x)
            c = analytic.nutrient_profile(R, params, core)(x)
            n = np.ones_like(x)
            if core.case == 1:
                n[np.abs(x) < core.r] = math.nan
            write_csv(out / f"profiles_R{R:.6f}.csv", PROFILE_HEADER, zip(x, n, p, c))
    write_csv(out / "analytic.csv", ANALYTIC_HEADER, rows)
    if svg:
        R = np.array([r[0] for r in rows])
        _write_svg(out / "analytic.svg", [("dR/dt", R, [r[5] for r in rows]),
                                          ("core r", R, [r[2] for r in rows])],
                   "radially symmetric bulk", "R", "")
    return rows


def _run_radius(cfg: RunConfig, out: Path, svg: bool):
    params = cfg.params.build()
    rc = cfg.radius
    traj = analytic.evolve_radius(rc.R_init, rc.t_end, params, cfg.numerics.build(), rc.dt)
    tol = cfg.numerics.bisect_tol
    radii = analytic.critical_radii(params, tol)
    rows = []
    for t, R in zip(traj.t, traj.R):
        core = analytic.solve_core(R, params, tol, radii)
        v = analytic.boundary_speed(R, params, core)
        lo, hi = (-core.r, core.r) if core.case == 1 else (math.nan, math.nan)
        rows.append((t, -R, R, lo, hi, v, v))
    write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, rows)
    hist = [analytic.density_history(x, traj, params) for x in cfg.probes]
    write_csv(out / "events.csv", EVENTS_HEADER, [(h.x, h.t0, h.t1) for h in hist])
    if svg:
        _write_svg(out / "radius.svg", [("R(t)", traj.t, traj.R)], "bulk radius", "t", "R")
        if hist:
            _write_svg(out / "density_probes.svg",
                       [(f"n({h.x:g}, t)", traj.t, h(traj.t)) for h in hist],
                       "density at probes", "t", "n")
    return traj


def _run_travelwave(cfg: RunConfig, out: Path, svg: bool):
    params = cfg.params.build()
    numerics = cfg.numerics.build()
    sols = []
    for nR in cfg.travelwave.n_R:
        twc = travelwave.TWConfig(nR, params.nutrient_mode, params, numerics)
        if params.nutrient_mode == "in_vitro":
            sol = travelwave.tw_invitro(twc, cfg.travelwave.closed_form)
        else:
            sol = travelwave.solve_sigma(twc)
        sols.append(sol)
        write_csv(out / f"profiles_nR{nR:.6f}.csv", PROFILE_HEADER,
                  zip(sol.x, sol.n, sol.p, sol.c))
    write_csv(out / "tw_summary.csv", TW_HEADER, [s.summary_row() for s in sols])
    if svg and sols:
        s = sols[-1]
        win = (s.x > -5) & (s.x < s.R + 10)
        _write_svg(out / "tw_profiles.svg",
                   [("n", s.x[win], s.n[win]), ("p", s.x[win], s.p[win]),
                    ("c", s.x[win], s.c[win])],
                   f"traveling wave, n_R = {s.n_R:g}", "x", "")
        _write_svg(out / "tw_speed.svg", [("sigma", [v.n_R for v in sols],
                                          [v.sigma for v in sols])], "wave speed", "n_R", "")
    return sols


_RUNNERS = {"simulate": _run_simulate, "analytic": _run_analytic,
            "radius-evolve": _run_radius, "travelwave": _run_travelwave}


def _sweep_item(args):
    text, out, svg = args
    cfg = parse_config(text)
    Path(out).mkdir(parents=True, exist_ok=True)
    _RUNNERS[cfg.mode](cfg, Path(out), svg)
    return out


def sweep_configs(cfg: RunConfig) -> List[Tuple[str, RunConfig]]:
    """(subdirectory name, RunConfig) for every swept value."""
    sw = cfg.sweep
    base = cfg.model_dump(mode="json")
    base["mode"] = sw.base_mode
    base["sweep"] = None
    name = sw.parameter.split(".")[-1]
    items = []
    for i, v in enumerate(sw.value_list()):
        d = copy.deepcopy(base)
        _set_path(d, sw.parameter, v)
        if sw.overrides:
            _merge(d, sw.overrides[i])
        items.append((f"{i:03d}_{name}={v}", parse_config(json.dumps(d))))
    return items


def _run_sweep(cfg: RunConfig, out: Path, svg: bool):
    items = [(serialize_config(c), str(out / sub), svg) for sub, c in sweep_configs(cfg)]
    if cfg.sweep.workers > 1:
        with ProcessPoolExecutor(cfg.sweep.workers) as ex:
            return list(ex.map(_sweep_item, items))
    return [_sweep_item(it) for it in items]


_RUNNERS["sweep"] = _run_sweep

SOLVER_ERRORS = (simulator.SimulationError, travelwave.TWError, ObstacleNonConvergence,
                 TruncationError, ArithmeticError, RuntimeError, ValueError)


def run_command(cfg: RunConfig, out: Optional[Path] = None, svg: Optional[bool] = None) -> int:
    """Dispatch to the mode runner and write artifacts; returns the exit code."""
    out = Path(out if out is not None else cfg.output.csv_dir)
    svg = cfg.output.svg if svg is None else svg
    out.mkdir(parents=True, exist_ok=True)
    try:
        _RUNNERS[cfg.mode](cfg, out, svg)
    except TypeError as exc:
        # laws the chosen mode cannot handle, e.g. affine growth in analytic mode
        print(f"necrosim: unsupported configuration: {exc}", file=sys.stderr)
        return 2
    except SOLVER_ERRORS as exc:
        print(f"necrosim: solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        diag = getattr(exc, "diagnostics", None)
        if diag:
            print(f"necrosim: diagnostics: {diag}", file=sys.stderr)
        return 3
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="necrosim", description=__doc__.splitlines()[0])
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", required=True, help="JSON config path or bundled name")
    ap.add_argument("--out", default=None, help="output directory (overrides output.csv_dir)")
    ap.add_argument("--svg", action="store_true", help="also write SVG charts")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"necrosim: {exc}", file=sys.stderr)
        return 2
    if cfg.mode != args.mode:
        print(f"necrosim: config mode {cfg.mode!r} does not match {args.mode!r}",
              file=sys.stderr)
        return 2
    return run_command(cfg, args.out, True if args.svg else None)


if __name__ == "__main__":
    sys.exit(main())
