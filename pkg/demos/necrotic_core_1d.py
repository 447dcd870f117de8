"""Bulk growth on [0, 3] with a thin outer density and a necrotic core.

Prints the entry time t0 and the core time t1 at x = 2 and writes SVG
charts of the final profiles, the bulk boundary and the density at x = 2.

    python demos/necrotic_core_1d.py --out demo_out/core_1d
"""
import argparse
from pathlib import Path

import numpy as np

from necrosim import simulator as sim
from necrosim.cli import svg_line_chart
from necrosim.model import NumericsConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_out/core_1d")
    ap.add_argument("--dt", type=float, default=1e-2)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cfg = sim.figure3_config(NumericsConfig(h=2e-3, dt=args.dt), probes=(2.0,))
    cfg = sim.SimConfig(cfg.params, cfg.numerics, cfg.x_min, cfg.x_max, cfg.patch, cfg.outer,
                        cfg.t_end, 0.1, cfg.probes)
    traj = sim.run(cfg)
    ev = traj.events[0]
    print(f"status: {traj.status} at t = {traj.t[-1]:.3f}")
    print(f"x = 2: t0 = {ev.t0}, t1 = {ev.t1}")
    for t, core in zip(traj.t, traj.core):
        if core and abs(t - round(t)) < 1e-9:
            print(f"  t = {t:4.1f}  core = [{core[0][0]:.3f}, {core[0][1]:.3f}]")

    t, x, n, p, c = traj.profiles[-1]
    (out / "profiles.svg").write_text(svg_line_chart(
        [("n", x, n), ("p", x, p), ("c", x, c)], f"profiles at t = {t:.2f}", "x"))
    (out / "fronts.svg").write_text(svg_line_chart(
        [("a(t)", traj.t, traj.a), ("b(t)", traj.t, traj.b)], "bulk boundary", "t", "x"))
    ts = [pr[0] for pr in traj.profiles]
    n2 = [float(np.interp(2.0, pr[1], pr[2])) for pr in traj.profiles]
    (out / "density_x2.svg").write_text(svg_line_chart(
        [("n(2, t)", ts, n2)], "density at x = 2", "t", "n"))
    print(f"charts written to {out}/")


if __name__ == "__main__":
    main()
