"""Radially symmetric bulk: core onset, radius ODE and the limiting speed.

Compares the radius ODE and the front-tracking simulator with the closed
form limit speed, and prints the core radius across the three regimes.

    python demos/radial_limit.py
"""
import numpy as np

from necrosim import analytic as an
from necrosim import simulator as sim
from necrosim.model import IgnitionConstant, ModelParams, NumericsConfig, TwoLevel


def main():
    P = ModelParams(1.0, IgnitionConstant(1.0, 1.0, 0.5), TwoLevel(1.0, 0.25))
    rad = an.critical_radii(P)
    print(f"R0 = {rad.R0:.10f}  (threshold first reached at the center)")
    print(f"R1 = {rad.R1:.10f}  (necrotic core appears)")
    print(f"{'R':>8} {'case':>4} {'r':>10} {'Rbar':>10} {'dR/dt':>10}")
    for R in (0.5 * rad.R0, 0.5 * (rad.R0 + rad.R1), 2 * rad.R1, 5.0, 10.0, 50.0):
        co = an.solve_core(R, P)
        print(f"{R:8.4f} {co.case:4d} {co.r:10.6f} {co.Rbar:10.6f} "
              f"{an.boundary_speed(R, P, co):10.6f}")

    v = an.asymptotic_speed(P)
    traj = an.evolve_radius(1.0, 60.0, P, dt=0.02)
    print(f"\nlimit speed              {v:.8f}")
    print(f"radius ODE, last 10%     {traj.asymptotic_speed:.8f}")
    run = sim.run(sim.SimConfig(P, NumericsConfig(h=4e-3, dt=0.02), -16.0, 16.0,
                                (-1.0, 1.0), sim.OuterDensity(), t_end=30.0))
    vs = sim.front_speed(run)
    print(f"simulator, last 20%      {vs:.8f}  ({100 * (vs / v - 1):+.2f}%)")

    h = an.density_history(3.0, traj, P)
    print(f"\nx = 3 enters the bulk at t0 = {h.t0:.4f}, joins the core at t1 = {h.t1:.4f}")
    ts = np.array([h.t1 + 0.5, h.t1 + 1.0, h.t1 + 2.0])
    print("density after t1:", np.round(h(ts), 6), "(decays like exp(-g_minus (t - t1)))")


if __name__ == "__main__":
    main()
