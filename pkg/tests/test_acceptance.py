"""Acceptance criteria 1-8.

Each test records its sub-checks with the ``acceptance`` fixture; a
one-line PASS/FAIL summary per criterion is printed at the end of the run.
Run standalone with ``python tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from necrosim import analytic as an
from necrosim import simulator as sim
from necrosim import travelwave as tw
from necrosim.elliptic import (Grid, Profile, complementarity_residual, hat_average,
                               solve_nutrient_invitro, solve_obstacle)
from necrosim.model import IN_VITRO, IN_VIVO, NumericsConfig

pytestmark = pytest.mark.slow


# 1 ---------------------------------------------------------------------------

def test_criterion_1_figure3(acceptance):
    t_start = time.perf_counter()
    coarse = sim.run(sim.figure3_config(NumericsConfig(h=2e-3, dt=1e-2), probes=(2.0,)))
    runtime = time.perf_counter() - t_start
    fine = sim.run(sim.figure3_config(NumericsConfig(h=2e-3, dt=5e-3), probes=(2.0,)))
    e, f = coarse.events[0], fine.events[0]
    have = e.t0 is not None and e.t1 is not None and f.t0 is not None and f.t1 is not None
    checks = {
        "t0 in [3.5, 4.5]": have and 3.5 <= e.t0 <= 4.5,
        "t1 in [19, 23]": have and 19.0 <= e.t1 <= 23.0,
        "runtime < 120 s": runtime < 120.0,
        "dt halving moves t0, t1 by < 0.2": have and abs(e.t0 - f.t0) < 0.2
        and abs(e.t1 - f.t1) < 0.2,
    }
    acceptance(1, checks, f"t0={e.t0}, t1={e.t1}, dt/2: t0={f.t0}, t1={f.t1}, "
                          f"runtime={runtime:.1f}s")
    assert all(checks.values()), checks


# 2 ---------------------------------------------------------------------------

def _pc_source(rng, x):
    k = rng.integers(1, 7)
    cuts = np.sort(rng.uniform(x[0], x[-1], k - 1))
    return rng.uniform(-2, 2, k)[np.searchsorted(cuts, x)]


def test_criterion_2_obstacle(acceptance):
    rng = np.random.default_rng(20240601)
    cfg = NumericsConfig()
    g = Grid(0.0, 2.0, 401)
    worst, comparison_ok = 0.0, True
    for _ in range(100):
        s = Profile(g, _pc_source(rng, g.x))
        r = complementarity_residual(solve_obstacle(g, s, cfg), s)
        worst = max(worst, r.max_viol_nonneg, r.max_viol_supersol, r.max_viol_compl)
        s1 = Profile(g, s.values + np.abs(_pc_source(rng, g.x)))
        p1 = solve_obstacle(g, s1, cfg).p.values
        p2 = solve_obstacle(g, s, cfg).p.values
        comparison_ok &= bool(np.all(p1 >= p2 - 1e-10))

    # closed form with contact set |x| <= 0.7 for the source x^2 - a2
    r0 = 0.7
    a2 = quad(lambda z: (1 - z) * z * z, r0, 1)[0] / quad(lambda z: 1 - z, r0, 1)[0]

    def exact(x):
        x = np.abs(x)
        F = lambda t, xx: xx * (t**3 / 3 - a2 * t) - (t**4 / 4 - a2 * t * t / 2)
        return np.where(x > r0, -(F(x, x) - F(r0, x)), 0.0)

    fine = NumericsConfig(psor_tol=1e-10)
    errs = []
    for n in (101, 201, 401, 801):
        gg = Grid(-1.0, 1.0, n)
        sol = solve_obstacle(gg, Profile.sample(gg, lambda x: x * x - a2), fine)
        errs.append(np.max(np.abs(sol.p.values - exact(gg.x))))
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    checks = {
        "complementarity <= 1e-8": worst <= 1e-8,
        "comparison principle": comparison_ok,
        "mesh ratios in [3.2, 4.8]": all(3.2 <= q <= 4.8 for q in ratios),
    }
    acceptance(2, checks, f"max residual {worst:.2e}, ratios {np.round(ratios, 3).tolist()}")
    assert all(checks.values()), checks


# 3 ---------------------------------------------------------------------------

def test_criterion_3_cross_validation(radial_params, acceptance):
    P = radial_params
    rad = an.critical_radii(P)
    h = 1e-3
    tol = 5 * h * h
    out = {}
    for R in (0.5 * rad.R0, 0.5 * (rad.R0 + rad.R1), 2 * rad.R1, 10.0):
        co = an.solve_core(R, P)
        pp, cp = an.pressure_profile(R, P, co), an.nutrient_profile(R, P, co)
        g = Grid.from_spacing(-R, R, h)
        x = g.x
        if co.case == 1:
            bps = [-co.r - co.x1, co.r + co.x1]
        elif co.case == 2:
            bps = [-co.x1, co.x1]
        else:
            bps = []
        src = Profile(g, hat_average(x, lambda y: P.growth(cp(y)), bps))
        p = solve_obstacle(g, src, NumericsConfig(h=h)).p.values
        psi = hat_average(x, lambda y: np.where(np.abs(y) < co.r, P.consumption.n_c, 1.0),
                          [-co.r, co.r] if co.r > 0 else [])
        c = solve_nutrient_invitro(g, Profile(g, psi), P.c_B).values
        out[(co.case, R)] = (np.max(np.abs(p - pp(x))), np.max(np.abs(c - cp(x))))
    cases = sorted({k[0] for k in out})
    checks = {f"case {k[0]} R={k[1]:.4g} pressure": v[0] <= tol for k, v in out.items()}
    checks.update({f"case {k[0]} R={k[1]:.4g} nutrient": v[1] <= tol for k, v in out.items()})
    checks["cases 1, 2, 3 covered"] = cases == [1, 2, 3]
    worst = max(max(v) for v in out.values())
    acceptance(3, checks, f"worst sup error {worst:.2e} vs 5h^2 = {tol:.1e}")
    assert all(checks.values()), checks


# 4 ---------------------------------------------------------------------------

def test_criterion_4_core_structure(radial_params, acceptance):
    P = radial_params
    rad = an.critical_radii(P)
    fstar = an.f_of_beta(math.sqrt(P.consumption.n_c), P)
    Rs = np.linspace(rad.R1 + 1e-3, 50.0, 50)
    cores = [an.solve_core(R, P) for R in Rs]
    r = np.array([c.r for c in cores])
    Rbar = np.array([c.Rbar for c in cores])
    # past R ~ 37 the steps of Rbar are below one ulp, so its strict decrease
    # is checked through the excess over f(sqrt(n_c)), computed without cancellation
    excess = np.array([an.rbar_excess(c.R, P, c) for c in cores])
    inclusion = all(c.x1 > 0 for c in cores)
    below = all(an.nutrient_profile(c.R, P, c)(c.r) < P.c_thresh for c in cores)
    C_in = [an.C_of_R(R, P) for R in np.linspace(rad.R0, rad.R1, 52)[1:-1]]
    C_R1 = an.C_of_R(rad.R1, P, an.solve_core(rad.R1, P))
    # C on the case-2 branch evaluated at the right end of the interval
    C_R1_limit = an.C_of_R(rad.R1 * (1 - 1e-15), P)
    r_near = an.solve_core(rad.R1 + 1e-8, P).r
    checks = {
        "r(R1 + 1e-8) < 1e-4": r_near < 1e-4,
        "r strictly increasing": bool(np.all(np.diff(r) > 0)),
        "Rbar non-increasing in float64": bool(np.all(np.diff(Rbar) <= 0)),
        "Rbar - f(sqrt(n_c)) consistent": bool(np.all(np.abs(Rbar - fstar - excess) <= 1e-11)),
        "Rbar strictly decreasing": bool(np.all(np.diff(excess) < 0)) and excess[-1] > 0,
        "|Rbar(50) - f(sqrt(n_c))| <= 1e-3": abs(Rbar[-1] - fstar) <= 1e-3,
        "x1 > 0 everywhere": inclusion,
        "c(r) < c_thresh everywhere": below,
        "C > 0 on (R0, R1)": all(v > 0 for v in C_in),
        "|C(R1)| <= 1e-10": abs(C_R1) <= 1e-10 and abs(C_R1_limit) <= 1e-10,
    }
    acceptance(4, checks, f"r(R1+1e-8)={r_near:.2e}, Rbar(50)-f*={excess[-1]:.2e}, "
                          f"C(R1-)={C_R1_limit:.1e}")
    assert all(checks.values()), checks


# 5 ---------------------------------------------------------------------------

def test_criterion_5_asymptotic_speed(radial_params, acceptance):
    P = radial_params
    v_star = an.asymptotic_speed(P)
    traj = an.evolve_radius(2.0, 80.0, P, dt=0.02)
    err_ode = traj.asymptotic_speed / v_star - 1
    cfg = sim.SimConfig(P, NumericsConfig(h=4e-3, dt=0.02), -16.0, 16.0, (-1.0, 1.0),
                        sim.OuterDensity(), t_end=30.0)
    run = sim.run(cfg)
    err_sim = sim.front_speed(run) / v_star - 1
    checks = {
        "radius ODE within 0.1%": abs(err_ode) <= 1e-3,
        "simulator within 2%": abs(err_sim) <= 2e-2 and run.status == "completed",
    }
    acceptance(5, checks, f"target {v_star:.6f}, ODE {err_ode:+.2e}, simulator {err_sim:+.2e}")
    assert all(checks.values()), checks


# 6 ---------------------------------------------------------------------------

def test_criterion_6_separatrix(invivo_params, acceptance):
    P = invivo_params
    n_R = 0.3
    top = P.c_B / (1 + float(P.consumption(n_R)))
    sigmas = np.geomspace(0.1, 3.0, 10)
    cRs = np.linspace(P.c_thresh, top, 12)[1:-1]
    in_bracket, monotone, zero_ok, type2 = True, True, True, True
    worst = math.inf
    for s in sigmas:
        Bs = []
        for c in cRs:
            B = tw.shoot_B(s, c, n_R, P)
            lo, hi = tw.lemma_bracket(c, n_R, P)
            in_bracket &= lo - 1e-10 <= B <= hi + 1e-10
            worst = min(worst, B - lo, hi - B)
            Bs.append(B)
            zero_ok &= abs(tw.shoot_B(s, c, 0.0, P) - (P.c_B - c)) <= 1e-8
            for fac in (1.0 + 1e-9, 1.1, 2.0):
                cp = fac * math.sqrt(2) * (P.c_B - c)
                type2 &= tw.classify_shot(s, c, cp, n_R, 1.0, P).kind == "II"
        monotone &= bool(np.all(np.diff(Bs) <= 0))
    checks = {
        "B in bracket to 1e-10": in_bracket,
        "B non-increasing in c_R": monotone,
        "n_R = 0: B = c_B - c_R to 1e-8": zero_ok,
        "steep slopes are Type II": type2,
    }
    acceptance(6, checks, f"10x10 grid, n_R={n_R}, min distance to bracket ends {worst:.3e}")
    assert all(checks.values()), checks


# 7 ---------------------------------------------------------------------------

@pytest.mark.parametrize("n_R", [0.1, 0.25, 0.4])
def test_criterion_7_invivo_wave(invivo_params, acceptance, n_R):
    P = invivo_params
    assert n_R < tw.threshold_nbar(P)
    sol = tw.solve_sigma(tw.TWConfig(n_R, IN_VIVO, P))
    r = sol.residuals
    c = sol.c
    d = np.diff(c)
    resolvable = (c[:-1] > c[0] * (1 + 1e-9)) & (c[1:] < P.c_B - 1e-9)
    g = Grid(sol.x[0], sol.x[-1], sol.x.size)
    st = sim.state_from_profiles(g, sol.n, sol.x[0], sol.R)
    num = NumericsConfig()
    _, diag = sim.step(st, num.dt, P, num)
    checks = {
        "sigma > 0": sol.sigma > 0,
        "R in (R0, R_b]": tw.R0_of_nR(n_R, P) < sol.R <= tw.R_b(P),
        "velocity law <= 1e-8": r["velocity_law"] <= 1e-8,
        "p(R) = 0 to 1e-8": r["pressure_bc"] <= 1e-8,
        "int s G ds <= 1e-8": r["integral"] <= 1e-8,
        "c increasing": bool(np.all(d >= 0) and np.all(d[resolvable] > 0)),
        "simulator speed within 1%": abs(diag.speed_right / sol.sigma - 1) <= 1e-2,
    }
    acceptance(7, checks, f"sigma={sol.sigma:.8f}, R={sol.R:.6f}", part=f"n_R={n_R}")
    assert all(checks.values()), checks


# 8 ---------------------------------------------------------------------------

def test_criterion_8_invitro_scaling(invitro_tw_params, acceptance):
    P = invitro_tw_params
    sols = [tw.tw_invitro(tw.TWConfig(n, IN_VITRO, P)) for n in (0.0, 0.3, 0.6, 0.9)]
    base = sols[0]
    scaled = [abs(s.sigma * (1 - s.n_R) - base.sigma) for s in sols]
    same = all(s.R == base.R and s.p.tobytes() == base.p.tobytes()
               and s.c.tobytes() == base.c.tobytes() for s in sols)
    checks = {
        "sigma (1 - n_R) = sigma(0) to 1e-10": max(scaled) <= 1e-10,
        "R, p, c byte-identical": same,
        "sigma(0) = analytic limit speed": base.sigma == an.asymptotic_speed(P),
    }
    acceptance(8, checks, f"sigma(0)={base.sigma:.10f}, max scaling error {max(scaled):.1e}")
    assert all(checks.values()), checks


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
