import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from necrosim.elliptic import (Grid, ObstacleNonConvergence, Profile, TruncationError,
                               complementarity_residual, growth_load, hat_average,
                               neg_laplacian, solve_nutrient_invitro, solve_nutrient_invivo,
                               solve_obstacle, solve_obstacle_nodes, solve_poisson_dirichlet)
from necrosim.model import IgnitionAffine, NumericsConfig

CFG = NumericsConfig()


def test_grid_spacing_and_validation():
    g = Grid(0.0, 1.0, 11)
    assert g.h == pytest.approx(0.1)
    assert g.x[-1] == 1.0
    assert Grid.from_spacing(-1.0, 1.0, 0.01).n_nodes == 201
    with pytest.raises(ValueError):
        Grid(1.0, 0.0, 5)
    with pytest.raises(ValueError):
        Grid(0.0, 1.0, 2)
    with pytest.raises(ValueError):
        Profile(g, np.zeros(5))


# --------------------------------------------------------------------------
# Poisson
# --------------------------------------------------------------------------

@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_poisson_parabola(sign):
    g = Grid(0.0, 1.0, 101)
    u = solve_poisson_dirichlet(g, Profile.constant(g, sign), 0.0, 0.0)
    assert np.max(np.abs(u.values - sign * g.x * (1 - g.x) / 2)) < 1e-13
    assert u.values[50] == pytest.approx(sign * 0.125)


def test_poisson_zero_and_bc():
    g = Grid(0.0, 2.0, 51)
    assert np.all(solve_poisson_dirichlet(g, Profile.constant(g, 0.0), 0.0, 0.0).values == 0.0)
    u = solve_poisson_dirichlet(g, Profile.constant(g, 0.0), 1.0, 3.0)
    assert np.allclose(u.values, 1.0 + g.x, atol=1e-13)


def test_poisson_discrete_equation():
    g = Grid(-1.0, 2.0, 77)
    rng = np.random.default_rng(1)
    s = Profile(g, rng.normal(size=g.n_nodes))
    u = solve_poisson_dirichlet(g, s, 0.3, -0.2)
    assert np.allclose(neg_laplacian(g.x, u.values), s.values[1:-1], atol=1e-9)


# --------------------------------------------------------------------------
# obstacle
# --------------------------------------------------------------------------

def test_obstacle_negative_source():
    g = Grid(0.0, 1.0, 101)
    s = Profile.constant(g, -1.0)
    sol = solve_obstacle(g, s, CFG)
    assert np.all(sol.p.values == 0.0)
    assert sol.coincidence.all()
    r = complementarity_residual(sol, s)
    assert r.max() == 0.0


def test_obstacle_positive_source_matches_poisson():
    g = Grid(0.0, 1.0, 201)
    s = Profile.constant(g, 1.0)
    sol = solve_obstacle(g, s, CFG)
    u = solve_poisson_dirichlet(g, s, 0.0, 0.0)
    assert np.max(np.abs(sol.p.values - u.values)) < 1e-10
    assert not sol.coincidence[1:-1].any()
    assert complementarity_residual(sol, s).max() <= CFG.psor_tol


def test_pure_psor_agrees_with_predictor():
    g = Grid(-1.0, 1.0, 101)
    s = Profile.sample(g, lambda x: np.where(np.abs(x) < 0.4, -1.0, 1.0))
    a = solve_obstacle(g, s, CFG)
    b = solve_obstacle(g, s, CFG, predictor=False)
    assert b.iterations > 100
    assert np.max(np.abs(a.p.values - b.p.values)) < 1e-9
    assert np.array_equal(a.coincidence, b.coincidence)


def test_pure_psor_from_initial_guess():
    g = Grid(-1.0, 1.0, 101)
    s = Profile.sample(g, lambda x: np.where(np.abs(x) < 0.4, -1.0, 1.0))
    good = solve_obstacle(g, s, CFG)
    warm = solve_obstacle(g, s, CFG, initial=good.p, predictor=False)
    assert warm.iterations < 50


def test_obstacle_nonconvergence():
    g = Grid(0.0, 1.0, 401)
    s = Profile.constant(g, 1.0)
    with pytest.raises(ObstacleNonConvergence) as exc:
        solve_obstacle(g, s, NumericsConfig(max_iter=10), predictor=False)
    assert exc.value.residual > 0


def test_corrupted_solution_flagged():
    g = Grid(0.0, 1.0, 51)
    s = Profile.constant(g, 1.0)
    sol = solve_obstacle(g, s, CFG)
    sol.p.values[10] = -1e-3
    assert complementarity_residual(sol, s).max_viol_nonneg == pytest.approx(1e-3)


def _random_pc_source(rng, x, k):
    cuts = np.sort(rng.uniform(x[0], x[-1], k - 1))
    vals = rng.uniform(-2, 2, k)
    return vals[np.searchsorted(cuts, x)], cuts, vals


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_obstacle_complementarity_random(seed, k):
    rng = np.random.default_rng(seed)
    g = Grid(0.0, 2.0, 401)
    s = Profile(g, _random_pc_source(rng, g.x, k)[0])
    sol = solve_obstacle(g, s, CFG)
    r = complementarity_residual(sol, s)
    assert r.max_viol_nonneg <= 1e-8
    assert r.max_viol_supersol <= 1e-8
    assert r.max_viol_compl <= 1e-8


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_obstacle_comparison_principle(seed, k):
    rng = np.random.default_rng(seed)
    g = Grid(0.0, 2.0, 301)
    s2, _, _ = _random_pc_source(rng, g.x, k)
    bump, _, _ = _random_pc_source(rng, g.x, k)
    s1 = s2 + np.abs(bump)
    p1 = solve_obstacle(g, Profile(g, s1), CFG).p.values
    p2 = solve_obstacle(g, Profile(g, s2), CFG).p.values
    assert np.all(p1 >= p2 - 1e-10)


def _contact_exact():
    # s = x^2 - a2 on [-1, 1]; contact |x| <= 0.7 with p(1) = 0
    r = 0.7
    a2 = quad(lambda z: (1 - z) * z * z, r, 1)[0] / quad(lambda z: 1 - z, r, 1)[0]

    def p(x):
        x = np.abs(x)
        P = lambda t, xx: xx * (t**3 / 3 - a2 * t) - (t**4 / 4 - a2 * t * t / 2)
        return np.where(x > r, -(P(x, x) - P(r, x)), 0.0)

    return a2, p


def _ratios(errs):
    return [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]


def test_obstacle_mesh_convergence_contact():
    a2, exact = _contact_exact()
    cfg = NumericsConfig(psor_tol=1e-10)
    errs = []
    for n in (101, 201, 401, 801):
        g = Grid(-1.0, 1.0, n)
        sol = solve_obstacle(g, Profile.sample(g, lambda x: x * x - a2), cfg)
        errs.append(np.max(np.abs(sol.p.values - exact(g.x))))
        assert not sol.coincidence[1:-1][np.abs(g.x[1:-1]) > 0.71].any()
    for q in _ratios(errs):
        assert 3.2 <= q <= 4.8


def test_obstacle_mesh_convergence_smooth():
    cfg = NumericsConfig(psor_tol=1e-10)
    errs = []
    for n in (101, 201, 401):
        g = Grid(0.0, 1.0, n)
        sol = solve_obstacle(g, Profile.sample(g, lambda x: np.sin(np.pi * x)), cfg)
        errs.append(np.max(np.abs(sol.p.values - np.sin(np.pi * g.x) / np.pi**2)))
    for q in _ratios(errs):
        assert 3.2 <= q <= 4.8


def test_obstacle_nonuniform_nodes():
    x = np.sort(np.concatenate(([0.0, 1.0], np.random.default_rng(3).uniform(0, 1, 200))))
    p, mask, res, _ = solve_obstacle_nodes(x, np.ones_like(x), CFG)
    assert res <= CFG.psor_tol
    assert np.max(np.abs(p - x * (1 - x) / 2)) < 1e-10


# --------------------------------------------------------------------------
# loads
# --------------------------------------------------------------------------

def test_hat_average_of_step():
    x = np.linspace(0.0, 1.0, 11)
    f = lambda y: np.where(y >= 0.33, 1.0, 0.0)
    out = hat_average(x, f, [0.33])
    # node 3 at 0.3: hat support [0.2, 0.4], mass of [0.33, 0.4] under the hat
    h = 0.1
    exact = quad(lambda y: (1 - (y - 0.3) / h), 0.33, 0.4)[0] / h
    assert out[3] == pytest.approx(exact, rel=1e-12)
    assert out[5] == pytest.approx(1.0, abs=1e-15) and out[1] == 0.0


def test_growth_load_matches_hat_average():
    law = IgnitionAffine(2.0, 0.2, 1.2, 0.9)
    x = np.linspace(0.0, 1.0, 21)
    c = 0.5 + 0.8 * x
    direct = hat_average(x, lambda y: law(0.5 + 0.8 * y), [(0.9 - 0.5) / 0.8])
    assert np.allclose(growth_load(x, c, law)[1:-1], direct[1:-1], atol=1e-13)


# --------------------------------------------------------------------------
# nutrient
# --------------------------------------------------------------------------

def test_invitro_no_consumption():
    g = Grid(-1.0, 1.0, 51)
    c = solve_nutrient_invitro(g, Profile.constant(g, 0.0), 0.7)
    assert np.allclose(c.values, 0.7, atol=1e-14)


@pytest.mark.parametrize("lam", [0.5, 1.0, 4.0])
def test_invitro_cosh(lam):
    R, h = 1.3, 1e-3
    g = Grid.from_spacing(-R, R, h)
    c = solve_nutrient_invitro(g, Profile.constant(g, lam), 1.0)
    exact = np.cosh(np.sqrt(lam) * g.x) / np.cosh(np.sqrt(lam) * R)
    assert np.max(np.abs(c.values - exact)) <= 5 * g.h**2
    assert np.all((c.values > 0) & (c.values <= 1.0))


def test_invitro_mesh_convergence():
    errs = []
    for n in (101, 201, 401):
        g = Grid(-1.0, 1.0, n)
        c = solve_nutrient_invitro(g, Profile.constant(g, 2.0), 1.0)
        errs.append(np.max(np.abs(c.values - np.cosh(np.sqrt(2) * g.x) / np.cosh(np.sqrt(2)))))
    for q in _ratios(errs):
        assert 3.2 <= q <= 4.8


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_nutrient_comparison(seed):
    rng = np.random.default_rng(seed)
    g = Grid(0.0, 3.0, 151)
    psi2 = rng.uniform(0, 3, g.n_nodes)
    psi1 = psi2 * rng.uniform(0, 1, g.n_nodes)
    c1 = solve_nutrient_invitro(g, Profile(g, psi1), 1.0).values
    c2 = solve_nutrient_invitro(g, Profile(g, psi2), 1.0).values
    assert np.all(c1 >= c2 - 1e-13)
    assert np.all((c2 > 0) & (c2 <= 1.0 + 1e-14))


def test_invitro_rejects_negative_psi():
    g = Grid(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        solve_nutrient_invitro(g, Profile.constant(g, -1.0), 1.0)


def test_invivo_equilibrium():
    g = Grid(-10.0, 10.0, 201)
    c = solve_nutrient_invivo(g, (0.0, 0.0), Profile.constant(g, 0.0), 1.0)
    assert np.allclose(c.values, 1.0, atol=1e-13)


def test_invivo_margin_check():
    g = Grid(-5.0, 5.0, 101)
    with pytest.raises(TruncationError):
        solve_nutrient_invivo(g, (-1.0, 1.0), Profile.constant(g, 1.0), 1.0, L_trunc=40.0)


def test_invivo_bounded_patch_truncation_insensitive():
    vals = []
    for L in (20.0, 40.0):
        g = Grid.from_spacing(-1.0 - L, 1.0 + L, 2e-3)
        x = g.x
        psi = Profile(g, np.where(np.abs(x) < 1.0, 1.0, 0.0))
        c = solve_nutrient_invivo(g, (-1.0, 1.0), psi, 1.0, L_trunc=L)
        vals.append(np.interp([-21.0, 0.0, 21.0], x, c.values))
    assert np.max(np.abs(vals[0] - vals[1])) < 1e-8


def test_invivo_tail_truncation_insensitive():
    # necrotic tail n = exp(2x) for x < 0, rim (0, 1)
    vals = []
    for L in (20.0, 40.0):
        g = Grid.from_spacing(-L, 41.0, 2e-3)
        x = g.x
        n = np.where(x < 0, np.exp(2 * np.minimum(x, 0)), np.where(x < 1.0, 1.0, 0.0))
        c = solve_nutrient_invivo(g, (g.a, 1.0), Profile(g, n), 1.0, L_trunc=40.0)
        vals.append(np.interp([-20.0, 0.0, 1.0], x, c.values))
    assert np.max(np.abs(vals[0] - vals[1])) < 1e-8
