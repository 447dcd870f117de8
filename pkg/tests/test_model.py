import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from necrosim.model import (GeneralMonotone, IgnitionAffine, IgnitionConstant, IgnitionGeneral,
                            Linear, ModelParams, NumericsConfig, TwoLevel, eval_consumption,
                            eval_growth, validate)

AFFINE = IgnitionAffine(2.0, 0.2, 1.2, 0.9)
TABLE_G = IgnitionGeneral(1.5, 0.3, np.array([0.3, 0.6, 1.0]), np.array([0.5, 0.9, 2.0]))
LAWS_G = [AFFINE, IgnitionConstant(1.0, 1.0, 0.5), TABLE_G]
LAWS_PSI = [TwoLevel(1.0, 0.25), Linear(1.0),
            GeneralMonotone(np.array([0.0, 0.5, 1.0]), np.array([0.0, 0.2, 1.0]))]


def test_affine_values():
    assert eval_growth(AFFINE, 0.5) == -2.0
    assert eval_growth(AFFINE, 1.0) == pytest.approx(1.22, abs=1e-15)


def test_threshold_takes_right_limit():
    assert eval_growth(IgnitionConstant(1.0, 1.0, 0.5), 0.5) == 1.0
    assert eval_growth(AFFINE, 0.9) == 1.2


def test_consumption_values():
    assert eval_consumption(TwoLevel(1.0, 0.25), 1.0) == 1.0
    assert eval_consumption(TwoLevel(1.0, 0.25), 0.7) == 0.25
    assert eval_consumption(TwoLevel(1.0, 0.25), 1.0 - 1e-13) == 1.0
    assert eval_consumption(Linear(1.0), 0.3) == pytest.approx(0.3)


def test_consumption_rejects_out_of_range():
    with pytest.raises(ValueError):
        eval_consumption(Linear(1.0), 1.5)
    with pytest.raises(ValueError):
        eval_consumption(Linear(1.0), -0.1)


@pytest.mark.parametrize("bad", [
    lambda: IgnitionConstant(0.0, 1.0, 0.5),
    lambda: IgnitionAffine(2.0, -0.1, 1.2, 0.9),
    lambda: IgnitionAffine(2.0, 0.2, 0.0, 0.9),
    lambda: TwoLevel(1.0, 1.0),
    lambda: Linear(0.0),
    lambda: GeneralMonotone(np.array([0.1, 1.0]), np.array([0.0, 1.0])),
    lambda: NumericsConfig(psor_omega=2.0),
    lambda: NumericsConfig(h=0.0),
])
def test_invalid_construction(bad):
    with pytest.raises(ValueError):
        bad()


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 3), st.floats(0, 3), st.sampled_from(LAWS_G))
def test_growth_monotone(c1, c2, law):
    lo, hi = sorted((c1, c2))
    assert eval_growth(law, lo) <= eval_growth(law, hi)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from(LAWS_PSI))
def test_consumption_monotone(n1, n2, law):
    lo, hi = sorted((n1, n2))
    assert eval_consumption(law, lo) <= eval_consumption(law, hi)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(LAWS_G), st.floats(0, 1))
def test_plateau_below_threshold(law, frac):
    c = frac * law.c_thresh * (1 - 1e-12)
    assert eval_growth(law, c) == -law.g_minus


def test_vectorized_matches_scalar():
    c = np.linspace(0, 2, 41)
    for law in LAWS_G:
        assert np.array_equal(law(c), np.array([law(v) for v in c]))


def test_validate_figure3():
    rep = validate(ModelParams(1.0, AFFINE, Linear(1.0)))
    assert rep.checks["c_thresh < c_B"]
    assert rep.checks["psi(0) = 0"]
    assert rep.checks["n_c < 1"] is None
    # 1 * 1 * 0.2 / (e * 1.2)
    assert rep.smallness_value == pytest.approx(0.2 / (math.e * 1.2))
    assert rep.checks["smallness"]


def test_validate_flags_ordering():
    rep = validate(ModelParams(1.0, IgnitionConstant(1.0, 1.0, 1.5), Linear(1.0)))
    assert rep.checks["c_thresh < c_B"] is False
    assert "c_thresh < c_B" in rep.violations
    assert not rep.ok


def test_validate_zero_derivative():
    psi = GeneralMonotone(np.array([0.0, 1.0]), np.array([0.0, 0.0]), lipschitz=0.0)
    rep = validate(ModelParams(1.0, TABLE_G, psi))
    assert rep.smallness_value == 0.0
    assert rep.checks["smallness"]


def test_validate_two_level_psi0_not_applicable():
    rep = validate(ModelParams(1.0, IgnitionConstant(1.0, 1.0, 0.5), TwoLevel(1.0, 0.25)))
    assert rep.checks["psi(0) = 0"] is None
    assert rep.checks["n_c < 1"]


def test_encode_is_stable():
    for law in LAWS_G + LAWS_PSI:
        k1, p1, x1, y1 = law.encode()
        k2, p2, x2, y2 = law.encode()
        assert k1 == k2 and np.array_equal(p1, p2) and np.array_equal(x1, x2)
