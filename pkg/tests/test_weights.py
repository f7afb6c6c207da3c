import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vpx import ConfigError, DomainError, WeightOverflow, WeightSpec, eval_Q, eval_T, load_spec, preset
from vpx.weights import (PRESETS, T_limit0, T_safe, check_class_conditions, check_T_growth,
                         check_T_shift_stability, multiplier, weight)
from vpx.mrs import mrs_table

finite_x = st.floats(min_value=-8.0, max_value=8.0, allow_nan=False)


def test_freud_closed_form():
    s = WeightSpec("freud", 3.0, scale=2.0)
    x = np.array([-2.0, -0.5, 0.0, 0.7, 1.9])
    Q, Qp, Qpp = eval_Q(s, x)
    np.testing.assert_allclose(Q, np.abs(x) ** 3 / 2, rtol=1e-15)
    np.testing.assert_allclose(Qp, 1.5 * np.sign(x) * x ** 2, rtol=1e-15)
    np.testing.assert_allclose(Qpp, 3 * np.abs(x), rtol=1e-15, atol=0)


def test_erdos_values():
    s = preset("erdos")                      # Q = |x| (e^|x| - 1)
    Q, Qp, Qpp = eval_Q(s, 1.0)
    e = math.e
    assert Q == pytest.approx(e - 1, rel=1e-15)
    assert Qp == pytest.approx(2 * e - 1, rel=1e-15)
    assert Qpp == pytest.approx(3 * e, rel=1e-15)
    assert eval_T(s, 1.0) == pytest.approx((2 * e - 1) / (e - 1), rel=1e-15)


@pytest.mark.parametrize("name", list(PRESETS))
def test_derivatives_match_finite_differences(name):
    s = preset(name)
    x = np.linspace(0.2, min(3.0, 0.5 * s.x_max), 25)
    h = 1e-5
    Q, Qp, Qpp = eval_Q(s, x)
    fd1 = (eval_Q(s, x + h)[0] - eval_Q(s, x - h)[0]) / (2 * h)
    fd2 = (eval_Q(s, x + h)[1] - eval_Q(s, x - h)[1]) / (2 * h)
    np.testing.assert_allclose(Qp, fd1, rtol=1e-7)
    np.testing.assert_allclose(Qpp, fd2, rtol=1e-7)


@pytest.mark.parametrize("name", list(PRESETS))
@given(x=finite_x)
def test_even_and_nonnegative(name, x):
    s = preset(name)
    Q, Qp, Qpp = eval_Q(s, x)
    Qm, Qpm, Qppm = eval_Q(s, -x)
    assert Q == Qm and Qp == -Qpm and Qpp == Qppm
    assert Q >= 0
    assert 0 < weight(s, x) <= 1 or Q > 700


def test_T_limits_and_domain():
    s = preset("erdos")
    assert T_limit0(s) == 2.0
    assert eval_T(s, 1e-9) == pytest.approx(2.0, rel=1e-8)
    assert T_safe(s, 0.0) == 2.0
    with pytest.raises(DomainError):
        eval_T(s, 0.0)
    with pytest.raises(WeightOverflow):
        eval_Q(s, s.x_max * 1.01)
    with pytest.raises(DomainError):
        eval_Q(s, np.nan)
    assert eval_T(preset("freud4"), np.array([0.3, 7.0])).tolist() == [4.0, 4.0]


def test_erdos_T_unbounded(erdos):
    x = np.array([1.0, 5.0, 20.0, 100.0])
    T = eval_T(erdos, x)
    assert np.all(np.diff(T) > 0) and T[-1] > 50


def test_multipliers(hermite):
    x = np.linspace(-3, 3, 7)
    w = weight(hermite, x)
    np.testing.assert_allclose(multiplier(hermite, "w_over_T4")(x), w * 2 ** -0.25)
    np.testing.assert_allclose(multiplier(hermite, "T34_w")(x), w * 2 ** 0.75)
    with pytest.raises(ConfigError):
        multiplier(hermite, "bogus")


@pytest.mark.parametrize("kwargs", [
    dict(family="nope", alpha=1.0),
    dict(family="freud", alpha=0.0),
    dict(family="freud", alpha=2.0, u=1.0),
    dict(family="erdos", alpha=1.0, u=1.0, ell=0),
    dict(family="erdos", alpha=0.5, u=0.0, ell=1),
    dict(family="freud_general", alpha=0.5, u=0.2),
    dict(family="freud", alpha=2.0, scale=-1.0),
])
def test_invalid_specs(kwargs):
    with pytest.raises(ConfigError):
        WeightSpec(**kwargs)


def test_from_dict_and_files(tmp_path):
    s = WeightSpec.from_dict({"preset": "erdos", "lambda_class": 1.2})
    assert s.alpha == 1.0 and s.ell == 1 and s.lambda_class == 1.2
    with pytest.raises(ConfigError):
        WeightSpec.from_dict({"family": "freud", "alpha": 2, "colour": "red"})
    with pytest.raises(ConfigError):
        WeightSpec.from_dict({"family": "freud"})
    j = tmp_path / "w.json"
    j.write_text(json.dumps(PRESETS["erdos2"].to_dict()))
    assert load_spec(j) == PRESETS["erdos2"]
    t = tmp_path / "w.toml"
    t.write_text('[weight]\nfamily = "freud"\nalpha = 4.0\n')
    assert load_spec(t) == WeightSpec("freud", 4.0)
    assert preset("hermite").digest() == WeightSpec.from_dict(preset("hermite").to_dict()).digest()


@pytest.mark.parametrize("name", list(PRESETS))
def test_presets_satisfy_class_conditions(name):
    rep = check_class_conditions(preset(name))
    assert rep.passed, rep.to_json()


@pytest.mark.parametrize("alpha", [1.5, 2.0, 4.0])
def test_condition_e_constant_freud(alpha):
    # Q'' Q / Q'^2 = (alpha - 1) / alpha for |x|^alpha
    rep = check_class_conditions(WeightSpec("freud", alpha))
    assert rep["e_upper"]["constant"] == pytest.approx((alpha - 1) / alpha, rel=1e-12)


def test_condition_checker_flags_small_alpha():
    rep = check_class_conditions(WeightSpec("freud", 0.5))
    assert not rep.passed
    assert not rep["b_convex"]["pass"] and not rep["d_lambda"]["pass"]
    assert rep["d_lambda"]["constant"] == pytest.approx(0.5)


@pytest.mark.parametrize("name", ["hermite", "erdos"])
def test_T_growth_and_shift(name):
    s = preset(name)
    rep = check_T_growth(s, mrs_table(s), [2 ** k for k in range(1, 9)])
    assert rep.passed, rep.to_json()
    assert check_T_shift_stability(s).passed
    with pytest.raises(DomainError):
        check_T_shift_stability(s, c_shift=1.5)
