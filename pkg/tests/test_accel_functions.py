"""Backend equivalence and the target-function parser."""
import numpy as np
import pytest

from vpx import ConfigError, parse_target, preset
from vpx import _accel
from vpx.orthopoly import build_recurrence, measure_rule
from vpx.quadrature import panel_rule

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not importable")


@pytest.fixture
def both():
    def run(fn):
        prev = _accel.get_backend()
        try:
            _accel.set_backend("numpy")
            a = fn()
            _accel.set_backend("numba")
            b = fn()
        finally:
            _accel.set_backend(prev)
        return a, b
    return run


@needs_numba
def test_recurrence_backends_agree(both, hermite_table):
    x = np.linspace(-12, 12, 301)
    t = hermite_table
    a, b = both(lambda: _accel.recurrence_values(x, t.alpha, t.beta, t.p0, 100))
    np.testing.assert_array_equal(a, b)
    (pa, da), (pb, db) = both(
        lambda: _accel.recurrence_values_and_derivs(x, t.alpha, t.beta, t.p0, 100))
    np.testing.assert_array_equal(pa, pb)
    np.testing.assert_allclose(da, db, rtol=1e-14, atol=1e-300)


@needs_numba
def test_stieltjes_backends_agree(both):
    spec = preset("erdos")
    x, W = measure_rule(spec, panel_rule(4.0, 0.1, 20))
    (_, ba, ma), (_, bb, mb) = both(lambda: _accel.stieltjes(x, W, 40))
    np.testing.assert_allclose(ba, bb, rtol=1e-13)
    assert ma == pytest.approx(mb, rel=1e-14)


@needs_numba
def test_abs_kernel_backends_agree(both, rng):
    A = rng.standard_normal((37, 11))
    B = rng.standard_normal((523, 11))
    r = rng.random(523)
    a, b = both(lambda: _accel.abs_kernel_integrals(A, B, r))
    np.testing.assert_allclose(a, b, rtol=1e-13)
    np.testing.assert_allclose(a, np.abs(A @ B.T) @ r, rtol=1e-13)


@needs_numba
def test_recurrence_build_backend_independent(both):
    a, b = both(lambda: build_recurrence(preset("freud4"), n_max=24).beta)
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        _accel.set_backend("fortran")


@pytest.mark.parametrize("text,x,want", [
    ("sin", 0.5, np.sin(0.5)),
    ("builtin:abs", -2.0, 2.0),
    ("poly(1, 0, 2)", 3.0, 19.0),
    ("gauss-bump(1, 0.5)", 1.5, np.exp(-1.0)),
    ("runge", 0.2, 0.5),
    ("characteristic(0, 1)", 0.5, 1.0),
])
def test_parse_target(text, x, want):
    assert float(parse_target(text)(x)) == pytest.approx(want, rel=1e-15)


def test_parse_target_metadata(erdos):
    assert parse_target("abs").breakpoints == (0.0,)
    assert parse_target("sign").derivative is None
    assert len(parse_target("sign_sin3").breakpoints_within(4.0)) == 7
    f = parse_target("invw_clamped(2)", erdos)
    assert f(np.array([1.0]))[0] * np.exp(-(np.e - 1)) == pytest.approx(1.0)
    assert f(np.array([2.5]))[0] == 0.0


@pytest.mark.parametrize("text", ["nope", "sin(", "poly(a)", "invw_clamped(1)",
                                  "characteristic(1, 0)", "runge(1, 2, 3)"])
def test_parse_target_errors(text):
    with pytest.raises(ConfigError):
        parse_target(text)
