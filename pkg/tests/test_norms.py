import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from vpx import (NormRequest, QuadratureFailure, TailNotConverged, UnboundedDetected,
                 best_approx_error, fourier_coeffs, parse_target, weighted_norm)
from vpx.operators import ExpansionCoeffs, eval_expansion
from vpx.weights import weight

one = lambda x: np.ones_like(x)  # noqa: E731


@pytest.mark.parametrize("p,want", [
    (1, math.sqrt(2 * math.pi)),
    (2, math.pi ** 0.25),
    (3, (2 * math.pi / 3) ** (1 / 6)),
])
def test_gaussian_norms(hermite, p, want):
    assert weighted_norm(one, NormRequest(p=p), hermite).value == pytest.approx(want, rel=1e-12)


def test_sup_norm(hermite):
    r = weighted_norm(lambda x: x, NormRequest(p="inf"), hermite)
    assert r.value == pytest.approx(math.exp(-0.5), rel=1e-12)
    assert abs(r.budget["x_at"]) == pytest.approx(1.0, abs=1e-6)


def test_against_scipy_quad(erdos):
    f = np.sin
    ref = 2 * quad(lambda x: abs(math.sin(x)) ** 2 * float(weight(erdos, x)) ** 2, 0, 8,
                   limit=400, epsabs=0, epsrel=1e-13)[0]
    got = weighted_norm(f, NormRequest(p=2, n=4), erdos)
    assert got.value == pytest.approx(math.sqrt(ref), rel=1e-11)
    assert got.budget["tail_bound"] < 1e-10 and got.budget["refinement_delta"] < 1e-10


def test_multiplier_modes(erdos):
    T4 = weighted_norm(one, NormRequest(p=1, weight_mode="T4_w"), erdos).value
    # Q = x (e^x - 1) gives T = 1 + x e^x / (e^x - 1)
    T = lambda x: 1 + x * math.exp(x) / math.expm1(x)  # noqa: E731
    ref = 2 * quad(lambda x: float(weight(erdos, x)) * T(x) ** 0.25, 0, 8, limit=400,
                   epsrel=1e-13)[0]
    assert T4 == pytest.approx(ref, rel=1e-10)


@given(c=st.floats(-1e3, 1e3).filter(lambda c: abs(c) > 1e-3), p=st.sampled_from([1, 2, 3.5]))
def test_homogeneous(hermite, c, p):
    g = lambda x: np.cos(x) + 0.3 * x  # noqa: E731
    a = weighted_norm(g, NormRequest(p=p), hermite).value
    b = weighted_norm(lambda x: c * g(x), NormRequest(p=p), hermite).value
    assert b == pytest.approx(abs(c) * a, rel=1e-10)


def test_triangle_and_monotone_in_p(hermite):
    g1, g2 = np.sin, (lambda x: x ** 2 - 1)
    for p in (1, 2, 3, math.inf):
        req = NormRequest(p=p)
        s = weighted_norm(lambda x: g1(x) + g2(x), req, hermite).value
        assert s <= (weighted_norm(g1, req, hermite).value
                     + weighted_norm(g2, req, hermite).value) * (1 + 1e-12)


def test_unbounded_detected(hermite):
    with pytest.raises(UnboundedDetected):
        weighted_norm(lambda x: np.exp(x ** 2), NormRequest(p=2), hermite)


def test_undeclared_jump_fails_refinement(hermite):
    step = lambda x: 1.0 + (x > 0.3)  # noqa: E731
    with pytest.raises(QuadratureFailure):
        weighted_norm(step, NormRequest(p=2, rtol=1e-10), hermite)
    ok = weighted_norm(step, NormRequest(p=2, rtol=1e-10, breakpoints=(0.3,)), hermite)
    ref = quad(lambda x: float(step(x)) ** 2 * math.exp(-x * x), -10, 10, points=[0.3],
               epsrel=1e-13, limit=200)[0]
    assert ok.value == pytest.approx(math.sqrt(ref), rel=1e-11)


def test_request_validation():
    assert NormRequest(p="inf").p == math.inf
    with pytest.raises(ValueError):
        NormRequest(p=0.5)
    with pytest.raises(ValueError):
        NormRequest(L=-1.0)


def test_best_l2_error_of_basis_polynomial(hermite_table):
    coeffs = ExpansionCoeffs(hermite_table, np.eye(40)[5])
    # degree at most n: p_5 is reached at n = 5
    assert best_approx_error(coeffs, 4).value == pytest.approx(1.0)
    assert best_approx_error(coeffs, 5).value == 0.0
    assert best_approx_error(coeffs, 4).exact


def test_best_l2_error_matches_projection_residual(erdos_table):
    f = parse_target("abs")
    coeffs = fourier_coeffs(erdos_table, f, 128)
    n = 10
    E = best_approx_error(coeffs, n, f=f)
    resid = weighted_norm(lambda x: f(x) - eval_expansion(erdos_table, coeffs.c[:n + 1], x),
                          NormRequest(p=2, n=n, breakpoints=(0.0,)), erdos_table.spec).value
    assert E.value == pytest.approx(resid, rel=1e-6)


def test_best_error_upper_bound(hermite_table):
    f = parse_target("runge")
    coeffs = fourier_coeffs(hermite_table, f, 64)
    einf = best_approx_error(coeffs, 16, p="inf", f=f)
    assert not einf.exact and "upper-bound" in einf.flags
    # never worse than the partial sum of degree n
    s = weighted_norm(lambda x: f(x) - eval_expansion(hermite_table, coeffs.c[:17], x),
                      NormRequest(p="inf", n=16), hermite_table.spec).value
    assert 0 < einf.value <= s * (1 + 1e-12)
    with pytest.raises(ValueError):
        best_approx_error(coeffs, 16, p=1)


def test_best_error_guards(hermite_table):
    coeffs = ExpansionCoeffs(hermite_table, np.ones(10))
    with pytest.raises(TailNotConverged):
        best_approx_error(coeffs, 9)
    r = best_approx_error(coeffs, 6)
    assert "short-tail" in r.flags and "tail-unconverged" in r.flags
