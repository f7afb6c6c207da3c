"""Fourier coefficients, partial sums and de la Vallée Poussin means.

``v_n(f)`` is held in coefficient space: averaging ``s_{n+1} .. s_{2n}``
multiplies ``c_k`` by the number of partial sums that contain index ``k``,
divided by ``n``.  That count is ``n`` for ``k <= n`` and ``2n - k`` above.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import _accel
from .errors import DegreeExceeded, QuadratureFailure
from .functions import TargetFunction
from .mrs import mrs_table, phi_fn, tail_cutoff
from .orthopoly import eval_polys, eval_polys_and_derivs, measure_rule
from .quadrature import panel_rule
from .weights import T_safe, multiplier, weight

__all__ = [
    "ExpansionCoeffs",
    "VpPolynomial",
    "coefficient_rule",
    "fourier_coeffs",
    "partial_sum",
    "partial_sum_by_kernel",
    "taper",
    "vp_mean",
    "vp_from_coeffs",
    "vp_literal",
    "vp_eval",
    "vp_derivative",
    "eval_expansion",
    "kernel_multipliers",
    "vp_lebesgue_function",
    "LebesgueSup",
    "lebesgue_sup",
    "operator_norm",
]


@dataclass
class ExpansionCoeffs:
    table: object
    c: np.ndarray
    name: str = ""
    provenance: dict = field(default_factory=dict)

    @property
    def K(self):
        return int(self.c.size)


@dataclass
class VpPolynomial:
    """``v_n(f) = sum_k d[k] p_k`` with ``len(d) == 2n``."""

    n: int
    d: np.ndarray
    table: object

    def __call__(self, x):
        return vp_eval(self, x)


def coefficient_rule(table, K, breakpoints=(), density=1, order=20):
    """Panel rule for projections onto ``p_0 .. p_{K-1}``.

    The radius is ``1.5 a_{2K}``, widened until ``|p w|`` of degree ``2K`` is
    negligible at the edge (``f w`` is assumed bounded).
    """
    mrs = mrs_table(table.spec)
    K = max(int(K), 1)
    L = max(1.5 * mrs.a(2 * K), tail_cutoff(mrs, 2 * K, power=1.0))
    L = min(L, table.spec.x_max)
    per_side = max(16, K) * density
    return panel_rule(L, L / per_side, order, breakpoints)


def _project(table, f, K, rule):
    x, W = measure_rule(table.spec, rule, power=1)
    w = weight(table.spec, x)
    fx = np.asarray(f(x), float)
    g = W * fx * w               # f(t) w(t)^2 dt, split to avoid overflow of f
    P = eval_polys(table, x, K)
    return g @ P


def fourier_coeffs(table, f, K, rule=None, check=True, rtol=1e-9):
    """``c_k(f) = int f p_k w**2`` for ``k < K``.

    With ``check`` the panel density is doubled and
    :class:`QuadratureFailure` is raised if any coefficient moves by more
    than ``rtol`` times the coefficient-vector norm.
    """
    if K > table.n_max + 1:
        raise DegreeExceeded(f"K={K} needs a table with n_max >= {K - 1}")
    bps = ()
    if isinstance(f, TargetFunction):
        bps = f.breakpoints_within(1e6)
    if rule is None:
        rule = coefficient_rule(table, K, bps)
        if isinstance(f, TargetFunction):
            rule = coefficient_rule(table, K, f.breakpoints_within(rule.L))
    c = _project(table, f, K, rule)
    prov = dict(rule.provenance())
    if check:
        c2 = _project(table, f, K, rule.refined())
        scale = max(np.linalg.norm(c2), np.finfo(float).tiny)
        delta = float(np.max(np.abs(c2 - c)) / scale)
        prov["refinement_delta"] = delta
        if delta > rtol:
            raise QuadratureFailure(
                f"coefficients of {getattr(f, 'name', 'f')} moved by {delta:.3g} "
                "relative under refinement; supply breakpoints or a finer rule")
        c = c2
    return ExpansionCoeffs(table, c, getattr(f, "name", ""), prov)


def eval_expansion(table, coeffs, x):
    coeffs = np.asarray(coeffs, float)
    P = eval_polys(table, x, coeffs.size)
    return P @ coeffs


def partial_sum(coeffs, m, x):
    """``s_m(f)(x) = sum_{k<m} c_k p_k(x)``."""
    if m > coeffs.K:
        raise DegreeExceeded(f"m={m} exceeds the {coeffs.K} available coefficients")
    return eval_expansion(coeffs.table, coeffs.c[:m], x)


def partial_sum_by_kernel(table, f, m, x, rule=None):
    """``s_m(f)(x)`` as ``int K_m(x, t) f(t) w(t)**2 dt``; a cross-check only."""
    if rule is None:
        rule = coefficient_rule(table, m, getattr(f, "breakpoints", ()), density=2)
    t, W = measure_rule(table.spec, rule, power=1)
    g = W * np.asarray(f(t), float) * weight(table.spec, t)
    Px = eval_polys(table, np.atleast_1d(x), m)
    Pt = eval_polys(table, t, m)
    out = Px @ (Pt.T @ g)
    return out if np.ndim(x) else float(out[0])


def taper(n, size=None):
    """Multipliers ``d_k / c_k`` of ``v_n``: 1 up to ``k = n``, then
    ``(2n - k) / n``, zero from ``k = 2n`` on."""
    size = 2 * n if size is None else size
    k = np.arange(size, dtype=float)
    return np.clip(np.where(k <= n, 1.0, (2 * n - k) / n), 0.0, 1.0)


def vp_from_coeffs(table, c, n):
    c = np.asarray(c, float)
    if c.size < 2 * n:
        c = np.concatenate([c, np.zeros(2 * n - c.size)])
    return VpPolynomial(int(n), c[:2 * n] * taper(n), table)


def vp_mean(coeffs, n):
    if 2 * n > coeffs.K:
        raise DegreeExceeded(f"v_{n} needs {2 * n} coefficients, have {coeffs.K}")
    return vp_from_coeffs(coeffs.table, coeffs.c, n)


def vp_literal(coeffs, n, x):
    """``(1/n) sum_{j=n+1}^{2n} s_j(f)(x)`` evaluated term by term."""
    if 2 * n > coeffs.K:
        raise DegreeExceeded(f"v_{n} needs {2 * n} coefficients, have {coeffs.K}")
    total = 0.0
    for j in range(n + 1, 2 * n + 1):
        total = total + partial_sum(coeffs, j, x)
    return total / n


def vp_eval(vp, x):
    return eval_expansion(vp.table, vp.d, x)


def vp_derivative(vp, check=True, rtol=1e-6):
    """Coefficients of ``v_n'`` in the ``p_k`` basis (length ``2n``).

    ``v_n'`` is evaluated through the differentiated recurrence on a Gauss
    panel grid and projected back.  With ``check`` the re-expanded
    derivative is compared with a central difference of ``v_n``.
    """
    table, n = vp.table, vp.n
    m = 2 * n
    rule = coefficient_rule(table, m)
    x, W = measure_rule(table.spec, rule, power=2)
    P, D = eval_polys_and_derivs(table, x, m)
    e = (W * (D @ vp.d)) @ P
    e[-1] = 0.0  # degree drops by one
    if check:
        mrs = mrs_table(table.spec)
        grid = np.linspace(-mrs.a(2 * n), mrs.a(2 * n), 401)
        h = 1e-4 * max(1.0, mrs.a(2 * n))
        fd = (-vp_eval(vp, grid + 2 * h) + 8 * vp_eval(vp, grid + h)
              - 8 * vp_eval(vp, grid - h) + vp_eval(vp, grid - 2 * h)) / (12 * h)
        # compare weighted: unweighted values near a_2n are dominated by
        # round-off in the highest coefficients
        wg = weight(table.spec, grid)
        exact = eval_expansion(table, e, grid)
        scale = np.max(np.abs(exact * wg))
        if scale > 0 and np.max(np.abs((exact - fd) * wg)) > rtol * scale:
            raise QuadratureFailure("derivative projection disagrees with finite differences")
    return e


# ---------------------------------------------------------------------------
# Lebesgue functionals and exact operator norms
# ---------------------------------------------------------------------------

def kernel_multipliers(spec, mode, n=None):
    """``(left, right)`` so that ``left(x) * int |V_n(x,t)| right(t) dt`` is the
    pointwise operator functional for ``mode``.

    ``w_over_T4``: ``f -> v_n(f) w / T^{1/4}`` against ``||f w||``.
    ``T4_input``:  ``f -> v_n(f) w`` against ``||T^{1/4} f w||``.
    ``w``:         ``f -> v_n(f) w`` against ``||f w||``.
    ``phi2n``:     ``f -> v_n(f) w Phi_{2n}^{1/2}`` against ``||f w||``.
    ``deriv_sqrtT``: ``f -> v_n(f)' w / T^{1/2}`` against ``||T^{1/4} f w||``.
    ``deriv_T34``:   ``f -> v_n(f)' w`` against ``||T^{3/4} f w||``.

    The two derivative modes differentiate the kernel in ``x``.
    """
    w = multiplier(spec, "w")
    if mode == "w_over_T4":
        return multiplier(spec, "w_over_T4"), w
    if mode == "T4_input":
        return w, multiplier(spec, "w_over_T4")
    if mode == "w":
        return w, w
    if mode == "phi2n":
        if n is None:
            raise ValueError("phi2n needs n")
        mrs = mrs_table(spec)
        return (lambda x: w(x) * np.sqrt(phi_fn(mrs, 2 * n, x))), w
    if mode == "deriv_sqrtT":
        return multiplier(spec, "w_over_sqrtT"), multiplier(spec, "w_over_T4")
    if mode == "deriv_T34":
        return w, (lambda x: w(x) * T_safe(spec, x) ** -0.75)
    raise ValueError(f"unknown mode {mode!r}")


DERIV_MODES = ("deriv_sqrtT", "deriv_T34")


def _t_rule(table, n, density=1, order=10):
    mrs = mrs_table(table.spec)
    L = max(1.5 * mrs.a(2 * n), tail_cutoff(mrs, 2 * n - 1, power=1.0))
    L = min(L, table.spec.x_max)
    # roughly two sign changes of V_n(x, .) per panel inside [-a_2n, a_2n]
    width = mrs.a(2 * n) / max(2 * n, 8) / density
    return panel_rule(L, width, order)


class _AbsKernel:
    """``I(x) = int |V_n(x, t)| r(t) dt`` on a fixed t-rule."""

    def __init__(self, table, n, right, density=1, outer_deriv=False, inner_deriv=False):
        if 2 * n > table.n_max + 1:
            raise DegreeExceeded(f"v_{n} needs n_max >= {2 * n - 1}")
        self.table, self.n = table, n
        self.outer_deriv = outer_deriv
        self.rule = _t_rule(table, n, density)
        t, W = measure_rule(table.spec, self.rule, power=0)
        r = W * right(t)
        keep = r > 0
        self.t, self.r = t[keep], r[keep]
        self.Pt = _basis(table, self.t, 2 * n, inner_deriv)
        self.tau = taper(n)

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, float))
        Px = _basis(self.table, x, 2 * self.n, self.outer_deriv) * self.tau
        return _accel.abs_kernel_integrals(Px, self.Pt, self.r)


def _basis(table, x, m, deriv):
    return eval_polys_and_derivs(table, x, m)[1] if deriv else eval_polys(table, x, m)


def vp_lebesgue_function(table, mrs, n, x, mode="w_over_T4", density=1):
    """Weighted Lebesgue function of ``v_n`` at ``x``.

    For the default mode this is ``w(x) T(x)^{-1/4} int |V_n(x,t)| w(t) dt``
    with ``V_n = (1/n) sum_{j=n+1}^{2n} K_j``; its supremum over ``x`` is the
    exact sup-norm operator norm.
    """
    left, right = kernel_multipliers(table.spec, mode, n)
    I = _AbsKernel(table, n, right, density)
    xa = np.asarray(x, float)
    out = left(np.atleast_1d(xa)) * I(xa)
    return float(out[0]) if xa.ndim == 0 else out


@dataclass
class LebesgueSup:
    value: float
    x: float
    at_edge: bool
    provenance: dict


def _sup_symmetric(func, X, n_grid, refine=8):
    """Maximum of an even function on [0, X] by grid search + local Brent."""
    xs = np.linspace(0.0, X, n_grid)
    vals = func(xs)
    order = np.argsort(vals)[::-1]
    best_v, best_x = float(vals[order[0]]), float(xs[order[0]])
    h = xs[1] - xs[0]
    seen = set()
    for i in order[:refine]:
        if i in seen:
            continue
        seen.update({i - 1, i, i + 1})
        lo, hi = max(0.0, xs[i] - h), min(X, xs[i] + h)
        res = minimize_scalar(lambda s: -float(func(np.array([s]))[0]), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-10 * max(1.0, X)})
        if -res.fun > best_v:
            best_v, best_x = float(-res.fun), float(res.x)
    return best_v, best_x, bool(best_x >= X - 2 * h)


def lebesgue_sup(table, mrs, n, mode="w_over_T4", density=1, n_grid=None, x_factor=1.5):
    """Supremum over ``x`` of :func:`vp_lebesgue_function`."""
    left, right = kernel_multipliers(table.spec, mode, n)
    I = _AbsKernel(table, n, right, density, outer_deriv=mode in DERIV_MODES)
    X = min(x_factor * mrs.a(2 * n), table.spec.x_max)
    n_grid = n_grid or int(24 * n + 200)
    v, x, edge = _sup_symmetric(lambda s: left(s) * I(s), X, n_grid)
    prov = {"t_rule": I.rule.provenance(), "x_range": X, "x_grid": n_grid}
    return LebesgueSup(v, x, edge, prov)


def operator_norm(table, mrs, n, mode="w_over_T4", p=math.inf, density=1):
    """Exact norm of ``F -> left * v_n(F * right / w**2)`` on ``L^p``, p in {1, 2, inf}.

    The operator has kernel ``left(x) V_n(x,t) right(t)``.  ``p = inf`` is
    the sup over ``x`` of the Lebesgue function; ``p = 1`` is the same with
    the roles of ``x`` and ``t`` exchanged; ``p = 2`` is the largest singular
    value of the discretised kernel, which has rank ``2n``.
    """
    left, right = kernel_multipliers(table.spec, mode, n)
    if p == math.inf:
        return lebesgue_sup(table, mrs, n, mode, density).value
    if p == 1:
        I = _AbsKernel(table, n, left, density, inner_deriv=mode in DERIV_MODES)
        X = min(1.5 * mrs.a(2 * n), table.spec.x_max)
        return _sup_symmetric(lambda s: right(s) * I(s), X, int(24 * n + 200))[0]
    if p == 2:
        rule = _t_rule(table, n, density, order=20)
        y, W = measure_rule(table.spec, rule, power=0)
        P = eval_polys(table, y, 2 * n)
        sw = np.sqrt(W)
        U = (sw * left(y))[:, None] * _basis(table, y, 2 * n, mode in DERIV_MODES)
        Z = (sw * right(y))[:, None] * P
        Ru = np.linalg.qr(U, mode="r")
        Rz = np.linalg.qr(Z, mode="r")
        core = (Ru * taper(n)) @ Rz.T
        return float(np.linalg.norm(core, 2))
    raise ValueError("exact operator norms are available for p in {1, 2, inf} only")
