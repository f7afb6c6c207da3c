"""Sweeps over ``n`` that measure both sides of the weighted inequalities.

Every experiment returns an :class:`ExperimentReport` holding long-format
records ``(case, n, p, lhs, rhs, ratio)``.  Gated series pass when their
empirical constant is finite and its log-log slope against ``n`` over the
upper half of the sweep stays below ``slope_tol``.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import _accel
from .errors import ConfigError
from .functions import inverse_weight_clamped, parse_target
from .mrs import doubling_constants, mrs_table, tail_cutoff
from .norms import NormRequest, best_approx_error, weighted_norm
from .operators import (eval_expansion, fourier_coeffs, lebesgue_sup, operator_norm,
                        vp_derivative, vp_eval, vp_mean)
from .orthopoly import eval_polys, eval_polys_and_derivs, recurrence_table
from .quadrature import panel_rule
from .weights import (T_safe, WeightSpec, check_class_conditions, check_T_growth,
                      check_T_shift_stability, load_spec, loglog_slope, preset, weight)

log = logging.getLogger(__name__)

INF = math.inf

EXPERIMENTS = (
    "weight_conditions",
    "uniform_boundedness",
    "growth_bound",
    "convergence",
    "favard",
    "bernstein",
    "kernel_bound",
    "phi_weighted_bound",
    "infinite_finite_range",
)

DEFAULT_THRESHOLDS = {"slope_tol": 0.05, "floor_rel": 1e-12, "sup_tol": 1e-9, "l1_factor": 2.0}


def _p_label(p):
    return "inf" if p == INF else f"{p:g}"


def _parse_p(p):
    if isinstance(p, str) and p.strip().lower() in ("inf", "infinity"):
        return INF
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise ConfigError(f"bad p value {p!r}") from None
    if not p >= 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    return p


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class Record:
    case: str
    n: int
    p: float
    lhs: float
    rhs: float
    ratio: float
    gated: bool = True


@dataclass
class ExperimentReport:
    experiment: str
    weight: str
    spec_digest: str
    n_list: list
    p_list: list
    records: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    gated: bool = True
    passed: bool = False
    runtime_s: float = 0.0
    error: str | None = None
    variant: str = ""

    def add(self, case, n, p, lhs, rhs, ratio=None, gated=True):
        if ratio is None:
            ratio = lhs / rhs if rhs != 0 else (0.0 if lhs == 0 else INF)
        self.records.append(Record(case, int(n), p, float(lhs), float(rhs), float(ratio),
                                   bool(gated)))

    def finalize(self):
        """Compute per-series constants and slopes, then the pass flag."""
        tol = self.thresholds.get("slope_tol", DEFAULT_THRESHOLDS["slope_tol"])
        groups = OrderedDict()
        for r in self.records:
            groups.setdefault((r.case, r.p), []).append(r)
        self.series = OrderedDict()
        ok = self.error is None
        any_gate = bool(self.checks)
        for (case, p), rows in groups.items():
            ratios = np.array([r.ratio for r in rows])
            gated_rows = sorted((r for r in rows if r.gated), key=lambda r: r.n)
            entry = {"case": case, "p": _p_label(p), "C_emp": float(np.max(ratios)),
                     "gated": bool(gated_rows), "slope_tol": tol}
            if gated_rows:
                any_gate = True
                n = np.array([r.n for r in gated_rows], float)
                v = np.array([r.ratio for r in gated_rows])
                top = slice(len(n) // 2, None)
                vt = np.maximum(v[top], np.finfo(float).tiny)
                finite = bool(np.all(np.isfinite(v)))
                slope = loglog_slope(n[top], vt) if finite else INF
                entry.update(slope=float(slope), n_top=n[top].astype(int).tolist(),
                             passed=bool(finite and slope <= tol))
                ok &= entry["passed"]
            self.series[f"{case}|{_p_label(p)}"] = entry
        for name, chk in self.checks.items():
            ok &= bool(chk["passed"])
        self.gated = any_gate or self.error is not None
        self.passed = bool(ok)
        return self

    def summary(self):
        return {
            "experiment": self.experiment,
            "variant": self.variant,
            "weight": self.weight,
            "spec_digest": self.spec_digest,
            "n_list": list(self.n_list),
            "p_list": [_p_label(p) for p in self.p_list],
            "gated": self.gated,
            "passed": self.passed,
            "series": list(self.series.values()),
            "checks": self.checks,
            "thresholds": self.thresholds,
            "provenance": self.provenance,
            "notes": self.notes,
            "runtime_s": round(self.runtime_s, 3),
            "error": self.error,
        }

    def rows(self):
        for r in self.records:
            yield [self.experiment, self.weight, r.case, r.n, _p_label(r.p),
                   repr(r.lhs), repr(r.rhs), repr(r.ratio), int(r.gated)]


CSV_HEADER = ["experiment", "weight", "case", "n", "p", "lhs", "rhs", "ratio", "gated"]


# ---------------------------------------------------------------------------
# shared state per weight
# ---------------------------------------------------------------------------

class Context:
    """Immutable tables for one weight plus run options and caches."""

    def __init__(self, spec, n_max=128, workers=1, thresholds=None, grid=None, seed=0):
        self.spec = spec
        self.mrs = mrs_table(spec)
        self.table = recurrence_table(spec, n_max)
        self.n_max = n_max
        self.workers = max(1, int(workers or 1))
        self.thresholds = dict(DEFAULT_THRESHOLDS, **(thresholds or {}))
        self.grid = dict({"density": 1, "norm_grid_points": 4096, "norm_window_points": 256},
                         **(grid or {}))
        self.seed = int(seed)
        self._coeffs = {}
        self._norms = {}

    def map(self, fn, items):
        items = list(items)
        if self.workers == 1 or len(items) < 2:
            return [fn(it) for it in items]
        with ThreadPoolExecutor(self.workers) as pool:
            return list(pool.map(fn, items))

    def check_n(self, n_list):
        if max(n_list) * 2 > self.n_max + 1:
            raise ConfigError(f"n={max(n_list)} needs n_max >= {2 * max(n_list) - 1}")

    def request(self, p, mode, n, f=None, degree=0, rtol=1e-6, atol=0.0):
        bps = f.breakpoints_within(1e3) if f is not None and hasattr(f, "breakpoints_within") \
            else ()
        return NormRequest(p=p, weight_mode=mode, n=n, breakpoints=bps, degree=degree,
                           grid_points=self.grid["norm_grid_points"],
                           window_points=self.grid["norm_window_points"], rtol=rtol,
                           atol=atol)

    def norm(self, g, p, mode, n, f=None, degree=0, atol=0.0):
        return weighted_norm(g, self.request(p, mode, n, f, degree, atol=atol),
                             self.spec).value

    def f_norm(self, f, key, p, mode, n):
        k = (key, p, mode, n)
        if k not in self._norms:
            self._norms[k] = self.norm(f, p, mode, n, f, degree=1)
        return self._norms[k]

    def coeffs(self, f, key, K):
        k = (key, K)
        if k not in self._coeffs:
            self._coeffs[k] = fourier_coeffs(self.table, f, K)
        return self._coeffs[k]

    def provenance(self):
        d = self.table.discretization
        return {
            "recurrence": {"n_max": self.n_max, "L": d.get("L"), "M": d.get("M"),
                           "order": d.get("order"), "panel_width": d.get("panel_width")},
            "mrs": {"quad_order": self.mrs.quad_order, "method": self.mrs.method},
            "norm_grid": dict(self.grid),
            "backend": _accel.get_backend(),
        }


def dictionary(ctx, n):
    """``(key, f)`` pairs of the ratio-test dictionary at degree ``n``."""
    an = ctx.mrs.a(n)
    width = 0.25 * an
    items = [(name, parse_target(name)) for name in ("sin", "cos", "abs", "sign_sin3", "runge")]
    items += [("gauss-bump@0", parse_target(f"gauss-bump(0, {width!r})")),
              ("gauss-bump@a_n/2", parse_target(f"gauss-bump({0.5 * an!r}, {width!r})")),
              ("gauss-bump@a_n", parse_target(f"gauss-bump({an!r}, {width!r})")),
              ("invw_clamped@a_n", inverse_weight_clamped(ctx.spec, an))]
    return items


def _dict_coeffs(ctx, key, f, n, n_top):
    # n-independent targets share one expansion of the largest size
    K = 2 * n if "@" in key else 2 * n_top
    return ctx.coeffs(f, (key, n) if "@" in key else key, K)


def _new_report(name, ctx, n_list, p_list):
    rep = ExperimentReport(name, ctx.spec.label(), ctx.spec.digest(), list(n_list),
                           list(p_list), thresholds=dict(ctx.thresholds))
    rep.provenance = ctx.provenance()
    return rep


def _ctx(spec, ctx, n_list):
    ctx = ctx or Context(spec, n_max=max(128, 2 * max(n_list)))
    ctx.check_n(n_list)
    return ctx


def _riesz_thorin(norm1, norm_inf, p):
    return norm1 ** (1.0 / p) * norm_inf ** (1.0 - 1.0 / p)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _exact_norms(ctx, rep, mode, case, n_list, p_list, scale=lambda n: 1.0):
    """Exact operator norms at p in {1, 2, inf}; interpolated bounds elsewhere."""
    need = {1.0, INF} if any(p not in (1.0, 2.0, INF) for p in p_list) else set()
    ps = sorted({p for p in p_list if p in (1.0, 2.0, INF)} | need)
    dens = ctx.grid["density"]
    cells = [(n, p) for n in n_list for p in ps]
    vals = ctx.map(lambda c: operator_norm(ctx.table, ctx.mrs, c[0], mode, c[1], dens), cells)
    got = dict(zip(cells, vals))
    for n in n_list:
        s = scale(n)
        for p in p_list:
            if p in (1.0, 2.0, INF):
                v = got[(n, p)]
                rep.add(f"{case}:exact", n, p, v, s, v / s)
            else:
                v = _riesz_thorin(got[(n, 1.0)], got[(n, INF)], p)
                rep.add(f"{case}:interpolated", n, p, v, s, v / s)
    return got


def _dictionary_ratios(ctx, rep, n_list, p_list, num_mode, den_mode, case,
                       scale=lambda n: 1.0, gated=True):
    n_top = max(n_list)

    def cell(c):
        n, p = c
        best = None
        for key, f in dictionary(ctx, n):
            co = _dict_coeffs(ctx, key, f, n, n_top)
            vp = vp_mean(co, n)
            num = ctx.norm(lambda x: vp_eval(vp, x), p, num_mode, n, degree=2 * n - 1)
            den = ctx.f_norm(f, key if "@" not in key else (key, n), p, den_mode, n_top)
            r = num / den / scale(n)
            if best is None or r > best[0]:
                best = (r, num, den, key)
        return best

    # coefficients and denominators first so worker threads only read caches
    for n in n_list:
        for key, f in dictionary(ctx, n):
            _dict_coeffs(ctx, key, f, n, n_top)
            for p in p_list:
                ctx.f_norm(f, key if "@" not in key else (key, n), p, den_mode, n_top)
    cells = [(n, p) for n in n_list for p in p_list]
    for (n, p), (r, num, den, key) in zip(cells, ctx.map(cell, cells)):
        # ratios only bound the operator norm from below; at p = inf the exact
        # Lebesgue functional is the gate
        rep.add(f"{case}:dictionary", n, p, num, den * scale(n), r, gated=gated and p != INF)
        rep.notes.append(f"{case}:dictionary n={n} p={_p_label(p)} maximiser {key}")


def exp_weight_conditions(spec, n_list, p_list=(), ctx=None):
    """Structural conditions on ``Q`` and the growth of ``T`` at the MRS numbers."""
    t0 = time.perf_counter()
    ctx = _ctx(spec, ctx, n_list)
    rep = _new_report("weight_conditions", ctx, n_list, [])
    n_ext = sorted(set(n_list) | {2 * n for n in n_list})
    cls = check_class_conditions(spec)
    growth = check_T_growth(spec, ctx.mrs, n_ext, slope_tol=ctx.thresholds["slope_tol"])
    shift = check_T_shift_stability(spec)
    for rpt in (cls, growth, shift):
        for key, c in rpt.conditions.items():
            entry = {k: v for k, v in c.items() if k != "pass"}
            rep.checks[key] = dict(entry, passed=c["pass"])
    cn = growth.conditions["T_growth"]["c_n"]
    for n, c in zip(n_ext, cn):
        rep.add("T_growth", n, INF, ctx.mrs.T_a(n), (n / ctx.mrs.a(n)) ** (2 / 3), c,
                gated=False)
    rep.provenance["doubling"] = doubling_constants(ctx.mrs, n_list)
    rep.runtime_s = time.perf_counter() - t0
    return rep.finalize()


def exp_uniform_boundedness(spec, n_list, p_list, ctx=None):
    """Damped-output and amplified-input boundedness of ``v_n``.

    Exact operator norms are used at ``p`` in ``{1, 2, inf}``; for other
    ``p`` the interpolation bound from ``p = 1`` and ``p = inf`` is gated
    and dictionary ratios are reported as lower-bound evidence.
    """
    t0 = time.perf_counter()
    ctx = _ctx(spec, ctx, n_list)
    rep = _new_report("uniform_boundedness", ctx, n_list, p_list)
    _exact_norms(ctx, rep, "w_over_T4", "damped_output", n_list, p_list)
    _exact_norms(ctx, rep, "T4_input", "amplified_input", n_list, p_list)
    _dictionary_ratios(ctx, rep, n_list, p_list, "w_over_T4", "w", "damped_output")
    _dictionary_ratios(ctx, rep, n_list, p_list, "w", "T4_w", "amplified_input")
    n = max(n_list)
    rep.provenance["lebesgue_sup"] = lebesgue_sup(ctx.table, ctx.mrs, n, "w_over_T4",
                                                  ctx.grid["density"]).provenance
    rep.runtime_s = time.perf_counter() - t0
    return rep.finalize()


def exp_growth_bound(spec, n_list, p_list, ctx=None):
    """``||v_n(f) w|| / ||f w||`` divided by ``T(a_n)**(1/4)``."""
    t0 = time.perf_counter()
    ctx = _ctx(spec, ctx, n_list)
    rep = _new_report("growth_bound", ctx, n_list, p_list)
    scale = lambda n: ctx.mrs.T_a(n) ** 0.25  # noqa: E731
    _exact_norms(ctx, rep, "w", "normalized", n_list, p_list, scale)
    _dictionary_ratios(ctx, rep, n_list, p_list, "w", "w", "normalized", scale)
    for n in n_list:
        s = scale(n)
        rep.add("T4_at_a_n", n, INF, s, 1.0, s, gated=False)
    rep.runtime_s = time.perf_counter() - t0
    return rep.finalize()


def _strictly_decreasing(values, floor):
    """``e[i+1] < e[i]`` unless ``e[i+1]`` is already at the noise floor."""
    bad = [i for i in range(len(values) - 1)
           if not (values[i + 1] < values[i] or values[i + 1] <= floor)]
    return not bad, bad


def _damped_errors(ctx, f, key, n_list, p, floor):
    co = ctx.coeffs(f, key, 2 * max(n_list))

    def cell(n):
        vp = vp_mean(co, n)
        return ctx.norm(lambda x: f(x) - vp_eval(vp, x), p, "w_over_T4", n, f,
                        degree=2 * n, atol=floor)

    return co, ctx.map(cell, n_list)


def exp_convergence(spec, f, n_list, p, ctx=None, name=None):
    """``||(f - v_n f) w / T^{1/4}||_p`` against the best approximation error.

    Passes when the error decreases strictly (down to the floor
    ``floor_rel * ||f w / T^{1/4}||_p``) and the ratio to the best-error
    bound stays bounded over the points above the floor.
    """
    t0 = time.perf_counter()
    ctx = _ctx(spec, ctx, n_list)
    if isinstance(f, str):
        name, f = name or f, parse_target(f, spec)
    name = name or f.name
    p = _parse_p(p)
    rep = _new_report("convergence", ctx, n_list, [p])
    rep.variant = f"{name} p={_p_label(p)}"
    scale = ctx.f_norm(f, name, p, "w_over_T4", max(n_list))
    floor = ctx.thresholds["floor_rel"] * scale
    co, errs = _damped_errors(ctx, f, name, n_list, p, floor)
    bests = ctx.map(lambda n: best_approx_error(co, n, p, f=f, spec=spec), n_list)
    for n, e, b in zip(n_list, errs, bests):
        rep.add(f"{name}:error", n, p, e, scale, gated=False)
        above = e > floor and b.value > floor
        rep.add(f"{name}:vs_best", n, p, e, b.value, gated=above)
        if b.flags:
            rep.notes.append(f"{name} n={n} p={_p_label(p)} best-error flags {list(b.flags)}")
    ok, bad = _strictly_decreasing(errs, floor)
    rep.checks[f"{name}:decreasing|{_p_label(p)}"] = {
        "passed": ok, "floor": floor, "violations": [n_list[i + 1] for i in bad]}
    rep.runtime_s = time.perf_counter() - t0
    return rep.finalize()


def exp_favard(spec, f_smooth, n_list, p, ctx=None, name=None):
    """``error_n * n / (a_n ||f' w||_p)`` with the damped error of ``v_n``."""
    t0 = time.perf_counter()
    ctx = _ctx(spec, ctx, n_list)
    f = parse_target(f_smooth, spec) if isinstance(f_smooth, str) else f_smooth
    name = name or (f_smooth if isinstance(f_smooth, str) else f.name)
    if f.derivative is None:
        raise ConfigError(f"{name} has no derivative")
    p = _parse_p(p)
    rep = _new_report("favard", ctx, n_list, [p])
    rep.variant = f"{name} p={_p_label(p)}"
    dnorm = ctx.norm(f.derivative, p, "w", max(n_list), f, degree=1)
    floor = ctx.thresholds["floor_rel"] * ctx.f_norm(f, name, p, "w_over_T4", max(n_list))
    _, errs = _damped_errors(ctx, f, name, n_list, p, floor)
    for n, e in zip(n_list, errs):
        rhs = ctx.mrs.a(n) / n * dnorm
        rep.add(name, n, p, e, rhs, gated=e > floor)
    rep.runtime_s = time.perf_counter() - t0
    return rep.finalize()


def exp_bernstein(spec, n_list, p, ctx=None, n_random=20):
    """Weighted Bernstein inequality for random ``P`` and ``p_n``; derivative
    bound for ``v_n(f)`` on the dictionary; exploratory ``T^{3/4}`` variant."""
    t0 = time.perf_counter()
    ctx = _ctx(spec, ctx, n_list)
    p = _parse_p(p)
    rep = _new_report("bernstein", ctx, n_list, [p])
    rep.variant = f"p={_p_label(p)}"
    table = ctx.table

    def poly_ratio(n, c):
        num = ctx.norm(lambda x: eval_polys_and_derivs(table, x, n + 1)[1] @ c, p,
                       "w_over_sqrtT", n, degree=n)
        den = ctx.norm(lambda x: eval_polys(table, x, n + 1) @ c, p, "w", n, degree=n)
        return num, den, num * ctx.mrs.a(n) / (n * den)

    def cell(n):
        rng = np.random.default_rng([ctx.seed, n])
        C = rng.standard_normal((n_random, n + 1))
        best = max((poly_ratio(n, c) for c in C), key=lambda t: t[2])
        e = np.zeros(n + 1)
        e[n] = 1.0
        return best, poly_ratio(n, e)

    for n, (best, basis) in zip(n_list, ctx.map(cell, n_list)):
        rep.add("random", n, p, best[0], best[1], best[2])
        rep.add("p_n", n, p, basis[0], basis[1], basis[2])

    n_top = max(n_list)
    for n in n_list:
        for key, f in dictionary(ctx, n):
            _dict_coeffs(ctx, key, f, n, n_top)

    def vp_cell(n):
        best, best_x = None, None
        for key, f in dictionary(ctx, n):
            vp = vp_mean(_dict_coeffs(ctx, key, f, n, n_top), n)
            e = vp_derivative(vp)
            g = lambda x: eval_expansion(table, e, x)  # noqa: E731
            r = (ctx.norm(g, p, "w_over_sqrtT", n, degree=2 * n),
                 ctx.norm(f, p, "T4_w", n, f, degree=1))
            x = (ctx.norm(g, p, "w", n, degree=2 * n), ctx.norm(f, p, "T34_w", n, f, degree=1))
            if best is None or r[0] / r[1] > best[0] / best[1]:
                best = r
            if best_x is None or x[0] / x[1] > best_x[0] / best_x[1]:
                best_x = x
        return best, best_x

    exact = p in (1.0, 2.0, INF)
    dens = ctx.grid["density"]

    def exact_cell(n):
        if not exact:
            return None, None
        return (operator_norm(table, ctx.mrs, n, "deriv_sqrtT", p, dens),
                operator_norm(table, ctx.mrs, n, "deriv_T34", p, dens))

    for n, (b, bx), (ex, ex34) in zip(n_list, ctx.map(vp_cell, n_list),
                                      ctx.map(exact_cell, n_list)):
        s = ctx.mrs.a(n) / n
        rep.add("vp_derivative:dictionary", n, p, b[0] * s, b[1], gated=p != INF)
        rep.add("vp_derivative_T34_exploratory:dictionary", n, p, bx[0] * s, bx[1],
                gated=False)
        if exact:
            rep.add("vp_derivative:exact", n, p, ex * s, 1.0)
            rep.add("vp_derivative_T34_exploratory:exact", n, p, ex34 * s, 1.0, gated=False)
    rep.notes.append("vp_derivative_T34_exploratory series are reported without a gate")
    rep.provenance["n_random"] = n_random
    rep.provenance["seed"] = ctx.seed
    rep.runtime_s = time.perf_counter() - t0
    return rep.finalize()


def _even_sup(func, X, n_grid, lo=0.0):
    xs = np.linspace(lo, X, n_grid)
    v = func(xs)
    i = int(np.argmax(v))
    h = xs[1] - xs[0]
    a, b = max(lo, xs[i] - h), min(X, xs[i] + h)
    res = minimize_scalar(lambda s: -float(func(np.array([s]))[0]), bounds=(a, b),
                          method="bounded", options={"xatol": 1e-12 * max(1.0, X)})
    if -res.fun > v[i]:
        return float(-res.fun), float(res.x)
    return float(v[i]), float(xs[i])


def exp_kernel_bound(spec, n_list, ctx=None):
    """``sup_x (a_n/n) w(x)^2 T(x)^{-1/2} K_n(x, x)``."""
    t0 = time.perf_counter()
    ctx = _ctx(spec, ctx, n_list)
    rep = _new_report("kernel_bound", ctx, n_list, [INF])

    def cell(n):
        an = ctx.mrs.a(n)

        def func(x):
            P = eval_polys(ctx.table, x, n)
            return an / n * weight(spec, x) ** 2 / np.sqrt(T_safe(spec, x)) * np.sum(P * P, -1)

        X = min(1.5 * ctx.mrs.a(2 * n), spec.x_max)
        return _even_sup(func, X, 40 * n + 400)

    edge = []
    for n, (v, x) in zip(n_list, ctx.map(cell, n_list)):
        rep.add("normalized", n, INF, v, 1.0, v)
        if x > ctx.mrs.a(n):
            edge.append(n)
    rep.checks["sup_inside_a_n"] = {"passed": True, "outside_for_n": edge,
                                    "note": "informational flag"}
    rep.runtime_s = time.perf_counter() - t0
    return rep.finalize()


def exp_phi_weighted_bound(spec, n_list, ctx=None):
    """Sup-norm operator norm with output multiplier ``w Phi_{2n}^{1/2}``."""
    t0 = time.perf_counter()
    ctx = _ctx(spec, ctx, n_list)
    rep = _new_report("phi_weighted_bound", ctx, n_list, [INF])
    dens = ctx.grid["density"]
    vals = ctx.map(lambda n: (operator_norm(ctx.table, ctx.mrs, n, "phi2n", INF, dens),
                              operator_norm(ctx.table, ctx.mrs, n, "w_over_T4", INF, dens)),
                   n_list)
    for n, (phi, damped) in zip(n_list, vals):
        rep.add("exact", n, INF, phi, 1.0, phi)
        rep.add("damped_over_phi", n, INF, damped, phi, gated=False)
    rep.runtime_s = time.perf_counter() - t0
    return rep.finalize()


def exp_infinite_finite_range(spec, n_list, ctx=None, n_random=100):
    """Random ``P`` of degree ``n``: the sup of ``|P w|`` outside ``(-a_n, a_n)``
    never beats the sup inside, and the L1 norm is at most twice the inner one."""
    t0 = time.perf_counter()
    ctx = _ctx(spec, ctx, n_list)
    rep = _new_report("infinite_finite_range", ctx, n_list, [1.0, INF])
    tol = ctx.thresholds["sup_tol"]
    factor = ctx.thresholds["l1_factor"]

    def sup_of(c, n, lo, hi):
        xs = np.linspace(lo, hi, 4001)
        v = np.abs(eval_polys(ctx.table, xs, n + 1) @ c) * weight(spec, xs)
        i = int(np.argmax(v))
        h = xs[1] - xs[0]
        a, b = max(lo, xs[i] - h), min(hi, xs[i] + h)
        res = minimize_scalar(
            lambda s: -abs(float(eval_polys(ctx.table, s, n + 1) @ c)) * float(weight(spec, s)),
            bounds=(a, b), method="bounded", options={"xatol": 1e-13 * max(1.0, hi)})
        return max(float(v[i]), float(-res.fun))

    def cell(n):
        an = ctx.mrs.a(n)
        L = min(max(1.5 * ctx.mrs.a(2 * n), tail_cutoff(ctx.mrs, n)), spec.x_max)
        rule = panel_rule(L, L / max(64, 4 * n), 20, breakpoints=(-an, an))
        inner_mask = np.abs(rule.nodes) < an
        Pw = eval_polys(ctx.table, rule.nodes, n + 1) * weight(spec, rule.nodes)[:, None]
        rng = np.random.default_rng([ctx.seed, n, 1])
        C = rng.standard_normal((n_random, n + 1))
        A = np.abs(Pw @ C.T) * rule.weights[:, None]
        l1_all, l1_in = A.sum(0), A[inner_mask].sum(0)
        worst_sup, worst_l1 = (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)
        for j, c in enumerate(C):
            inner = max(sup_of(c, n, -an, 0.0), sup_of(c, n, 0.0, an))
            outer = max(sup_of(c, n, an, L), sup_of(c, n, -L, -an))
            if outer / inner > worst_sup[2]:
                worst_sup = (outer, inner, outer / inner)
            r = l1_all[j] / l1_in[j]
            if r > worst_l1[2]:
                worst_l1 = (l1_all[j], l1_in[j], r)
        return worst_sup, worst_l1

    sup_ok, l1_ok = [], []
    for n, (s, l1) in zip(n_list, ctx.map(cell, n_list)):
        rep.add("sup_outside_over_inside", n, INF, *s, gated=False)
        rep.add("l1_whole_over_inside", n, 1.0, *l1, gated=False)
        if s[2] > 1.0 + tol:
            sup_ok.append(n)
        if l1[2] > factor:
            l1_ok.append(n)
    rep.checks["sup_outside_never_exceeds"] = {"passed": not sup_ok, "tolerance": tol,
                                               "violations": sup_ok}
    rep.checks["l1_factor"] = {"passed": not l1_ok, "factor": factor, "violations": l1_ok}
    rep.provenance.update(n_random=n_random, seed=ctx.seed, sup_grid=4001)
    rep.runtime_s = time.perf_counter() - t0
    return rep.finalize()


# ---------------------------------------------------------------------------
# configuration and the full run
# ---------------------------------------------------------------------------

DEFAULT_CONFIG = {
    "weights": ["hermite", "erdos"],
    "n_list": [2, 4, 8, 16, 32, 64],
    "p_list": [1, 2, 3, "inf"],
    "experiments": list(EXPERIMENTS),
    "n_max": 128,
    "seed": 20240229,
    "workers": 0,
    "thresholds": dict(DEFAULT_THRESHOLDS),
    "grid": {"density": 1, "norm_grid_points": 4096, "norm_window_points": 256},
    "convergence": {"n_list": [4, 8, 16, 32, 64], "p_list": [2, "inf"],
                    "functions": ["sin", "abs", "runge"]},
    "favard": {"n_list": [4, 8, 16, 32, 64], "p_list": [2, "inf"],
               "functions": ["sin", "gauss-bump(0, 1)"]},
    "bernstein": {"n_list": [4, 8, 16, 32, 64], "p_list": [2, "inf"], "n_random": 20},
    "infinite_finite_range": {"n_random": 100},
}


def load_config(path):
    """Read a TOML or JSON experiment config and merge it over the defaults."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if str(path).endswith(".json"):
        data = json.loads(raw)
    else:
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        data = tomllib.loads(raw.decode())
    data.setdefault("_base_dir", os.path.dirname(os.path.abspath(path)))
    return data


def _resolve_weight(item, base_dir):
    if isinstance(item, WeightSpec):
        return item
    if isinstance(item, dict):
        return WeightSpec.from_dict(item)
    if isinstance(item, str):
        try:
            return preset(item)
        except Exception:
            path = item if os.path.isabs(item) else os.path.join(base_dir or ".", item)
            if not os.path.exists(path):
                raise ConfigError(f"{item!r} is neither a preset nor a spec file") from None
            return load_spec(path)
    raise ConfigError(f"cannot read weight {item!r}")


def _int_list(v, what):
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{what} must be a non-empty list")
    out = []
    for n in v:
        if isinstance(n, bool) or not isinstance(n, (int, float)) or not float(n).is_integer() \
                or int(n) < 1:
            raise ConfigError(f"{what} entries must be positive integers, got {n!r}")
        out.append(int(n))
    return sorted(set(out))


def normalize_config(config):
    """Merge with defaults and validate; raises :class:`ConfigError`."""
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    config = dict(config or {})
    base = config.pop("_base_dir", None)
    if "spec" in config and "weights" not in config:
        config["weights"] = config.pop("spec")
    if "weight" in config and "weights" not in config:
        config["weights"] = [config.pop("weight")]
    for k, v in config.items():
        if isinstance(v, dict) and isinstance(cfg.get(k), dict):
            cfg[k].update(v)
        else:
            cfg[k] = v
    if isinstance(cfg["weights"], (str, dict)):
        cfg["weights"] = [cfg["weights"]]
    cfg["n_list"] = _int_list(cfg["n_list"], "n_list")
    cfg["p_list"] = [_parse_p(p) for p in cfg["p_list"]]
    if not cfg["p_list"]:
        raise ConfigError("p_list must be non-empty")
    unknown = [e for e in cfg["experiments"] if e not in EXPERIMENTS]
    if unknown:
        raise ConfigError(f"unknown experiments {unknown}; have {list(EXPERIMENTS)}")
    for sec in ("convergence", "favard", "bernstein"):
        cfg[sec]["n_list"] = _int_list(cfg[sec].get("n_list", cfg["n_list"]),
                                       f"{sec}.n_list")
        cfg[sec]["p_list"] = [_parse_p(p) for p in cfg[sec].get("p_list", [2, "inf"])]
    top = max([max(cfg["n_list"])] + [max(cfg[s]["n_list"])
                                      for s in ("convergence", "favard", "bernstein")])
    if 2 * top > int(cfg["n_max"]) + 1:
        raise ConfigError(f"n_max={cfg['n_max']} is too small for n={top}")
    cfg["_weights"] = [_resolve_weight(w, base) for w in cfg["weights"]]
    cfg["workers"] = int(cfg["workers"]) or (os.cpu_count() or 1)
    return cfg


def _run_one(name, ctx, cfg):
    spec, n_list, p_list = ctx.spec, cfg["n_list"], cfg["p_list"]
    if name == "weight_conditions":
        return [exp_weight_conditions(spec, n_list, ctx=ctx)]
    if name == "uniform_boundedness":
        return [exp_uniform_boundedness(spec, n_list, p_list, ctx=ctx)]
    if name == "growth_bound":
        return [exp_growth_bound(spec, n_list, p_list, ctx=ctx)]
    if name == "kernel_bound":
        return [exp_kernel_bound(spec, n_list, ctx=ctx)]
    if name == "phi_weighted_bound":
        return [exp_phi_weighted_bound(spec, n_list, ctx=ctx)]
    if name == "infinite_finite_range":
        return [exp_infinite_finite_range(spec, n_list, ctx=ctx,
                                          n_random=int(cfg[name]["n_random"]))]
    sec = cfg[name]
    if name == "bernstein":
        return [exp_bernstein(spec, sec["n_list"], p, ctx=ctx, n_random=int(sec["n_random"]))
                for p in sec["p_list"]]
    fn = exp_convergence if name == "convergence" else exp_favard
    return [fn(spec, f, sec["n_list"], p, ctx=ctx) for f in sec["functions"]
            for p in sec["p_list"]]


def _failed(name, ctx, cfg, exc):
    rep = _new_report(name, ctx, cfg["n_list"], cfg["p_list"])
    rep.error = f"{type(exc).__name__}: {exc}"
    return rep.finalize()


def run_all(config=None, out_dir=None, emit_plots_data=False):
    """Run the configured experiments; writes ``<exp>.csv`` and ``summary.json``
    into ``out_dir`` when given.  Returns the list of reports."""
    cfg = normalize_config(config)
    t0 = time.perf_counter()
    reports = []
    for spec in cfg["_weights"]:
        ctx = Context(spec, n_max=int(cfg["n_max"]), workers=cfg["workers"],
                      thresholds=cfg["thresholds"], grid=cfg["grid"], seed=cfg["seed"])
        for name in cfg["experiments"]:
            log.info("%s on %s", name, spec.label())
            try:
                reports.extend(_run_one(name, ctx, cfg))
            except Exception as exc:  # recorded, the run continues
                log.exception("%s failed on %s", name, spec.label())
                reports.append(_failed(name, ctx, cfg, exc))
    if out_dir is not None:
        write_outputs(reports, cfg, out_dir, emit_plots_data, time.perf_counter() - t0)
    return reports


def _jsonable_cfg(cfg):
    out = {k: v for k, v in cfg.items() if not k.startswith("_")}
    out["weights"] = [w.to_dict() for w in cfg["_weights"]]
    out["p_list"] = [_p_label(p) for p in cfg["p_list"]]
    for sec in ("convergence", "favard", "bernstein"):
        out[sec] = dict(cfg[sec], p_list=[_p_label(p) for p in cfg[sec]["p_list"]])
    return out


def write_outputs(reports, cfg, out_dir, emit_plots_data=False, runtime=None):
    os.makedirs(out_dir, exist_ok=True)
    by_exp = OrderedDict()
    for r in reports:
        by_exp.setdefault(r.experiment, []).append(r)
    for exp, reps in by_exp.items():
        with open(os.path.join(out_dir, f"{exp}.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in reps:
                w.writerows(r.rows())
    summary = {
        "passed": all(r.passed for r in reports if r.gated),
        "config": _jsonable_cfg(cfg),
        "reports": [r.summary() for r in reports],
        "runtime_s": None if runtime is None else round(runtime, 3),
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, default=str)
    if emit_plots_data:
        plots = {}
        for r in reports:
            for rec in r.records:
                key = f"{rec.case}|{_p_label(rec.p)}"
                s = plots.setdefault(r.experiment, {}).setdefault(r.weight, {}).setdefault(
                    key, {"n": [], "lhs": [], "rhs": [], "ratio": []})
                s["n"].append(rec.n)
                s["lhs"].append(rec.lhs)
                s["rhs"].append(rec.rhs)
                s["ratio"].append(rec.ratio)
        with open(os.path.join(out_dir, "plots_data.json"), "w") as fh:
            json.dump(plots, fh, indent=1, default=str)
    return summary


def exit_code(reports):
    return 0 if all(r.passed for r in reports if r.gated) else 1
