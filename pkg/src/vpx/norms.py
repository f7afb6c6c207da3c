"""Weighted L^p norms on the real line and weighted approximation errors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from .errors import QuadratureFailure, TailNotConverged, UnboundedDetected
from .mrs import mrs_table, tail_cutoff
from .operators import eval_expansion, vp_mean, vp_eval
from .quadrature import panel_rule
from .weights import multiplier

__all__ = ["NormRequest", "NormResult", "weighted_norm", "best_approx_error", "ApproxError"]


@dataclass
class NormRequest:
    """What to integrate and how.

    ``weight_mode`` names the multiplier: ``w``, ``w_over_T4`` (w / T^{1/4}),
    ``T4_w`` (T^{1/4} w), ``w_over_sqrtT`` or ``T34_w``.  With ``L=None`` the
    domain is chosen from the MRS numbers of ``n``.  ``degree`` is a growth
    hint for the tail bound: ``g`` is assumed to grow no faster than a
    polynomial of that degree.  The refinement test fails when the value
    moves by more than ``rtol * value + atol``.
    """

    p: float = 2.0
    weight_mode: str = "w"
    n: int = 1
    L: float | None = None
    panels_per_side: int | None = None
    order: int = 20
    grid_points: int = 4096
    window_points: int = 256
    breakpoints: tuple = ()
    degree: int = 0
    rtol: float | None = 1e-6
    atol: float = 0.0

    def __post_init__(self):
        self.p = math.inf if str(self.p).lower() in ("inf", "infinity") else float(self.p)
        if not self.p >= 1:
            raise ValueError("p must be >= 1")
        if self.L is not None and not self.L > 0:
            raise ValueError("L must be positive")


@dataclass
class NormResult:
    value: float
    budget: dict = field(default_factory=dict)

    def __float__(self):
        return self.value

    def to_dict(self):
        return {"value": self.value, "error_budget": self.budget}


def _domain(spec, req):
    if req.L is not None:
        return min(req.L, spec.x_max)
    mrs = mrs_table(spec)
    power = 1.0 if req.p == math.inf else req.p
    deg = max(2 * req.n, req.degree)
    L = max(1.5 * mrs.a(2 * req.n), tail_cutoff(mrs, deg, power=power))
    return min(L, spec.x_max)


def _sign_changes(h, L, num, iters=60):
    """Zeros of ``h`` on [-L, L] bracketed on a uniform probe grid, refined
    by vectorised bisection.  ``|h|**p`` has a kink at each of them."""
    xs = np.linspace(-L, L, num)
    v = h(xs)
    idx = np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)
    exact = tuple(xs[v == 0])
    if idx.size == 0:
        return exact
    lo, hi = xs[idx], xs[idx + 1]
    slo = np.sign(v[idx])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        sm = np.sign(h(mid))
        left = sm == slo
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    return exact + tuple(0.5 * (lo + hi))


def _integrate(h, L, per_side, order, breakpoints, p):
    rule = panel_rule(L, L / per_side, order, breakpoints)
    vals = np.abs(h(rule.nodes)) ** p
    return float(np.dot(rule.weights, vals)), rule.M


def _tail_budget(h, g_abs_max, m, L, degree, p, spec):
    """Bound on the contribution of ``|x| > L`` assuming
    ``|g(x)| <= max_{|t|<=L}|g| (2|x|/L)**degree``."""
    hi = min(4 * L, spec.x_max)
    if hi <= L:
        return 0.0

    def bound(x):
        return g_abs_max * (2 * x / L) ** degree * float(m(np.array([x]))[0])

    if p == math.inf:
        xs = np.linspace(L, hi, 200)
        return float(max(bound(x) for x in xs))
    val, _ = quad(lambda x: bound(x) ** p, L, hi, limit=200)
    return float((2 * val) ** (1.0 / p))


def weighted_norm(g, req, spec):
    """``|| g * m ||_{L^p(R)}`` for the multiplier ``m`` named in ``req``."""
    m = multiplier(spec, req.weight_mode)
    L = _domain(spec, req)

    def h(x):
        return np.asarray(g(x), float) * m(x)

    per_side = req.panels_per_side or max(64, 4 * req.n)
    budget = {"L": L, "p": "inf" if req.p == math.inf else req.p,
              "weight_mode": req.weight_mode}

    probe = np.linspace(-L, L, 2049)
    hv = np.abs(h(probe))
    inner = np.abs(probe) <= 0.9 * L
    interior = float(hv[inner].max()) if inner.any() else 0.0
    edge = float(max(hv[0], hv[-1]))
    if edge > (1 + 1e-9) * interior and edge > 0:
        raise UnboundedDetected(f"|g m| at the edge ({edge:.3g}) exceeds the interior "
                                f"maximum ({interior:.3g}); is a weight factor missing?")
    gmax = float(np.max(np.abs(np.asarray(g(probe), float))))

    if req.p == math.inf:
        value, x_at = _sup(h, L, req, spec)
        value2, _ = _sup(h, L, req, spec, factor=2)
        budget.update(grid_points=req.grid_points, window_points=req.window_points, x_at=x_at)
    else:
        bps = tuple(req.breakpoints) + _sign_changes(h, L, 16 * per_side + 1)
        I1, M1 = _integrate(h, L, per_side, req.order, bps, req.p)
        I2, M2 = _integrate(h, L, 2 * per_side, req.order, bps, req.p)
        value, value2 = I2 ** (1 / req.p), I1 ** (1 / req.p)
        budget.update(M=M2, panels_per_side=2 * per_side, order=req.order)
    change = abs(value - value2)
    delta = change / value if value > 0 else change
    budget["refinement_delta"] = delta
    budget["tail_bound"] = _tail_budget(h, gmax, m, L, req.degree, req.p, spec)
    if req.rtol is not None and change > req.rtol * value + req.atol:
        raise QuadratureFailure(f"weighted norm not refinement stable (delta={delta:.3g})")
    return NormResult(float(value), budget)


def _sup(h, L, req, spec, factor=1):
    mrs = mrs_table(spec)
    pts = [np.linspace(-L, L, req.grid_points * factor)]
    for k in (req.n, 2 * req.n):
        a, d = mrs.a(k), mrs.delta(k)
        win = np.linspace(a * (1 - d), a * (1 + d), req.window_points * factor)
        pts += [win, -win]
    for b in req.breakpoints:
        eps = 1e-12 * max(1.0, abs(b))
        pts.append(np.array([b - eps, b, b + eps]))
    xs = np.unique(np.clip(np.concatenate(pts), -L, L))
    v = np.abs(h(xs))
    # candidate peaks: grid local maxima, largest first
    pad = np.concatenate([[-np.inf], v, [-np.inf]])
    peaks = np.flatnonzero((v >= pad[:-2]) & (v >= pad[2:]))
    order = peaks[np.argsort(v[peaks])[::-1][:6]]
    best_v, best_x = float(v[order[0]]), float(xs[order[0]])
    for i in order:
        lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
        if hi <= lo:
            continue
        res = minimize_scalar(lambda s: -abs(float(h(np.array([s]))[0])), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12 * max(1.0, L)})
        if -res.fun > best_v:
            best_v, best_x = float(-res.fun), float(res.x)
    return best_v, best_x


@dataclass
class ApproxError:
    value: float
    exact: bool
    flags: tuple = ()


def best_approx_error(coeffs, n, p=2, f=None, spec=None):
    """Degree of weighted approximation by polynomials of degree at most ``n``.

    For ``p = 2`` this is exact: the orthogonal projection minimises, so the
    error is the root-sum-square of ``c_k`` for ``k > n``.  For other ``p``
    an upper bound is returned from the better of ``s_{n+1}(f)`` and
    ``v_{n // 2}(f)``; that needs ``f``.
    """
    c = coeffs.c
    if coeffs.K <= n + 1:
        raise TailNotConverged(f"need more than {n + 1} coefficients, have {coeffs.K}")
    flags = []
    if coeffs.K < 4 * n:
        flags.append("short-tail")
    p = math.inf if str(p).lower() in ("inf", "infinity") else float(p)
    if p == 2:
        tail = c[n + 1:]
        total = float(np.dot(tail, tail))
        if f is not None:
            # Parseval: whatever ||f w||^2 has beyond the known coefficients
            req = NormRequest(p=2, weight_mode="w", n=coeffs.K,
                              breakpoints=getattr(f, "breakpoints", ()), rtol=None)
            full = weighted_norm(f, req, spec or coeffs.table.spec).value ** 2
            rest = full - float(np.dot(c, c))
            if rest > 1e-13 * full:
                total += rest
                flags.append("parseval-remainder")
        elif total > 0 and c[-1] ** 2 > 1e-3 * total:
            flags.append("tail-unconverged")
        return ApproxError(math.sqrt(total), True, tuple(flags))
    if f is None:
        raise ValueError("p != 2 needs the target function f")
    spec = spec or coeffs.table.spec
    table = coeffs.table
    req = NormRequest(p=p, weight_mode="w", n=n, breakpoints=getattr(f, "breakpoints", ()),
                      rtol=None)
    s = c[:n + 1]
    candidates = [weighted_norm(lambda x: f(x) - eval_expansion(table, s, x), req, spec).value]
    if n >= 2:
        vp = vp_mean(coeffs, n // 2)
        candidates.append(weighted_norm(lambda x: f(x) - vp_eval(vp, x), req, spec).value)
    flags.append("upper-bound")
    return ApproxError(min(candidates), False, tuple(flags))
