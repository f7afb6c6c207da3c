"""Mhaskar–Rakhmanov–Saff numbers and the auxiliary functions built on them."""
from __future__ import annotations

import math
import threading
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceFailure, NoBracket
from .quadrature import gauss_chebyshev, graded_rule
from .weights import T_safe, eval_Q, loglog_slope

__all__ = [
    "MrsTable",
    "mrs_table",
    "mrs_equation",
    "mrs_number",
    "delta_n",
    "phi_fn",
    "varphi_fn",
    "doubling_constants",
    "growth_exponent_check",
    "tail_cutoff",
]


@lru_cache(maxsize=8)
def _sine_rule(order, levels):
    phi, w = graded_rule(0.0, math.pi / 2, order=order, levels=levels)
    return np.sin(phi), w * (2.0 / math.pi)


def mrs_equation(spec, a, quad_order=20, method="graded"):
    """Right side of the MRS equation as a function of ``a``.

    ``(2/pi) int_0^1 a u Q'(a u) / sqrt(1 - u^2) du``.  The default method
    substitutes ``u = sin(phi)`` and integrates with Gauss–Legendre panels
    graded toward ``phi = 0``, where ``Q'`` may have an algebraic
    singularity.  ``method="chebyshev"`` uses a first-kind Gauss–Chebyshev
    rule of ``quad_order`` nodes instead, exact when ``Q'`` is a polynomial.
    """
    if method == "graded":
        s, w = _sine_rule(int(quad_order), 24)
        return float(np.dot(w, a * s * eval_Q(spec, a * s)[1]))
    if method == "chebyshev":
        # the integrand is even in u, so the half-range integral is half the full one
        u, w = gauss_chebyshev(int(quad_order))
        return float(np.dot(w, a * u * eval_Q(spec, a * u)[1])) / math.pi
    raise ValueError(f"unknown method {method!r}")


def _chebyshev_converged(spec, a, quad_order, rtol=1e-13, max_order=1 << 20):
    order = int(quad_order)
    prev = mrs_equation(spec, a, order, "chebyshev")
    while order < max_order:
        order *= 2
        cur = mrs_equation(spec, a, order, "chebyshev")
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    raise ConvergenceFailure(f"Gauss–Chebyshev did not converge at a={a:g}")


def mrs_number(spec, n, quad_order=20, method="graded", rtol=1e-12):
    """Solve the MRS equation ``G(a) = n`` for ``a``."""
    n = float(n)
    if not n > 0:
        raise ValueError("n must be positive")
    if method == "graded":
        G = lambda a: mrs_equation(spec, a, quad_order, "graded")  # noqa: E731
    else:
        G = lambda a: _chebyshev_converged(spec, a, quad_order)  # noqa: E731

    cap = spec.x_max
    lo, hi = 1.0, 2.0
    while G(lo) > n:
        lo *= 0.5
        if lo < 1e-300:
            raise NoBracket("could not bracket the MRS number from below")
    while G(hi) < n:
        lo = hi
        hi *= 2.0
        if hi >= cap:
            hi = cap
            if G(hi) < n:
                raise NoBracket(f"MRS number for n={n:g} exceeds the representable "
                                f"range |x| <= {cap:.6g} of {spec.label()}")
            break
    a = brentq(lambda t: G(t) - n, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
               maxiter=200)
    resid = abs(G(a) - n) / n
    if resid > rtol:
        raise ConvergenceFailure(f"MRS residual {resid:.3g} for n={n:g}")
    if method == "graded":
        check = mrs_equation(spec, a, quad_order + 12, "graded")
        if abs(check - n) / n > 100 * rtol:
            raise ConvergenceFailure(f"MRS quadrature not converged at n={n:g}")
    return float(a)


class MrsTable:
    """Cached ``n -> a_n`` for a single weight, plus derived quantities."""

    def __init__(self, spec, quad_order=20, method="graded"):
        self.spec = spec
        self.quad_order = quad_order
        self.method = method
        self.entries = {}
        self._lock = threading.Lock()

    def a(self, n):
        key = float(n)
        try:
            return self.entries[key]
        except KeyError:
            pass
        val = mrs_number(self.spec, key, self.quad_order, self.method)
        with self._lock:
            self.entries.setdefault(key, val)
        return val

    def T_a(self, n):
        return float(T_safe(self.spec, self.a(n)))

    def delta(self, n):
        return delta_n(self, n)

    def phi(self, n, x):
        return phi_fn(self, n, x)

    def varphi(self, n, x):
        return varphi_fn(self, n, x)

    def rows(self, n_list):
        return [(n, self.a(n), self.delta(n), self.T_a(n)) for n in n_list]


@lru_cache(maxsize=32)
def mrs_table(spec, quad_order=20, method="graded"):
    """Shared table per ``(spec, quad_order, method)``."""
    return MrsTable(spec, quad_order, method)


def delta_n(table, n):
    return (n * table.T_a(n)) ** (-2.0 / 3.0)


def phi_fn(table, n, x):
    xa = np.asarray(x, float)
    an, a2n, d = table.a(n), table.a(2 * n), delta_n(table, n)
    r = np.minimum(np.abs(xa), an)
    out = (1.0 - r / a2n) / np.sqrt(1.0 - r / an + d)
    return float(out) if xa.ndim == 0 else out


def varphi_fn(table, n, x):
    return table.a(n) / n * phi_fn(table, n, x)


def doubling_constants(table, n_list):
    """Empirical constants for ``a_2n <= C a_n``, ``T(a_2n) <= C T(a_n)`` and
    ``a_n / T(a_n) <= C (a_2n - a_n)``."""
    rows = []
    for n in n_list:
        an, a2n = table.a(n), table.a(2 * n)
        Tn, T2n = table.T_a(n), table.T_a(2 * n)
        rows.append((a2n / an, T2n / Tn, (an / Tn) / (a2n - an)))
    r = np.array(rows)
    return {"a_doubling": float(r[:, 0].max()),
            "T_doubling": float(r[:, 1].max()),
            "gap": float(r[:, 2].max())}


def growth_exponent_check(table, n_list, eta):
    """``a_n <= C n**eta``: returns ``(C_emp, tail_slope)``.

    ``tail_slope`` is the log-log slope of ``a_n`` over the upper half of
    ``n_list``.
    """
    n = np.asarray(list(n_list), float)
    a = np.array([table.a(k) for k in n])
    C = float(np.max(a / n ** eta))
    half = len(n) // 2
    return C, loglog_slope(n[half:], a[half:])


def tail_cutoff(table, degree, power=1.0, eps=1e-17, min_factor=1.5):
    """Radius beyond which ``|P w**power|`` is negligible for ``deg P <= degree``.

    Uses the growth bound ``|P(x)| <= max_{|t|<=a} |P(t)| (2|x|/a)**degree``
    outside ``[-a, a]`` with ``a = a_degree``, and the fact that the weighted
    maximum of ``P w`` is attained inside ``[-a, a]``.
    """
    spec = table.spec
    a = table.a(max(degree, 1))
    # |P w^power|(L) <= eps * sup |P w^power| once the log-decay exceeds the growth
    need = -math.log(eps) + power * eval_Q(spec, a)[0]
    L = min_factor * a
    while L < spec.x_max:
        if power * eval_Q(spec, L)[0] - degree * math.log(2 * L / a) >= need:
            return float(L)
        L *= 1.05
    return float(spec.x_max)
