"""Orthonormal polynomials for ``w**2 dx``, kernels and Christoffel functions."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _accel
from .errors import DegreeExceeded, DiscretizationFailure, WeightOverflow
from .mrs import mrs_table, tail_cutoff
from .quadrature import PanelRule, panel_rule
from .weights import WeightSpec, eval_Q

__all__ = [
    "RecurrenceTable",
    "build_recurrence",
    "recurrence_table",
    "measure_rule",
    "eval_polys",
    "eval_polys_and_derivs",
    "cd_kernel",
    "christoffel_darboux",
    "christoffel",
    "orthonormality_residual",
    "verification_rule",
]

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class RecurrenceTable:
    """``x p_k = beta[k+1] p_{k+1} + alpha[k] p_k + beta[k] p_{k-1}``.

    ``beta[0]`` is unused and stored as zero; ``beta[m]`` equals
    ``gamma_{m-1} / gamma_m``.
    """

    spec: WeightSpec
    n_max: int
    alpha: np.ndarray
    beta: np.ndarray
    mu0: float
    discretization: dict = field(default_factory=dict)

    @property
    def p0(self):
        return 1.0 / math.sqrt(self.mu0)

    @property
    def L(self):
        return self.discretization.get("L")

    def leading_ratio(self, m):
        """``gamma_{m-1} / gamma_m``."""
        if not 1 <= m <= self.n_max:
            raise DegreeExceeded(f"m={m} outside 1..{self.n_max}")
        return float(self.beta[m])

    def to_dict(self):
        return {
            "spec": self.spec.to_dict(),
            "n_max": self.n_max,
            "alpha_k": self.alpha.tolist(),
            "beta_k": self.beta[1:].tolist(),
            "mu0": self.mu0,
            "L": self.discretization.get("L"),
            "M": self.discretization.get("M"),
            "discretization": self.discretization,
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, d):
        beta = np.concatenate([[0.0], np.asarray(d["beta_k"], float)])
        return cls(WeightSpec.from_dict(d["spec"]), int(d["n_max"]),
                   np.asarray(d["alpha_k"], float), beta, float(d["mu0"]),
                   dict(d.get("discretization", {"L": d.get("L"), "M": d.get("M")})))

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def measure_rule(spec, rule, power=2):
    """Nodes and weights of the discrete measure ``w**power dx`` on ``rule``.

    Weights that underflow are clamped to zero and dropped.
    """
    x = rule.nodes
    ok = np.abs(x) <= spec.x_max
    x = x[ok]
    W = rule.weights[ok] * np.exp(-power * eval_Q(spec, x)[0])
    W[W < _TINY] = 0.0
    keep = W > 0
    if not keep.any():
        raise WeightOverflow("the weight underflows on every quadrature node")
    return x[keep], W[keep]


def _default_rule(spec, mrs, n_max, order=20, panels_per_side=None):
    # 1.5 a_{2n} alone truncates visibly for small n on Freud weights
    L = max(1.5 * mrs.a(2 * n_max), tail_cutoff(mrs, 2 * n_max, power=2.0))
    if math.isfinite(spec.x_max):
        L = min(L, spec.x_max)
    per_side = panels_per_side or max(8, (n_max + 1) // 2)
    return panel_rule(L, L / per_side, order)


def build_recurrence(spec, mrs=None, n_max=64, order=20, panels_per_side=None,
                     refine_check=True, rtol=1e-10):
    """Discretised Stieltjes procedure on a Gauss–Legendre panel measure.

    The support is truncated to ``|x| <= 1.5 a_{2 n_max}``, widened when
    needed so that ``p**2 w**2`` is negligible beyond the cut for every
    ``deg p <= n_max``.  With
    ``refine_check`` the construction is repeated with twice the panel
    density and :class:`DiscretizationFailure` is raised if any ``beta_k``
    moves by more than ``rtol`` relatively.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    mrs = mrs or mrs_table(spec)
    rule = _default_rule(spec, mrs, n_max, order, panels_per_side)
    x, W = measure_rule(spec, rule)
    _, beta, mu0 = _accel.stieltjes(x, W, n_max, symmetric=True)
    disc = rule.provenance()
    disc["M_effective"] = int(x.size)
    if refine_check:
        fine = rule.refined()
        xf, Wf = measure_rule(spec, fine)
        _, beta_f, mu0_f = _accel.stieltjes(xf, Wf, n_max, symmetric=True)
        rel = np.abs(beta_f[1:] / beta[1:] - 1.0)
        bad = np.flatnonzero(rel > rtol)
        if bad.size or abs(mu0_f / mu0 - 1.0) > rtol:
            k = int(bad[0]) + 1 if bad.size else 0
            raise DiscretizationFailure(
                f"beta_{k} not stable under refinement (rel change {rel.max():.3g})",
                first_unstable=k)
        disc["refinement_max_rel_change"] = float(rel.max())
    return RecurrenceTable(spec, int(n_max), np.zeros(n_max + 1), beta, float(mu0), disc)


@lru_cache(maxsize=32)
def recurrence_table(spec, n_max=64, order=20):
    """Cached :func:`build_recurrence` for the default MRS table."""
    return build_recurrence(spec, mrs_table(spec), n_max, order)


def _check_m(table, m, limit):
    if m > limit:
        raise DegreeExceeded(f"need m <= {limit}, got {m}")


def eval_polys(table, x, m):
    """``p_0(x) .. p_{m-1}(x)``; shape ``(m,)`` for scalar ``x``."""
    _check_m(table, m, table.n_max + 1)
    xa = np.asarray(x, float)
    P = _accel.recurrence_values(xa.ravel(), table.alpha, table.beta, table.p0, m)
    return P[0] if xa.ndim == 0 else P.reshape(xa.shape + (m,))


def eval_polys_and_derivs(table, x, m):
    _check_m(table, m, table.n_max + 1)
    xa = np.asarray(x, float)
    P, D = _accel.recurrence_values_and_derivs(xa.ravel(), table.alpha, table.beta,
                                               table.p0, m)
    if xa.ndim == 0:
        return P[0], D[0]
    return P.reshape(xa.shape + (m,)), D.reshape(xa.shape + (m,))


def cd_kernel(table, m, x, t):
    """``K_m(x, t) = sum_{k<m} p_k(x) p_k(t)``; broadcasts over ``x`` and ``t``."""
    _check_m(table, m, table.n_max)
    xb, tb = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
    Px = eval_polys(table, xb.ravel(), m)
    Pt = eval_polys(table, tb.ravel(), m)
    out = np.einsum("ik,ik->i", Px, Pt).reshape(xb.shape)
    return float(out) if out.ndim == 0 else out


def christoffel_darboux(table, m, x, t):
    """Closed form of ``K_m(x, t)`` for ``x != t``."""
    _check_m(table, m, table.n_max)
    x = np.asarray(x, float)
    t = np.asarray(t, float)
    Px = eval_polys(table, x, m + 1)
    Pt = eval_polys(table, t, m + 1)
    num = Px[..., m] * Pt[..., m - 1] - Pt[..., m] * Px[..., m - 1]
    out = table.beta[m] * num / (x - t)
    return float(out) if np.ndim(out) == 0 else out


def christoffel(table, m, x):
    """``lambda_m(x) = 1 / K_m(x, x)``."""
    _check_m(table, m, table.n_max)
    P = eval_polys(table, x, m)
    out = 1.0 / np.sum(P * P, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def verification_rule(table, order=31, width_factor=0.7, L_factor=1.2):
    """A quadrature with nodes unrelated to the build rule."""
    L = table.discretization["L"] * L_factor
    if math.isfinite(table.spec.x_max):
        L = min(L, table.spec.x_max)
    width = table.discretization["panel_width"] * width_factor
    return panel_rule(L, width, order, grade_levels=14, sigma=0.3)


def orthonormality_residual(table, rule=None, m=None):
    """``max |<p_i, p_j> - delta_ij|`` for ``i, j < m`` under ``rule``.

    Without a rule the build discretisation is reconstructed.
    """
    m = table.n_max + 1 if m is None else m
    if rule is None:
        d = table.discretization
        rule = panel_rule(d["L"], d["panel_width"], d["order"])
    elif not isinstance(rule, PanelRule):
        raise TypeError("rule must be a PanelRule")
    x, W = measure_rule(table.spec, rule)
    P = eval_polys(table, x, m)
    G = (P * W[:, None]).T @ P
    return float(np.max(np.abs(G - np.eye(m))))
