"""Exponential weights ``w = exp(-Q)`` on the real line.

Every shipped family is written in the single form

    Q(x) = |x|**u * (exp_l(|x|**alpha) - exp_l(0)) / scale

where ``exp_l`` is the ``l``-fold iterated exponential (``exp_0(y) = y``).
Pure Freud weights are ``u = 0, l = 0``; the generalised Freud family keeps
``l = 0`` with ``u > 0``; Erdős weights have ``l >= 1``.  Derivatives are
closed form.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, WeightOverflow

__all__ = [
    "WeightSpec",
    "ConditionReport",
    "PRESETS",
    "preset",
    "load_spec",
    "eval_Q",
    "eval_T",
    "T_limit0",
    "T_safe",
    "weight",
    "multiplier",
    "MULTIPLIERS",
    "check_class_conditions",
    "check_T_growth",
    "check_T_shift_stability",
]

FAMILIES = ("freud", "freud_general", "erdos")

# exp() arguments are kept below this so that products of the tower stay finite
_EXP_ARG_MAX = 690.0


@dataclass(frozen=True)
class WeightSpec:
    family: str
    alpha: float
    u: float = 0.0
    ell: int = 0
    scale: float = 1.0
    lambda_class: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if self.u < 0:
            raise ConfigError("u must be non-negative")
        if not self.scale > 0:
            raise ConfigError("scale must be positive")
        if self.lambda_class is not None and not self.lambda_class > 0:
            raise ConfigError("lambda_class must be positive")
        if self.family == "freud":
            if self.u != 0 or self.ell != 0:
                raise ConfigError("freud weights take only alpha and scale")
        elif self.family == "freud_general":
            if self.ell != 0:
                raise ConfigError("freud_general requires ell = 0")
            if not self.alpha + self.u > 1:
                raise ConfigError("freud_general requires alpha + u > 1")
        else:
            if int(self.ell) != self.ell or self.ell < 1:
                raise ConfigError("erdos weights need a positive integer ell")
            if not self.alpha + self.u > 1:
                raise ConfigError("erdos weights require alpha + u > 1")
        object.__setattr__(self, "ell", int(self.ell))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "u", float(self.u))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def is_freud_type(self):
        return self.ell == 0

    @property
    def x_max(self):
        """Largest |x| for which Q, Q', Q'' are representable."""
        if self.ell == 0:
            return math.inf
        y = _EXP_ARG_MAX
        for _ in range(self.ell - 1):
            y = math.log(y)
        return y ** (1.0 / self.alpha)

    def to_dict(self):
        d = asdict(self)
        if not d["name"]:
            d.pop("name")
        return d

    def digest(self):
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def label(self):
        if self.name:
            return self.name
        if self.family == "freud":
            return f"freud(alpha={self.alpha:g}, scale={self.scale:g})"
        return (f"{self.family}(u={self.u:g}, alpha={self.alpha:g}, "
                f"ell={self.ell}, scale={self.scale:g})")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "preset" in d:
            base = preset(d.pop("preset")).to_dict()
            base.update(d)
            d = base
        known = {"family", "alpha", "u", "ell", "scale", "lambda_class", "name"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown weight keys: {sorted(unknown)}")
        if "family" not in d or "alpha" not in d:
            raise ConfigError("weight spec needs at least 'family' and 'alpha'")
        return cls(**d)


PRESETS = {
    "hermite": WeightSpec("freud", 2.0, scale=2.0, lambda_class=1.0, name="hermite"),
    "freud4": WeightSpec("freud", 4.0, lambda_class=1.0, name="freud4"),
    "freud1.5": WeightSpec("freud", 1.5, lambda_class=1.0, name="freud1.5"),
    "erdos": WeightSpec("erdos", 1.0, u=1.0, ell=1, lambda_class=1.1, name="erdos"),
    "erdos2": WeightSpec("erdos", 2.0, u=0.0, ell=1, lambda_class=1.1, name="erdos2"),
}


def preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; have {sorted(PRESETS)}") from None


def load_spec(path):
    """Read a weight spec from a TOML or JSON file.

    A ``[weight]`` table is used when present so that experiment configs can
    be passed directly.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
    else:
        data = _load_toml(text)
    if "weight" in data and isinstance(data["weight"], dict):
        data = data["weight"]
    return WeightSpec.from_dict(data)


def _load_toml(text):
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib
    return tomllib.loads(text)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _tower(spec, y):
    """Return ``(E(y) - E(0), E'(y), E''(y))`` for the iterated exponential."""
    if spec.ell == 0:
        return y.copy(), np.ones_like(y), np.zeros_like(y)
    e = y.copy()               # e_k(y)
    e0 = 0.0                   # e_k(0)
    diff = y.copy()            # e_k(y) - e_k(0)
    D = np.ones_like(y)        # prod_{i<=k} e_i(y)
    S = np.zeros_like(y)       # sum_{j<k} D_j
    for _ in range(spec.ell):
        if np.any(e > _EXP_ARG_MAX):
            raise WeightOverflow(f"exp tower overflows for {spec.label()}")
        S = S + D
        diff = math.exp(e0) * np.expm1(diff)
        e0 = math.exp(e0)
        e = np.exp(e)
        D = D * e
    return diff, D, D * S


def eval_Q(spec, x):
    """Return ``(Q, Q', Q'')`` at ``x`` (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if not np.all(np.isfinite(xa)):
        raise DomainError("x must be finite")
    r = np.abs(xa)
    if np.any(r > spec.x_max):
        raise WeightOverflow(f"|x| > {spec.x_max:.6g} is outside the representable range "
                             f"of {spec.label()}")
    a, u, s = spec.alpha, spec.u, spec.scale
    Q = np.zeros_like(r)
    Qp = np.zeros_like(r)
    Qpp = np.zeros_like(r)
    nz = r > 0
    rn = r[nz]
    y = rn ** a
    dE, E1, E2 = _tower(spec, y)
    # factor r**(u + a - k) out so tiny |x| neither overflows nor gives 0 * inf
    q = np.divide(dE, y, out=E1.copy(), where=y > 0)
    Q[nz] = rn ** (u + a) * q / s
    Qp[nz] = rn ** (u + a - 1) * (u * q + a * E1) / s
    with np.errstate(over="ignore"):
        Qpp[nz] = rn ** (u + a - 2) * (u * (u - 1) * q + 2 * u * a * E1
                                       + a * a * y * E2 + a * (a - 1) * E1) / s
    if not np.all(nz):
        order = a + u
        c = _tower(spec, np.zeros(1))[1][0] / s
        Qpp[~nz] = 2 * c if order == 2 else (0.0 if order > 2 else math.inf)
    Qp = np.sign(xa) * Qp
    if scalar:
        return float(Q[0]), float(Qp[0]), float(Qpp[0])
    return Q, Qp, Qpp


def weight(spec, x):
    """``w(x) = exp(-Q(x))``."""
    return np.exp(-eval_Q(spec, x)[0])


MULTIPLIERS = ("w", "w_over_T4", "T4_w", "w_over_sqrtT", "T34_w")


def multiplier(spec, mode):
    """Vectorised ``x -> m(x)`` for the weighted-norm multipliers.

    ``w``, ``w / T**(1/4)``, ``T**(1/4) w``, ``w / sqrt(T)`` and ``T**(3/4) w``.
    """
    powers = {"w": 0.0, "w_over_T4": -0.25, "T4_w": 0.25, "w_over_sqrtT": -0.5,
              "T34_w": 0.75}
    try:
        k = powers[mode]
    except KeyError:
        raise ConfigError(f"unknown multiplier {mode!r}; have {MULTIPLIERS}") from None
    if k == 0.0:
        return lambda x: weight(spec, x)
    return lambda x: weight(spec, x) * T_safe(spec, x) ** k


def T_limit0(spec):
    """``lim_{x->0+} T(x)``, which equals ``u + alpha`` for every family."""
    return spec.u + spec.alpha


def _T_positive(spec, r):
    if spec.ell == 0:
        return np.full_like(r, spec.u + spec.alpha)
    y = r ** spec.alpha
    dE, E1, _ = _tower(spec, y)
    return spec.u + spec.alpha * y * E1 / dE


def eval_T(spec, x):
    """``T(x) = x Q'(x) / Q(x)`` for ``x != 0``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa == 0):
        raise DomainError("T is undefined at x = 0; use T_limit0 or T_safe")
    r = np.atleast_1d(np.abs(xa))
    if np.any(r > spec.x_max):
        raise WeightOverflow(f"|x| > {spec.x_max:.6g} for {spec.label()}")
    out = _T_positive(spec, r)
    return float(out[0]) if xa.ndim == 0 else out


def T_safe(spec, x):
    """``T`` on arbitrary grids; the limit value is used at ``x = 0``."""
    xa = np.asarray(x, dtype=float)
    r = np.atleast_1d(np.abs(xa))
    out = np.full_like(r, T_limit0(spec))
    nz = r > 0
    if np.any(nz):
        out[nz] = eval_T(spec, r[nz])
    return float(out[0]) if xa.ndim == 0 else out


# ---------------------------------------------------------------------------
# class condition checks
# ---------------------------------------------------------------------------

@dataclass
class ConditionReport:
    """Outcome of a numerical spot check; advisory, never a proof."""

    subject: str
    conditions: dict = field(default_factory=dict)

    def add(self, key, passed, constant=None, witness_x=None, **extra):
        entry = {"pass": bool(passed),
                 "constant": _jsonable(constant),
                 "witness_x": _jsonable(witness_x)}
        entry.update({k: _jsonable(v) for k, v in extra.items()})
        self.conditions[key] = entry

    @property
    def passed(self):
        return all(c["pass"] for c in self.conditions.values())

    def __getitem__(self, key):
        return self.conditions[key]

    def to_dict(self):
        return {"subject": self.subject, "pass": self.passed, "conditions": self.conditions}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _jsonable(v):
    if v is None:
        return None
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(t) for t in v]
    return v


def default_grid(spec, lo=1e-3, hi=None, num=400):
    if hi is None:
        hi = min(spec.x_max, 100.0)
    return np.logspace(math.log10(lo), math.log10(hi), num)


def check_class_conditions(spec, grid=None, J=1.0, quasi_tol=100.0):
    """Spot-check conditions (a)-(e) of the weight class on a positive grid.

    ``J`` is the half-width of the exceptional interval for the lower bound
    in condition (e).
    """
    x = default_grid(spec) if grid is None else np.unique(np.abs(np.asarray(grid, float)))
    x = x[x > 0]
    rep = ConditionReport(spec.label())

    Q, Qp, Qpp = eval_Q(spec, x)
    Qm, Qpm, _ = eval_Q(spec, -x)
    even = np.array_equal(Q, Qm) and np.array_equal(Qp, -Qpm)
    rep.add("even", even)

    Q0, Qp0, _ = eval_Q(spec, 0.0)
    rep.add("a_origin", Q0 == 0.0 and Qp0 == 0.0, constant=Q0)

    bad = np.flatnonzero(~(Qpp > 0))
    rep.add("b_convex", bad.size == 0, constant=float(Qpp.min()),
            witness_x=x[bad[0]] if bad.size else x[np.argmin(Qpp)])

    inc = np.all(Qp > 0) and np.all(np.diff(Q) > 0)
    rep.add("c_growth", inc, constant=float(Q[-1]), witness_x=x[-1])

    T = eval_T(spec, x)
    running = np.maximum.accumulate(T)
    ratios = running / T
    i = int(np.argmax(ratios))
    C_q = float(ratios[i])
    rep.add("d_quasi_increasing", C_q < quasi_tol, constant=C_q, witness_x=x[i])
    j = int(np.argmin(T))
    lam = float(T[j])
    rep.add("d_lambda", lam > 1.0, constant=lam, witness_x=x[j])

    with np.errstate(divide="ignore", invalid="ignore"):
        R = (Qpp / Qp) * (Q / Qp)   # grouped so the product cannot overflow
    finite = np.isfinite(R)
    k = int(np.nanargmax(np.where(finite, R, -np.inf))) if finite.any() else 0
    upper = float(R[k]) if finite.any() else math.inf
    rep.add("e_upper", finite.all() and upper < math.inf, constant=upper, witness_x=x[k])
    out = x > J
    if out.any():
        Ro = np.where(finite[out], R[out], np.inf)
        m = int(np.argmin(Ro))
        lower = float(Ro[m])
        rep.add("e_lower", lower > 0 and math.isfinite(lower), constant=lower,
                witness_x=x[out][m], J=J)
    else:
        rep.add("e_lower", False, detail="grid has no points outside J", J=J)
    return rep


def loglog_slope(n, values):
    n = np.asarray(n, float)
    v = np.asarray(values, float)
    if n.size < 2:
        return 0.0
    return float(np.polyfit(np.log(n), np.log(v), 1)[0])


def check_T_growth(spec, mrs, n_range, lam=None, slope_tol=0.05):
    """Empirical constant of ``T(a_n) <= c (n / a_n)**(2/3)`` and the ratio
    ``|Q'| / Q**lam`` on ``|x| >= 1``."""
    n = np.asarray(list(n_range), dtype=float)
    a = np.array([mrs.a(k) for k in n])
    c = T_safe(spec, a) * (a / n) ** (2.0 / 3.0)
    slope = loglog_slope(n, c)
    i = int(np.argmax(c))
    rep = ConditionReport(spec.label())
    rep.add("T_growth", bool(np.all(np.isfinite(c)) and slope <= slope_tol),
            constant=float(c[i]), witness_x=float(a[i]), slope=slope,
            slope_tol=slope_tol, n=n.tolist(), c_n=c.tolist())
    lam = spec.lambda_class if lam is None else lam
    if lam is not None:
        hi = min(spec.x_max, 1.5 * float(a.max()))
        x = np.linspace(1.0, max(hi, 1.0 + 1e-9), 400)
        Q, Qp, _ = eval_Q(spec, x)
        ratio = np.abs(Qp) / Q ** lam
        j = int(np.argmax(ratio))
        rep.add("Qprime_power", bool(np.all(np.isfinite(ratio)) and 0 < lam < 2),
                constant=float(ratio[j]), witness_x=float(x[j]), lam=lam)
    return rep


def check_T_shift_stability(spec, grid=None, c_shift=0.5, tol=100.0):
    """Ratios ``T(x +/- c/T(x)) / T(x)`` over a grid."""
    if not 0 < c_shift < 1:
        raise DomainError("c_shift must lie in (0, 1)")
    if grid is None:
        hi = min(spec.x_max * 0.9, 10.0)
        grid = np.linspace(0.1, hi, 400)
    x = np.asarray(grid, float)
    x = x[x != 0]
    Tx = eval_T(spec, x)
    ratios = []
    where = []
    for sgn in (1.0, -1.0):
        xs = x + sgn * c_shift / Tx
        ok = (xs != 0) & (np.abs(xs) <= spec.x_max)
        ratios.append(eval_T(spec, xs[ok]) / Tx[ok])
        where.append(x[ok])
    r = np.concatenate(ratios)
    wx = np.concatenate(where)
    hi_i, lo_i = int(np.argmax(r)), int(np.argmin(r))
    C = max(float(r[hi_i]), 1.0 / float(r[lo_i]))
    rep = ConditionReport(spec.label())
    rep.add("T_shift", bool(np.all(np.isfinite(r)) and C < tol), constant=C,
            witness_x=float(wx[hi_i] if r[hi_i] >= 1 / r[lo_i] else wx[lo_i]),
            sup=float(r[hi_i]), inf=float(r[lo_i]), c_shift=c_shift)
    return rep
