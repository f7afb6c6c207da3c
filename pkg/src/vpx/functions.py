"""Built-in target functions used by the CLI and the experiment dictionary."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .weights import weight

__all__ = ["TargetFunction", "parse_target", "BUILTINS"]


@dataclass(frozen=True)
class TargetFunction:
    """A real function with the metadata quadrature and the harness need.

    ``breakpoints`` are points where ``f`` or ``f'`` is not smooth; they
    become panel edges.  ``derivative`` is ``None`` when ``f`` is not
    absolutely continuous.  ``vanishes_weighted`` records whether
    ``f(x) w(x) -> 0`` at infinity for every weight in this package.
    """

    name: str
    f: Callable
    derivative: Optional[Callable] = None
    breakpoints: tuple = ()
    vanishes_weighted: bool = True
    params: tuple = field(default=())

    def __call__(self, x):
        return self.f(np.asarray(x, float))

    def breakpoints_within(self, L):
        bps = set(self.breakpoints)
        if self.name == "sign_sin3":
            k = int(L * 3 / math.pi) + 1
            bps.update(j * math.pi / 3 for j in range(-k, k + 1))
        return tuple(sorted(b for b in bps if -L < b < L))


def _sin():
    return TargetFunction("sin", np.sin, np.cos)


def _cos():
    return TargetFunction("cos", np.cos, lambda x: -np.sin(x))


def _abs():
    return TargetFunction("abs", np.abs, np.sign, breakpoints=(0.0,))


def _sign():
    return TargetFunction("sign", np.sign, None, breakpoints=(0.0,))


def _sign_sin3():
    return TargetFunction("sign_sin3", lambda x: np.sign(np.sin(3 * x)), None)


def _runge(c=25.0):
    c = float(c)
    return TargetFunction("runge", lambda x: 1.0 / (1.0 + c * x * x),
                          lambda x: -2 * c * x / (1.0 + c * x * x) ** 2, params=(c,))


def _gauss_bump(center=0.0, width=1.0):
    c, s = float(center), float(width)

    def f(x):
        return np.exp(-((x - c) / s) ** 2)

    def df(x):
        return -2 * (x - c) / s ** 2 * f(x)

    return TargetFunction("gauss-bump", f, df, params=(c, s))


def _poly(*coeffs):
    """``poly(c0, c1, ...)`` is ``c0 + c1 x + ...``."""
    P = np.polynomial.Polynomial([float(c) for c in coeffs] or [0.0])
    dP = P.deriv()
    return TargetFunction("poly", P, dP, params=tuple(P.coef))


def _characteristic(a=-1.0, b=1.0):
    a, b = float(a), float(b)
    if not a < b:
        raise ConfigError("characteristic(a, b) needs a < b")
    return TargetFunction("characteristic",
                          lambda x: ((x >= a) & (x <= b)).astype(float), None,
                          breakpoints=(a, b), params=(a, b))


BUILTINS = {
    "sin": _sin,
    "cos": _cos,
    "abs": _abs,
    "sign": _sign,
    "sign_sin3": _sign_sin3,
    "runge": _runge,
    "gauss-bump": _gauss_bump,
    "poly": _poly,
    "characteristic": _characteristic,
}


def inverse_weight_clamped(spec, radius):
    """``1 / w`` on ``[-radius, radius]`` and zero outside, so ``f w`` is an
    indicator: the extreme bounded input for sup-norm experiments."""
    R = float(radius)

    def f(x):
        x = np.asarray(x, float)
        out = np.zeros_like(x)
        inside = np.abs(x) <= R
        out[inside] = 1.0 / weight(spec, x[inside])
        return out

    return TargetFunction("invw_clamped", f, None, breakpoints=(-R, R), params=(R,))


_CALL = re.compile(r"^\s*([A-Za-z_][\w\-]*)\s*(?:\((.*)\))?\s*$")


def parse_target(text, spec=None):
    """Parse ``sin``, ``builtin:gauss-bump(0, 0.5)``, ``poly(1, 0, 2)`` ..."""
    if text.startswith("builtin:"):
        text = text[len("builtin:"):]
    m = _CALL.match(text)
    if not m:
        raise ConfigError(f"cannot parse target function {text!r}")
    name, argtext = m.group(1), m.group(2)
    try:
        args = [float(a) for a in argtext.split(",") if a.strip()] if argtext else []
    except ValueError:
        raise ConfigError(f"arguments of {name} must be numbers: {argtext!r}") from None
    if name == "invw_clamped":
        if spec is None or len(args) != 1:
            raise ConfigError("invw_clamped(radius) needs a weight spec and one argument")
        return inverse_weight_clamped(spec, args[0])
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ConfigError(f"unknown target {name!r}; have {sorted(BUILTINS)}") from None
    try:
        return factory(*args)
    except TypeError as exc:
        raise ConfigError(f"bad arguments for {name}: {exc}") from None
