"""Hot numerical kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time from the ``VPX_BACKEND``
environment variable (``numba`` or ``numpy``).  ``VPX_DISABLE_NUMBA=1`` is
accepted as a shorthand for ``VPX_BACKEND=numpy``.  When numba cannot be
imported the numpy path is used regardless.

Both paths compute the same quantities in the same order of summation where
it matters (recurrences), so results agree to rounding.
"""
import os

import numpy as np

try:
    import numba
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

__all__ = [
    "HAVE_NUMBA",
    "BACKENDS",
    "get_backend",
    "set_backend",
    "recurrence_values",
    "recurrence_values_and_derivs",
    "stieltjes",
    "abs_kernel_integrals",
]


def _default_backend():
    if os.environ.get("VPX_DISABLE_NUMBA", "").strip() in ("1", "true", "yes"):
        return "numpy"
    name = os.environ.get("VPX_BACKEND", "numba").strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"VPX_BACKEND must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        return "numpy"
    return name


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _np_recurrence_values(x, alpha, beta, p0, m):
    out = np.empty((x.shape[0], m))
    if m == 0:
        return out
    out[:, 0] = p0
    if m > 1:
        out[:, 1] = (x - alpha[0]) * out[:, 0] / beta[1]
    for k in range(1, m - 1):
        out[:, k + 1] = ((x - alpha[k]) * out[:, k] - beta[k] * out[:, k - 1]) / beta[k + 1]
    return out


def _np_recurrence_values_and_derivs(x, alpha, beta, p0, m):
    P = np.empty((x.shape[0], m))
    D = np.empty((x.shape[0], m))
    if m == 0:
        return P, D
    P[:, 0] = p0
    D[:, 0] = 0.0
    if m > 1:
        P[:, 1] = (x - alpha[0]) * P[:, 0] / beta[1]
        D[:, 1] = P[:, 0] / beta[1]
    for k in range(1, m - 1):
        P[:, k + 1] = ((x - alpha[k]) * P[:, k] - beta[k] * P[:, k - 1]) / beta[k + 1]
        D[:, k + 1] = ((x - alpha[k]) * D[:, k] + P[:, k] - beta[k] * D[:, k - 1]) / beta[k + 1]
    return P, D


def _np_stieltjes(nodes, weights, n, symmetric):
    alpha = np.zeros(n + 1)
    beta = np.zeros(n + 1)
    mu0 = weights.sum()
    q_prev = np.zeros_like(nodes)
    q = np.full_like(nodes, 1.0 / np.sqrt(mu0))
    for k in range(n + 1):
        if not symmetric:
            alpha[k] = np.dot(weights, nodes * q * q)
        if k == n:
            break
        r = (nodes - alpha[k]) * q - beta[k] * q_prev
        b = np.sqrt(np.dot(weights, r * r))
        beta[k + 1] = b
        q_prev = q
        q = r / b
    return alpha, beta, mu0


def _np_abs_kernel_integrals(A, B, r, chunk_elems=1 << 22):
    out = np.empty(A.shape[0])
    rows = max(1, chunk_elems // max(1, B.shape[0]))
    Bt = np.ascontiguousarray(B.T)
    for start in range(0, A.shape[0], rows):
        V = A[start:start + rows] @ Bt
        np.abs(V, out=V)
        out[start:start + rows] = V @ r
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _nb_recurrence_values(x, alpha, beta, p0, m):
        nx = x.shape[0]
        out = np.empty((nx, m))
        if m == 0:
            return out
        for i in range(nx):
            xi = x[i]
            pm1 = 0.0
            pk = p0
            out[i, 0] = pk
            for k in range(m - 1):
                bk = beta[k] if k > 0 else 0.0
                pn = ((xi - alpha[k]) * pk - bk * pm1) / beta[k + 1]
                out[i, k + 1] = pn
                pm1 = pk
                pk = pn
        return out

    @njit(cache=True, nogil=True)
    def _nb_recurrence_values_and_derivs(x, alpha, beta, p0, m):
        nx = x.shape[0]
        P = np.empty((nx, m))
        D = np.empty((nx, m))
        if m == 0:
            return P, D
        for i in range(nx):
            xi = x[i]
            pm1 = 0.0
            pk = p0
            dm1 = 0.0
            dk = 0.0
            P[i, 0] = pk
            D[i, 0] = 0.0
            for k in range(m - 1):
                bk = beta[k] if k > 0 else 0.0
                pn = ((xi - alpha[k]) * pk - bk * pm1) / beta[k + 1]
                dn = ((xi - alpha[k]) * dk + pk - bk * dm1) / beta[k + 1]
                P[i, k + 1] = pn
                D[i, k + 1] = dn
                pm1 = pk
                pk = pn
                dm1 = dk
                dk = dn
        return P, D

    @njit(cache=True, nogil=True)
    def _nb_stieltjes(nodes, weights, n, symmetric):
        M = nodes.shape[0]
        alpha = np.zeros(n + 1)
        beta = np.zeros(n + 1)
        mu0 = 0.0
        for j in range(M):
            mu0 += weights[j]
        q_prev = np.zeros(M)
        q = np.full(M, 1.0 / np.sqrt(mu0))
        r = np.empty(M)
        for k in range(n + 1):
            if not symmetric:
                s = 0.0
                for j in range(M):
                    s += weights[j] * nodes[j] * q[j] * q[j]
                alpha[k] = s
            if k == n:
                break
            s = 0.0
            for j in range(M):
                rj = (nodes[j] - alpha[k]) * q[j] - beta[k] * q_prev[j]
                r[j] = rj
                s += weights[j] * rj * rj
            b = np.sqrt(s)
            beta[k + 1] = b
            for j in range(M):
                q_prev[j] = q[j]
                q[j] = r[j] / b
        return alpha, beta, mu0

    @njit(cache=True, nogil=True)
    def _nb_abs_kernel_integrals(A, B, r):
        # BLAS for the inner products, fused |.|-weighted reduction per block
        nx = A.shape[0]
        nt = B.shape[0]
        out = np.empty(nx)
        BT = np.ascontiguousarray(B.T)
        bs = max(1, min(nx, (1 << 20) // max(nt, 1)))
        for i0 in range(0, nx, bs):
            i1 = min(nx, i0 + bs)
            S = np.dot(np.ascontiguousarray(A[i0:i1]), BT)
            for i in range(i1 - i0):
                acc = 0.0
                for j in range(nt):
                    acc += r[j] * abs(S[i, j])
                out[i0 + i] = acc
        return out


_IMPLS = {
    "numpy": {
        "recurrence_values": _np_recurrence_values,
        "recurrence_values_and_derivs": _np_recurrence_values_and_derivs,
        "stieltjes": _np_stieltjes,
        "abs_kernel_integrals": _np_abs_kernel_integrals,
    },
}
if HAVE_NUMBA:
    _IMPLS["numba"] = {
        "recurrence_values": _nb_recurrence_values,
        "recurrence_values_and_derivs": _nb_recurrence_values_and_derivs,
        "stieltjes": _nb_stieltjes,
        "abs_kernel_integrals": _nb_abs_kernel_integrals,
    }

BACKENDS = tuple(_IMPLS)
_backend = _default_backend()


def get_backend():
    return _backend


def set_backend(name):
    """Switch the kernel backend; returns the previous name."""
    global _backend
    if name not in _IMPLS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {BACKENDS}")
    previous, _backend = _backend, name
    return previous


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def recurrence_values(x, alpha, beta, p0, m):
    """Values of ``p_0..p_{m-1}`` at the points ``x``; shape ``(len(x), m)``.

    Forward three-term recurrence
    ``beta[k+1] p_{k+1} = (x - alpha[k]) p_k - beta[k] p_{k-1}``.
    """
    x = np.atleast_1d(_f64(x))
    return _IMPLS[_backend]["recurrence_values"](x, _f64(alpha), _f64(beta), float(p0), int(m))


def recurrence_values_and_derivs(x, alpha, beta, p0, m):
    x = np.atleast_1d(_f64(x))
    return _IMPLS[_backend]["recurrence_values_and_derivs"](
        x, _f64(alpha), _f64(beta), float(p0), int(m))


def stieltjes(nodes, weights, n, symmetric=True):
    """Orthonormal recurrence coefficients of a discrete measure.

    Returns ``(alpha, beta, mu0)`` where ``alpha[0..n]``, ``beta[1..n]`` are
    the coefficients (``beta[0]`` is unused and zero) and ``mu0`` the total
    mass.  With ``symmetric=True`` the diagonal coefficients are not computed
    and stay exactly zero.
    """
    return _IMPLS[_backend]["stieltjes"](_f64(nodes), _f64(weights), int(n), bool(symmetric))


def abs_kernel_integrals(A, B, r):
    """``out[i] = sum_j r[j] * |sum_k A[i, k] * B[j, k]|``."""
    return _IMPLS[_backend]["abs_kernel_integrals"](_f64(A), _f64(B), _f64(r))
