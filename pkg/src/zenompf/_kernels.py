"""Hot inner loops.

Every kernel is written once as numba-compatible numpy and compiled with
``numba.njit`` at import time. Setting ``ZENOMPF_DISABLE_NUMBA=1`` (or running
without numba installed) keeps the interpreted numpy versions instead. The
interpreted originals stay reachable through ``PY_KERNELS`` so the benchmark
can time both paths in one process.

All kernels expect C-contiguous ``complex128`` arrays; the public wrappers in
:mod:`zenompf.linalg` take care of the conversion.
"""
import os
import types

import numpy as np

_FLAG = os.environ.get("ZENOMPF_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = _FLAG not in ("1", "true", "yes", "on")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    USE_NUMBA = False


# Higham (2005) scaling-and-squaring: max 1-norm for each diagonal Pade order.
_THETA = np.array([1.495585217958292e-2, 2.539398330063230e-1,
                   9.504178996162932e-1, 2.097847961257068e0,
                   5.371920351148152e0])
_PADE3 = np.array([120.0, 60.0, 12.0, 1.0])
_PADE5 = np.array([30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0])
_PADE7 = np.array([17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0,
                   1512.0, 56.0, 1.0])
_PADE9 = np.array([17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                   30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0])
_PADE13 = np.array([64764752532480000.0, 32382376266240000.0,
                    7771770303897600.0, 1187353796428800.0,
                    129060195264000.0, 10559470521600.0, 670442572800.0,
                    33522128640.0, 1323241920.0, 40840800.0, 960960.0,
                    16380.0, 182.0, 1.0])


def _norm1(a):
    n, m = a.shape
    best = 0.0
    for j in range(m):
        s = 0.0
        for i in range(n):
            s += abs(a[i, j])
        if s > best:
            best = s
    return best


def _pade_low(a, b):
    n = a.shape[0]
    ident = np.eye(n, dtype=np.complex128)
    a2 = a @ a
    m = b.shape[0] - 1
    u = b[1] * ident
    v = b[0] * ident
    power = ident
    for k in range(2, m + 1, 2):
        power = power @ a2
        u = u + b[k + 1] * power
        v = v + b[k] * power
    u = a @ u
    return np.linalg.solve(v - u, v + u)


def _pade13(a):
    n = a.shape[0]
    b = _PADE13
    ident = np.eye(n, dtype=np.complex128)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    return np.linalg.solve(v - u, v + u)


def _expm(a):
    """exp(a) by scaling and squaring with a diagonal Pade approximant."""
    nrm = _norm1(a)
    if nrm <= _THETA[0]:
        return _pade_low(a, _PADE3)
    if nrm <= _THETA[1]:
        return _pade_low(a, _PADE5)
    if nrm <= _THETA[2]:
        return _pade_low(a, _PADE7)
    if nrm <= _THETA[3]:
        return _pade_low(a, _PADE9)
    s = int(np.ceil(np.log2(nrm / _THETA[4])))
    if s < 0:
        s = 0
    r = np.ascontiguousarray(_pade13(a / 2.0 ** s))
    for _ in range(s):
        r = r @ r
    return r


def _matpow(a, n):
    """a**n by binary powering; never multiplies by the identity."""
    size = a.shape[0]
    if n == 0:
        return np.eye(size, dtype=np.complex128)
    result = np.empty_like(a)
    started = False
    base = a.copy()
    while True:
        if n & 1:
            if started:
                result = result @ base
            else:
                result = base.copy()
                started = True
        n >>= 1
        if n == 0:
            break
        base = base @ base
    return result


def _expm_scaled(a, scalars):
    """Stack of exp(s * a) for every s in ``scalars``."""
    n = a.shape[0]
    out = np.empty((scalars.shape[0], n, n), dtype=np.complex128)
    for k in range(scalars.shape[0]):
        out[k] = _expm(scalars[k] * a)
    return out


def _expm_stack(stack):
    out = np.empty_like(stack)
    for k in range(stack.shape[0]):
        out[k] = _expm(np.ascontiguousarray(stack[k]))
    return out


def _resolvent_trapezoid(m, nodes, weights):
    """Sum of w_k (z_k - m)^-1 over contour nodes.

    Returns the weighted sum and the largest 1-norm condition number seen.
    """
    n = m.shape[0]
    acc = np.zeros((n, n), dtype=np.complex128)
    worst = 0.0
    for k in range(nodes.shape[0]):
        shifted = -m.copy()
        for i in range(n):
            shifted[i, i] += nodes[k]
        inv = np.linalg.inv(shifted)
        cond = _norm1(shifted) * _norm1(inv)
        if not np.isfinite(cond):
            cond = np.inf
        if cond > worst:
            worst = cond
        acc += weights[k] * inv
    return acc, worst


def _nuclear_norms_vec(stack):
    return np.linalg.svd(stack, compute_uv=False).sum(axis=-1)


PY_KERNELS = {
    "expm": _expm,
    "matpow": _matpow,
    "expm_scaled": _expm_scaled,
    "expm_stack": _expm_stack,
    "resolvent_trapezoid": _resolvent_trapezoid,
    "nuclear_norms": _nuclear_norms_vec,
}


_JITTED = ("_norm1", "_pade_low", "_pade13", "_expm", "_matpow",
           "_expm_scaled", "_expm_stack", "_resolvent_trapezoid")


def _compile():
    # Clones share a private namespace in which every helper is already a
    # dispatcher; the module globals keep the interpreted originals.
    namespace = dict(globals())
    for name in _JITTED:
        fn = namespace[name]
        clone = types.FunctionType(fn.__code__, namespace, fn.__name__,
                                   fn.__defaults__, fn.__closure__)
        namespace[name] = numba.njit(cache=True)(clone)
    return {
        "expm": namespace["_expm"],
        "matpow": namespace["_matpow"],
        "expm_scaled": namespace["_expm_scaled"],
        "expm_stack": namespace["_expm_stack"],
        "resolvent_trapezoid": namespace["_resolvent_trapezoid"],
        # batched LAPACK through numpy; a jitted loop of small SVDs is slower
        "nuclear_norms": _nuclear_norms_vec,
    }


KERNELS = _compile() if USE_NUMBA else dict(PY_KERNELS)

expm = KERNELS["expm"]
matpow = KERNELS["matpow"]
expm_scaled = KERNELS["expm_scaled"]
expm_stack = KERNELS["expm_stack"]
resolvent_trapezoid = KERNELS["resolvent_trapezoid"]
nuclear_norms = KERNELS["nuclear_norms"]
