"""Array namespaces so map formulas run in float64 or in mpmath precision."""
from __future__ import annotations

from types import SimpleNamespace

import mpmath
import numpy as np

np_ns = SimpleNamespace(
    sin=np.sin, cos=np.cos, exp=np.exp, sqrt=np.sqrt, pi=np.pi, name="numpy"
)


class _MpPi:
    def __get__(self, obj, objtype=None):
        return mpmath.mpf(mpmath.pi)


class _MpNamespace:
    name = "mpmath"
    sin = staticmethod(np.frompyfunc(mpmath.sin, 1, 1))
    cos = staticmethod(np.frompyfunc(mpmath.cos, 1, 1))
    exp = staticmethod(np.frompyfunc(mpmath.exp, 1, 1))
    sqrt = staticmethod(np.frompyfunc(mpmath.sqrt, 1, 1))
    pi = _MpPi()


mp_ns = _MpNamespace()


def to_mp(x) -> np.ndarray:
    """Convert a float array to an object array of mpf (exact conversion)."""
    arr = np.asarray(x, dtype=float)
    out = np.empty(arr.shape, dtype=object)
    for idx, val in np.ndenumerate(arr):
        out[idx] = mpmath.mpf(val)
    return out


def to_float(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype == object:
        return np.vectorize(float, otypes=[float])(arr)
    return arr.astype(float)


def mp_solve(A, b) -> np.ndarray:
    """Solve A x = b for object arrays of mpf."""
    sol = mpmath.lu_solve(mpmath.matrix(A.tolist()), mpmath.matrix(list(b)))
    return np.array([sol[i] for i in range(len(b))], dtype=object)


def mp_norm(v) -> mpmath.mpf:
    return mpmath.sqrt(sum(x * x for x in np.ravel(v)))


def stack_last(parts) -> np.ndarray:
    """Stack broadcast-compatible components along a new last axis."""
    arrs = np.broadcast_arrays(*[np.asarray(p) for p in parts])
    return np.stack(arrs, axis=-1)


def matrix_field(rows) -> np.ndarray:
    """Build a ``(..., m, n)`` array from nested rows of broadcastable entries."""
    flat = [np.asarray(e) for row in rows for e in row]
    arrs = np.broadcast_arrays(*flat)
    m, n = len(rows), len(rows[0])
    out = np.stack(arrs, axis=-1)
    return out.reshape(out.shape[:-1] + (m, n))
