"""Extended-precision orbits and stable/unstable refinement of points.

Double-precision orbits near a saddle-type manifold lose the stable
component after about ``16 / log10(expansion ratio)`` steps.  These helpers
refine a point in mpmath so that its long orbit is genuinely asymptotic, and
return the orbit at the working precision.
"""
from __future__ import annotations

import math

import mpmath
import numpy as np

from ._backend import to_float, to_mp
from .errors import ConvergenceError

DEFAULT_RATIO = 100.0


def working_dps(sys, steps: int, margin: int = 30) -> int:
    """Digits needed so a stable component survives ``steps`` iterations."""
    r = sys.rates or {}
    lp, lm = r.get("lambda_plus"), r.get("lambda_minus")
    ratio = 1.0 / (lp * lm) if lp and lm else DEFAULT_RATIO
    return margin + int(math.ceil(steps * math.log10(max(ratio, 10.0))))


def supports_mp(sys) -> bool:
    if sys.jacobian is None or sys.model is None:
        return False
    return sys.model.embed_fn is None or not sys.model.center_idx


def mp_step(sys, z, sign: int):
    return sys.f_mp(z) if sign > 0 else sys.finv_mp(z)


def mp_jac(sys, z, sign: int):
    """Derivative of ``f`` (sign +1) or ``f^{-1}`` (sign -1) at ``z``, as an mpmath matrix."""
    if sign > 0:
        return mpmath.matrix(sys.jac_mp(z).tolist())
    return mpmath.matrix(sys.jac_mp(sys.finv_mp(z)).tolist()) ** -1


def mp_orbit(sys, z, n: int, sign: int = 1) -> list:
    pts = [np.asarray(z, dtype=object)]
    for _ in range(n):
        pts.append(mp_step(sys, pts[-1], sign))
    return pts


def _mp_vec(v) -> mpmath.matrix:
    return mpmath.matrix([mpmath.mpf(x) if not isinstance(x, mpmath.mpf) else x for x in np.ravel(v)])


def _rows(sys, base_float, keep: tuple[str, ...]) -> np.ndarray:
    """Rows of the inverse splitting matrix selecting the named components at ``base``."""
    t, s, u = sys.model.splitting(base_float)
    basis = np.concatenate([t, s, u], axis=-1)
    inv = np.linalg.inv(basis)
    kt, ks = t.shape[-1], s.shape[-1]
    blocks = {"t": inv[:kt], "s": inv[kt:kt + ks], "u": inv[kt + ks:]}
    return np.concatenate([blocks[k] for k in keep], axis=0)


def _basis(sys, base_float, names: tuple[str, ...]) -> np.ndarray:
    t, s, u = sys.model.splitting(base_float)
    blocks = {"t": t, "s": s, "u": u}
    return np.concatenate([blocks[k] for k in names], axis=-1)


def mp_project(sys, z):
    """Projection onto a coordinate manifold in extended precision (drop normal coordinates)."""
    out = np.array([mpmath.mpf(0)] * sys.dim, dtype=object)
    base = sys.model.embed(np.zeros(len(sys.model.center_idx)))
    for i in range(sys.dim):
        out[i] = mpmath.mpf(base[i])
    for i in sys.model.center_idx:
        out[i] = z[i]
    return out


def refine(sys, y, steps: int, side: str = "s", mode: str = "fiber", x=None, dps: int | None = None,
           max_iter: int = 30):
    """Newton refinement in mpmath so that ``y`` lies on a stable (``side='s'``) or unstable object.

    ``mode='fiber'``: the orbit of ``y`` shadows that of ``x`` (strong fiber of ``x``); the
    non-contracting components of ``f^N(y) - f^N(x)`` are zeroed.  ``mode='manifold'``: only
    the expanding component relative to the manifold is zeroed.  The horizon is reached by
    doubling from a short one so each Newton solve starts inside its basin.
    Returns ``(y_mp, dps)``.
    """
    dps = dps or working_dps(sys, steps)
    stages = []
    n = min(steps, 6)
    while n < steps:
        stages.append(n)
        n *= 2
    stages.append(steps)
    with mpmath.workdps(dps):
        y_mp = to_mp(y)
        for n in stages:
            y_mp = _refine_stage(sys, y_mp, y, n, side, mode, x, dps, max_iter)
    return y_mp, dps


def _refine_stage(sys, y0, y_float, steps, side, mode, x, dps, max_iter):
    sign = 1 if side == "s" else -1
    expand = "u" if side == "s" else "s"
    if mode == "fiber":
        free = ("t", expand)
        xn = mp_orbit(sys, to_mp(x), steps, sign)[-1]
        rows = _rows(sys, to_float(xn), free)
        b = _basis(sys, np.asarray(x, dtype=float), free)
    else:
        free = (expand,)
        b = _basis(sys, sys.model.project(np.asarray(y_float, dtype=float)), free)
    b_mp = mpmath.matrix(b.tolist())
    coef = mpmath.matrix([0] * b.shape[1])
    tol = mpmath.mpf(10) ** (-(dps - 12))
    history = []
    for _ in range(max_iter):
        yc = y0 + np.array([sum(b_mp[i, k] * coef[k] for k in range(b.shape[1])) for i in range(sys.dim)],
                           dtype=object)
        z = yc
        m = mpmath.eye(sys.dim)
        for _ in range(steps):
            m = mp_jac(sys, z, sign) * m
            z = mp_step(sys, z, sign)
        if mode == "fiber":
            diff = _mp_vec(z) - _mp_vec(xn)
            r_mp = mpmath.matrix(rows.tolist())
        else:
            r_mp = mpmath.matrix(_rows(sys, sys.model.project(to_float(z)), free).tolist())
            diff = _mp_vec(z) - _mp_vec(mp_project(sys, z))
        res = r_mp * diff
        nres = mpmath.norm(res)
        history.append(float(nres))
        stalled = len(history) > 1 and nres >= 0.5 * history[-2] and nres < mpmath.mpf(10) ** (-dps // 2)
        if nres < tol or stalled:
            return yc
        if not mpmath.isfinite(nres):
            break
        coef = coef - mpmath.lu_solve(r_mp * m * b_mp, res)
    raise ConvergenceError("extended-precision refinement did not converge", history)
