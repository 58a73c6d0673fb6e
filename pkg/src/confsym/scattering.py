"""Homoclinic channels, wave maps and the scattering map with its residual checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .dynamics import MapSystem
from .errors import (ArgumentError, ConvergenceError, DivergenceError, DomainError, NoIntersectionError,
                     TangencyError)
from .geometry import circle_diff, principal_angles

ANGLE_FLOOR = 1e-3
ENTRY_RADIUS = 1e-6
WAVE_RADIUS = 1e-4
N_CAP = 200
MAX_NEWTON = 50


def _require_model(sys: MapSystem):
    if sys.model is None:
        raise ArgumentError(f"system {sys.name!r} declares no invariant manifold")
    return sys.model


def _step(sys, z, sign):
    return sys.f(z) if sign > 0 else sys.finv(z)


def _dstep(sys, z, sign):
    return sys.jac(z) if sign > 0 else sys.jac_inv(z)


def _rows(sys, base, names: str) -> np.ndarray:
    t, s, u = sys.model.splitting(base)
    inv = np.linalg.inv(np.concatenate([t, s, u], axis=-1))
    kt, ks = t.shape[-1], s.shape[-1]
    blocks = {"t": inv[:kt], "s": inv[kt:kt + ks], "u": inv[kt + ks:]}
    return np.concatenate([blocks[n] for n in names], axis=0)


def _check_finite(z, k):
    if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > 1e12:
        raise DivergenceError(f"orbit diverged at step {k}", step=k)


def _orbit(sys, z, n, sign):
    pts = [np.asarray(z, dtype=float)]
    for k in range(n):
        pts.append(_step(sys, pts[-1], sign))
        _check_finite(pts[-1], k + 1)
    return pts


def entry_depth(sys: MapSystem, y, sign: int, radius: float = ENTRY_RADIUS, cap: int = N_CAP) -> int:
    """First ``n`` with ``f^{sign n}(y)`` within ``radius`` of the manifold."""
    model = _require_model(sys)
    z = np.asarray(y, dtype=float)
    for n in range(cap + 1):
        if model.distance(z) <= radius:
            return n
        z = _step(sys, z, sign)
        _check_finite(z, n + 1)
    raise ConvergenceError(f"orbit did not approach the manifold within {cap} steps", [])


# --------------------------------------------------------------------------
# homoclinic points


@dataclass
class HomoclinicPoint:
    point: np.ndarray
    n_plus: int
    n_minus: int
    residual: float
    transversality: float
    fiber_angle: float
    channel_sigma: float
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"point": self.point.tolist(), "n_plus": self.n_plus, "n_minus": self.n_minus,
                "residual": self.residual, "transversality": self.transversality,
                "fiber_angle": self.fiber_angle, "channel_sigma": self.channel_sigma}


def _gap(sys, z, n_plus, n_minus):
    """Expanding coefficients of ``f^{N+}(z)`` and contracting-for-``f^{-1}`` ones of ``f^{-N-}(z)``."""
    fwd = _orbit(sys, z, n_plus, 1)
    bwd = _orbit(sys, z, n_minus, -1)
    zp, zm = fwd[-1], bwd[-1]
    bp, bm = sys.model.project(zp), sys.model.project(zm)
    ru, rs = _rows(sys, bp, "u"), _rows(sys, bm, "s")
    g = np.concatenate([ru @ circle_diff(zp, bp, sys.periodic), rs @ circle_diff(zm, bm, sys.periodic)])
    mp_ = np.eye(sys.dim)
    for p in fwd[:-1]:
        mp_ = sys.jac(p) @ mp_
    mm = np.eye(sys.dim)
    for p in bwd[:-1]:
        mm = sys.jac_inv(p) @ mm
    jac = np.concatenate([ru @ mp_, rs @ mm], axis=0)
    return g, jac, mp_, mm, bp, bm


def _subspace(m, basis):
    q, _ = np.linalg.qr(m @ basis)
    return q


def _certificates(sys, z, n_plus, n_minus):
    model = sys.model
    _, _, mp_, mm, bp, bm = _gap(sys, z, n_plus, n_minus)
    tp, sp, _ = model.splitting(bp)
    tm, _, um = model.splitting(bm)
    inv_p, inv_m = np.linalg.inv(mp_), np.linalg.inv(mm)
    ws = _subspace(inv_p, np.concatenate([tp, sp], axis=-1))
    wu = _subspace(inv_m, np.concatenate([tm, um], axis=-1))
    ns, nu = null_space(ws.T), null_space(wu.T)
    if ns.size and nu.size:
        trans = float(np.min(principal_angles(ns, nu)))
    else:
        trans = math.pi / 2
    combo = null_space(np.concatenate([ws, -wu], axis=1))
    gamma = ws @ combo[: ws.shape[1]] if combo.size else np.zeros((sys.dim, 0))
    if gamma.shape[1]:
        gamma, _ = np.linalg.qr(gamma)
    fib_s = _subspace(inv_p, sp)
    fib_u = _subspace(inv_m, um)
    fiber_angle = math.pi / 2
    if gamma.shape[1]:
        for fib in (fib_s, fib_u):
            for j in range(fib.shape[1]):
                fiber_angle = min(fiber_angle, _vector_plane_angle(fib[:, j], gamma))
    sigma = math.nan
    if sys.omega is not None and gamma.shape[1]:
        om = sys.omega.matrix(z)
        restricted = gamma.T @ om @ gamma
        sigma = float(np.min(np.linalg.svd(restricted, compute_uv=False)))
    return trans, fiber_angle, sigma, gamma


def _vector_plane_angle(v, plane) -> float:
    v = v / np.linalg.norm(v)
    inside = plane @ (plane.T @ v)
    return float(math.asin(min(1.0, np.linalg.norm(v - inside))))


def _newton_section(sys, z, n_plus, n_minus, normal, tol, max_iter):
    """Newton in the normal coordinates; the residual is the size of the position correction."""
    history: list[float] = []
    sel = np.eye(sys.dim)[:, normal]
    for _ in range(max_iter):
        try:
            g, jac, *_ = _gap(sys, z, n_plus, n_minus)
        except DivergenceError as exc:
            raise NoIntersectionError(f"Newton iterate diverged: {exc}", history) from exc
        step = np.linalg.lstsq(jac @ sel, g, rcond=None)[0]
        res = float(np.linalg.norm(step))
        history.append(res)
        stalled = len(history) > 2 and res >= 0.5 * history[-2]
        if res <= 1e-15 * (1 + np.linalg.norm(z)) or (res <= tol and stalled):
            return z, history
        if stalled and len(history) > 8 and min(history) > tol:
            raise NoIntersectionError(f"Newton stagnated at residual {min(history):.3e}", history)
        z = z.copy()
        z[normal] -= step
    if min(history) <= tol:
        return z, history
    raise NoIntersectionError(f"Newton did not converge in {max_iter} steps; best residual "
                              f"{min(history):.3e}", history)


def _closest_depth(sys, z, sign, radius, cap=60):
    """Entry depth into the ``radius``-tube, or the depth of closest approach if never entered."""
    dists = []
    for n in range(cap + 1):
        d = float(sys.model.distance(z))
        if d <= radius:
            return n, True
        dists.append(d)
        z = _step(sys, z, sign)
        if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > 1e6:
            break
    return int(np.argmin(dists)), False


def find_homoclinic(sys: MapSystem, seed, n_plus: int | None = None, n_minus: int | None = None,
                    tol: float = 1e-10, floor: float = ANGLE_FLOOR, radius: float = ENTRY_RADIUS,
                    max_iter: int = MAX_NEWTON, max_stages: int = 6) -> HomoclinicPoint:
    """Point of ``W^u`` and ``W^s`` of the manifold in the section through ``seed``.

    The section fixes the manifold coordinates of ``seed``; Newton acts on the normal
    coordinates and zeroes the expanding coefficients of ``f^{N+}`` and of ``f^{-N-}``.
    Without explicit depths, each stage uses the depths of closest approach of the
    current iterate until both orbits enter the ``radius``-tube.
    """
    model = _require_model(sys)
    z = np.asarray(seed, dtype=float).copy()
    normal = list(model.normal_idx)
    if not normal:
        raise ArgumentError("the manifold has no normal directions")
    history: list[float] = []
    for _ in range(max_stages):
        if n_plus is not None and n_minus is not None:
            np_, nm_, final = n_plus, n_minus, True
        else:
            np_, in_p = (n_plus, True) if n_plus is not None else _closest_depth(sys, z, 1, radius)
            nm_, in_m = (n_minus, True) if n_minus is not None else _closest_depth(sys, z, -1, radius)
            final = in_p and in_m
        if np_ == 0 or nm_ == 0:
            raise NoIntersectionError("seed lies on the invariant manifold or its orbit never approaches it",
                                      history)
        z, hist = _newton_section(sys, z, np_, nm_, normal, tol if final else 1e-8, max_iter)
        history += hist
        if final:
            break
    else:
        raise NoIntersectionError(f"orbits did not enter the {radius:g}-tube after {max_stages} stages", history)
    if model.distance(z) < 1e-3:
        raise NoIntersectionError("Newton converged onto the invariant manifold itself", history)
    trans, fang, sigma, _ = _certificates(sys, z, np_, nm_)
    hp = HomoclinicPoint(z, np_, nm_, history[-1], trans, fang, sigma, history)
    if trans < floor or fang < floor:
        raise TangencyError(f"transversality certificate {min(trans, fang):.3e} below floor {floor}")
    return hp


# --------------------------------------------------------------------------
# wave maps


@dataclass
class WaveMapResult:
    footpoint: np.ndarray
    gap: float
    depth: int
    entry: int
    gaps: list

    def to_dict(self) -> dict:
        return {"footpoint": self.footpoint.tolist(), "gap": self.gap, "depth": self.depth,
                "entry": self.entry, "gaps": self.gaps}


def _pull_back(sys, x, n, sign):
    """``f|_Lambda^{-sign n}(x)`` with re-projection onto the manifold after each step."""
    model = sys.model
    for _ in range(n):
        x = sys.reduce(model.project(_step(sys, x, -sign)))
    return x


def wave_map(sys: MapSystem, y, sign: int = 1, tol: float = 1e-12, radius: float = WAVE_RADIUS,
             n_cap: int = N_CAP, pullback: bool = True) -> WaveMapResult:
    """Footpoint ``Omega_sign(y)``: iterate into the tube, project, pull back, and Cauchy-test in depth.

    ``pullback=False`` is the ablation that returns the projection of the entry iterate.
    """
    model = _require_model(sys)
    if sign not in (1, -1):
        raise ArgumentError("sign must be +1 or -1")
    z = sys.reduce(np.asarray(y, dtype=float))
    orbit = [z]
    entry = None
    for n in range(n_cap + 1):
        if model.distance(orbit[-1]) <= radius:
            entry = n
            break
        if n == n_cap:
            break
        orbit.append(sys.reduce(_step(sys, orbit[-1], sign)))
        _check_finite(orbit[-1], n + 1)
    if entry is None:
        raise ConvergenceError(f"orbit did not enter the {radius:g}-tube within {n_cap} steps", [])
    if not pullback:
        return WaveMapResult(_nearest(sys, orbit[entry]), math.nan, entry, entry, [])
    best, best_gap, prev = None, math.inf, None
    gaps: list[float] = []
    n = entry
    while n <= n_cap:
        while len(orbit) <= n:
            orbit.append(sys.reduce(_step(sys, orbit[-1], sign)))
            _check_finite(orbit[-1], len(orbit) - 1)
        if n > entry and model.distance(orbit[n]) > radius:
            break
        cand = _pull_back(sys, model.project(orbit[n]), n, sign)
        if prev is not None:
            gap = float(np.linalg.norm(circle_diff(cand, prev, sys.periodic)))
            gaps.append(gap)
            if gap < best_gap:
                best, best_gap = cand, gap
            if gap == 0 or (gap <= tol and len(gaps) > 1 and gap >= gaps[-2]):
                break
            if best_gap <= tol and gap > 1e3 * max(best_gap, 1e-300):
                break
        prev = cand
        n += 1
    if best is None or best_gap > tol:
        raise ConvergenceError(f"wave map not Cauchy within {tol:g} by depth {n_cap}", gaps)
    return WaveMapResult(best, best_gap, n, entry, gaps)


def _nearest(sys, z):
    """Nearest point of a coordinate manifold (normal coordinates dropped)."""
    model = sys.model
    out = model.embed(model.center(z))
    return sys.reduce(out)


def equivariance_residual(sys: MapSystem, y, sign: int = 1, tol: float = 1e-12) -> float:
    """``|Omega(f(y)) - f(Omega(y))|`` on the manifold."""
    a = wave_map(sys, sys.f(y), sign, tol).footpoint
    b = sys.reduce(sys.model.project(sys.f(wave_map(sys, y, sign, tol).footpoint)))
    return float(np.linalg.norm(circle_diff(a, b, sys.periodic)))


# --------------------------------------------------------------------------
# channels and the scattering map


class Channel:
    """Homoclinic channel parameterized by manifold coordinates near a seed point.

    Points are found by ``find_homoclinic`` in the section through each parameter value
    with depths fixed by the seed, continued from the nearest cached solution.
    """

    def __init__(self, sys: MapSystem, seed: HomoclinicPoint, half_width=0.2, tol: float = 1e-10):
        self.sys = sys
        self.seed = seed
        self.model = _require_model(sys)
        self.center0 = self.model.center(seed.point)
        self.half_width = np.broadcast_to(np.asarray(half_width, dtype=float), self.center0.shape).copy()
        self.tol = tol
        self._cache: dict[tuple, np.ndarray] = {tuple(self.center0): seed.point.copy()}
        self._jac_minus = None
        self._offset = None

    def contains(self, c) -> bool:
        return bool(np.all(np.abs(np.asarray(c, dtype=float) - self.center0) <= self.half_width))

    def point(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if not self.contains(c):
            raise DomainError(f"parameter {c.tolist()} outside the channel patch")
        key = tuple(c)
        if key in self._cache:
            return self._cache[key]
        near = min(self._cache, key=lambda k: float(np.sum((np.asarray(k) - c) ** 2)))
        z = self._predict(self._cache[near], c)
        normal = list(self.model.normal_idx)
        n_p, n_m = self.seed.n_plus, self.seed.n_minus
        for back in (6, 3, 0):
            z, _ = _newton_section(self.sys, z, max(1, n_p - back), max(1, n_m - back), normal,
                                   self.tol if back == 0 else 1e-8, MAX_NEWTON)
        for sign, n in ((1, n_p), (-1, n_m)):
            if self.model.distance(_orbit(self.sys, z, n, sign)[-1]) > 10 * ENTRY_RADIUS:
                raise NoIntersectionError(f"continuation to {c.tolist()} left the channel", [])
        self._cache[key] = z
        return z

    def _predict(self, z0, c):
        """Tangent predictor: move the normal coordinates so the linearized gap stays zero."""
        cidx, normal = list(self.model.center_idx), list(self.model.normal_idx)
        _, jac, *_ = _gap(self.sys, z0, self.seed.n_plus, self.seed.n_minus)
        dc = circle_diff(c[None, :], z0[cidx][None, :], [self.sys.periodic[i] for i in cidx])[0]
        z = z0.copy()
        z[cidx] = c
        z[normal] -= np.linalg.lstsq(jac[:, normal], jac[:, cidx] @ dc, rcond=None)[0]
        return z

    def homoclinic(self, c) -> HomoclinicPoint:
        z = self.point(c)
        trans, fang, sigma, _ = _certificates(self.sys, z, self.seed.n_plus, self.seed.n_minus)
        return HomoclinicPoint(z, self.seed.n_plus, self.seed.n_minus, 0.0, trans, fang, sigma)


@dataclass
class ScatteringSample:
    x_minus: np.ndarray
    y: np.ndarray
    x_plus: np.ndarray
    param: np.ndarray
    n_minus: int
    n_plus: int
    err_minus: float
    err_plus: float
    newton_residual: float

    def to_dict(self) -> dict:
        return {"x_minus": self.x_minus.tolist(), "y": self.y.tolist(), "x_plus": self.x_plus.tolist(),
                "param": self.param.tolist(), "n_minus": self.n_minus, "n_plus": self.n_plus,
                "err_minus": self.err_minus, "err_plus": self.err_plus, "newton_residual": self.newton_residual}


def _center_diff(sys, a, b):
    model = sys.model
    return circle_diff(a, b, sys.periodic)[..., list(model.center_idx)]


def _omega_minus(channel: Channel, c, tol, pullback=True):
    sys = channel.sys
    return wave_map(sys, channel.point(c), -1, tol, pullback=pullback)


def scattering_eval(sys: MapSystem, x_minus, channel: Channel, tol: float = 1e-9, pullback: bool = True,
                    max_iter: int = 30) -> ScatteringSample:
    """``S(x_-) = Omega_+(y)`` with ``y`` in the channel solving ``Omega_-(y) = x_-`` by chord Newton."""
    model = _require_model(sys)
    x_minus = sys.reduce(model.project(np.asarray(x_minus, dtype=float)))
    wave_tol = min(tol, 1e-12) if pullback else tol
    c0 = channel.center0
    if channel._jac_minus is None or channel._offset is None or channel._offset[0] != pullback:
        base = _omega_minus(channel, c0, wave_tol, pullback).footpoint
        k = len(c0)
        h = 1e-6
        jac = np.zeros((k, k))
        for j in range(k):
            e = np.zeros(k)
            e[j] = h
            plus = _omega_minus(channel, c0 + e, wave_tol, pullback).footpoint
            minus = _omega_minus(channel, c0 - e, wave_tol, pullback).footpoint
            jac[:, j] = _center_diff(sys, plus, minus) / (2 * h)
        channel._jac_minus = jac
        channel._offset = (pullback, model.center(base) - c0)
    jac = channel._jac_minus
    c = model.center(x_minus) - channel._offset[1]
    c = c0 + circle_diff(c[None, :], c0[None, :], [sys.periodic[i] for i in model.center_idx])[0]
    history = []
    res_minus = None
    for _ in range(max_iter):
        if not channel.contains(c):
            raise DomainError(f"x_- = {x_minus.tolist()} is outside the image of the channel patch")
        res_minus = _omega_minus(channel, c, wave_tol, pullback)
        r = _center_diff(sys, res_minus.footpoint, x_minus)
        nr = float(np.linalg.norm(r))
        history.append(nr)
        if nr <= 0.01 * tol or (len(history) > 2 and nr >= 0.9 * history[-2] and nr <= tol):
            break
        c = c - np.linalg.solve(jac, r)
    else:
        if history[-1] > tol:
            raise ConvergenceError("inverse wave map did not converge", history)
    y = channel.point(c)
    res_plus = wave_map(sys, y, 1, wave_tol, pullback=pullback)
    return ScatteringSample(x_minus, y, res_plus.footpoint, c, res_minus.depth, res_plus.depth,
                            res_minus.gap, res_plus.gap, history[-1])


def scattering_map(sys: MapSystem, channel: Channel, tol: float = 1e-9, pullback: bool = True):
    """Callable ``x_- -> x_+`` on manifold points."""
    return lambda x: scattering_eval(sys, x, channel, tol, pullback).x_plus


def _restricted_omega(sys, x):
    c = list(sys.model.center_idx)
    return sys.omega.matrix(x)[np.ix_(c, c)]


def scattering_derivative(sys: MapSystem, x, channel: Channel, h: float = 1e-5, tol: float = 1e-9,
                          pullback: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference derivative of ``S`` in manifold coordinates, and ``S(x)``."""
    model = sys.model
    x = np.asarray(x, dtype=float)
    k = len(model.center_idx)
    ds = np.zeros((k, k))
    for j in range(k):
        e = np.zeros(sys.dim)
        e[model.center_idx[j]] = h
        a = scattering_eval(sys, x + e, channel, tol, pullback).x_plus
        b = scattering_eval(sys, x - e, channel, tol, pullback).x_plus
        ds[:, j] = _center_diff(sys, a, b) / (2 * h)
    return ds, scattering_eval(sys, x, channel, tol, pullback).x_plus


def symplecticity_residual_S(sys: MapSystem, samples, channel: Channel, tol: float = 1e-9, h: float = 1e-5,
                             pullback: bool = True, skip_outside: bool = False) -> dict:
    """``max |DS^T J(S x) DS - J(x)|`` for the form restricted to the manifold.

    With ``skip_outside`` samples whose stencil leaves the channel image are dropped and counted.
    """
    if sys.omega is None:
        raise ArgumentError(f"system {sys.name!r} declares no two-form")
    per, skipped = [], 0
    for x in np.atleast_2d(samples):
        try:
            ds, sx = scattering_derivative(sys, x, channel, h, tol, pullback)
        except DomainError:
            if not skip_outside:
                raise
            skipped += 1
            continue
        lhs = ds.T @ _restricted_omega(sys, sx) @ ds
        per.append(float(np.max(np.abs(lhs - _restricted_omega(sys, x)))))
    if not per:
        raise DomainError("no sample lies in the channel image")
    return {"residual": max(per), "per_sample": per, "h": h, "tol": tol, "pullback": pullback,
            "skipped": skipped}


def displacement_field(sys: MapSystem, samples, channel: Channel, tol: float = 1e-9) -> list[ScatteringSample]:
    return [scattering_eval(sys, x, channel, tol) for x in np.atleast_2d(samples)]


def scattering_equivariance(sys: MapSystem, x, channel: Channel, tol: float = 1e-9) -> float:
    """``|S_{f(Gamma)}(f x) - f(S_Gamma x)|`` with the image channel built from ``f`` of the seed."""
    model = sys.model
    seed_img = find_homoclinic(sys, sys.f(channel.seed.point), channel.seed.n_plus - 1, channel.seed.n_minus + 1,
                               floor=0.0)
    img = Channel(sys, seed_img, channel.half_width * 1.5, channel.tol)
    fx = sys.reduce(model.project(sys.f(x)))
    a = scattering_eval(sys, fx, img, tol).x_plus
    b = sys.reduce(model.project(sys.f(scattering_eval(sys, x, channel, tol).x_plus)))
    return float(np.linalg.norm(circle_diff(a, b, sys.periodic)))


# --------------------------------------------------------------------------
# wave-map pullback, kernel alignment, channel symplecticity


def _stable_newton(sys, y, depth, u):
    model = sys.model
    for _ in range(MAX_NEWTON):
        fwd = _orbit(sys, y, depth, 1)
        bp = model.project(fwd[-1])
        ru = _rows(sys, bp, "u")
        g = ru @ circle_diff(fwd[-1], bp, sys.periodic)
        m = np.eye(sys.dim)
        for p in fwd[:-1]:
            m = sys.jac(p) @ m
        step = np.linalg.lstsq(ru @ m @ u, g, rcond=None)[0]
        y = y - u @ step
        if np.linalg.norm(step) <= 1e-16 * (1 + np.linalg.norm(y)):
            break
    return y


def stable_patch_point(sys: MapSystem, c, s: float, depth: int | None = None, column: int = 0) -> np.ndarray:
    """Point of the stable manifold above ``c``: ``embed(c) + s e_s`` corrected along ``E^u``.

    Without an explicit depth the horizon doubles from 2 until the orbit enters the entry tube.
    """
    model = _require_model(sys)
    base = model.embed(np.asarray(c, dtype=float))
    t, st, u = model.splitting(base)
    y = base + s * st[:, column]
    if depth is not None:
        return _stable_newton(sys, y, depth, u)
    n = 2
    while n <= N_CAP:
        y = _stable_newton(sys, y, n, u)
        z = _orbit(sys, y, n, 1)[-1]
        if np.linalg.norm(circle_diff(z, model.project(z), sys.periodic)) < ENTRY_RADIUS:
            return y
        n *= 2
    raise ConvergenceError(f"stable patch point did not enter the tube within {N_CAP} steps", [])


def wavemap_pullback_residual(sys: MapSystem, params, s: float = 1e-2, h: float = 1e-5,
                              tol: float = 1e-12) -> float:
    """``max |omega(Omega a)(DOmega u, DOmega v) - omega(a)(u, v)|`` over a stable patch.

    The patch is ``(c, t) -> stable_patch_point(c, t)``; tangents and ``DOmega_+`` come from
    central differences in the parameters.
    """
    model = _require_model(sys)
    if sys.omega is None:
        raise ArgumentError(f"system {sys.name!r} declares no two-form")
    worst = 0.0
    for c in np.atleast_2d(params):
        depth = max(1, entry_depth(sys, stable_patch_point(sys, c, s), 1, ENTRY_RADIUS))
        k = len(c) + 1
        p0 = np.concatenate([c, [s]])

        def point(q):
            return stable_patch_point(sys, q[:-1], q[-1], depth)

        a = point(p0)
        foot = wave_map(sys, a, 1, tol).footpoint
        dy, dom = [], []
        for j in range(k):
            e = np.zeros(k)
            e[j] = h
            ya, yb = point(p0 + e), point(p0 - e)
            dy.append(circle_diff(ya, yb, sys.periodic) / (2 * h))
            fa = wave_map(sys, ya, 1, tol).footpoint
            fb = wave_map(sys, yb, 1, tol).footpoint
            dom.append(circle_diff(fa, fb, sys.periodic) / (2 * h))
        for i in range(k):
            for j in range(i + 1, k):
                lhs = float(sys.omega(foot, dom[i], dom[j]))
                rhs = float(sys.omega(a, dy[i], dy[j]))
                worst = max(worst, abs(lhs - rhs))
    return worst


def kernel_alignment(sys: MapSystem, c, s: float = 1e-2, h: float = 1e-5, depth: int = 8) -> dict:
    """Kernel of the form on the tangent space of the stable manifold versus the fiber tangent."""
    model = _require_model(sys)
    c = np.asarray(c, dtype=float)
    k = len(c) + 1
    p0 = np.concatenate([c, [s]])
    dd = max(1, entry_depth(sys, stable_patch_point(sys, c, s), 1, ENTRY_RADIUS))

    def point(q):
        return stable_patch_point(sys, q[:-1], q[-1], dd)

    y = point(p0)
    tang = []
    for j in range(k):
        e = np.zeros(k)
        e[j] = h
        tang.append(circle_diff(point(p0 + e), point(p0 - e), sys.periodic) / (2 * h))
    basis, _ = np.linalg.qr(np.array(tang).T)
    restricted = basis.T @ sys.omega.matrix(y) @ basis
    sv = np.linalg.svd(restricted)
    rank = int(np.sum(sv[1] > 1e-6 * max(1.0, sv[1][0])))
    kernel = basis @ sv[2][-1]
    fwd = _orbit(sys, y, depth, 1)
    xn = model.project(fwd[-1])
    v = model.stable(xn)[:, 0]
    for p in reversed(fwd[:-1]):
        v = np.linalg.solve(sys.jac(p), v)
        v = v / np.linalg.norm(v)
    angle = float(np.min(principal_angles(kernel, v)))
    return {"kernel_dim": k - rank, "angle": angle, "singular_values": sv[1].tolist()}


def channel_symplecticity(sys: MapSystem, channel: Channel, params) -> float:
    """Smallest singular value of the form restricted to the channel tangent over sample parameters."""
    worst = math.inf
    for c in np.atleast_2d(params):
        worst = min(worst, channel.homoclinic(c).channel_sigma)
    return worst


def coupled_channel(sys: MapSystem, center=(0.0, 0.25), half_width: float = 0.2) -> Channel:
    """Channel of a coupled system built from the homoclinic point of its planar saddle factor."""
    from .dynamics import registry_get  # noqa: PLC0415
    from .manifolds import planar_homoclinic_seed  # noqa: PLC0415

    if sys.name != "coupled_test":
        raise ArgumentError("planar-seed channels are built for coupled_test only")
    planar = registry_get("henon", eta=sys.params["eta"], c=sys.params["c"], centered=True)
    q = planar_homoclinic_seed(planar)
    seed = find_homoclinic(sys, np.array([center[0], center[1], q[0], q[1]]))
    return Channel(sys, seed, half_width)
