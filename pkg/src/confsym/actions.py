"""Primitive functions of wave and scattering maps, gauges and the discounted variational check.

Orientation: ``P_+(y)`` and ``P_-(y)`` are integrals of the action form along the strong
fiber from the footpoint to ``y``.  Iterating ``f^* alpha = eta alpha + dP`` along the
path gives, for every ``N``,

    P_+(y) = eta^-N int_{f^N gamma} alpha + sum_{j<N} eta^-(j+1) [P(f^j Omega_+ y) - P(f^j y)]
    P_-(y) = eta^N int_{f^-N gamma} alpha + sum_{1<=j<=N} eta^(j-1) [P(f^-j y) - P(f^-j Omega_- y)]

Orbits and path nodes are carried in extended precision so the identity can be checked
far past the double-precision shadowing horizon.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from ._backend import to_float
from ._shadow import mp_orbit, mp_project, refine, supports_mp
from .dynamics import MapSystem, iterate
from .errors import ArgumentError, ConfigurationError, ContractViolation, TwistError
from .geometry import ActionForm, GaugeFunction, ScalarField, circle_diff, gauge_shift_primitive
from .scattering import ENTRY_RADIUS, Channel, _require_model, entry_depth, scattering_derivative, scattering_eval

PATH_LEVELS = (4, 5, 6, 7)
SERIES_TAIL = 8
QUAD_TOL = 1e-11


# --------------------------------------------------------------------------
# forms with an optional gauge


@dataclass(frozen=True)
class GaugedAction:
    """Action form ``alpha + dG`` with its primitive ``P + G o f - eta G``.

    Path integrals add ``G(end) - G(start)`` exactly instead of differentiating ``G``.
    """

    alpha: ActionForm
    primitive: ScalarField
    gauge: ScalarField | None = None

    @classmethod
    def of(cls, sys: MapSystem, alpha=None, primitive=None, gauge=None) -> "GaugedAction":
        alpha = alpha if alpha is not None else sys.alpha
        primitive = primitive if primitive is not None else sys.primitive
        if alpha is None or primitive is None:
            raise ArgumentError(f"system {sys.name!r} needs an action form and a primitive")
        return cls(alpha, primitive, gauge)

    def prim(self, sys: MapSystem) -> ScalarField:
        return self.primitive if self.gauge is None else gauge_shift_primitive(self.primitive, self.gauge, sys)

    def endpoint_term(self, start: np.ndarray, end: np.ndarray) -> float:
        if self.gauge is None:
            return 0.0
        return float(self.gauge(end) - self.gauge(start))


def _chord_sum(alpha: ActionForm, nodes: list, stride: int) -> float:
    """Midpoint-chord rule along ``nodes[::stride]``; differences are taken before rounding."""
    pts = nodes[::stride]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        seg = to_float(b - a)
        mid = to_float((a + b) / 2)
        total += float(np.dot(alpha(mid), seg))
    return total


def path_integral(alpha: ActionForm, nodes: list) -> tuple[float, float]:
    """Romberg extrapolation of chord sums over ``2^k + 1`` nested nodes; returns value and error."""
    k = int(round(math.log2(len(nodes) - 1)))
    if 2**k + 1 != len(nodes):
        raise ArgumentError("path integration needs 2^k + 1 nodes")
    levels = [_chord_sum(alpha, nodes, 2 ** (k - j)) for j in range(2, k + 1)]
    table = [levels]
    for m in range(1, len(levels)):
        prev = table[-1]
        table.append([(4**m * prev[i + 1] - prev[i]) / (4**m - 1) for i in range(len(prev) - 1)])
    best = table[-1][-1]
    err = abs(best - table[-2][-1]) if len(table) > 1 else math.inf
    return best, err


# --------------------------------------------------------------------------
# the series along one wave map


@dataclass
class PrimitiveSeries:
    sign: int
    y: np.ndarray
    footpoint: np.ndarray
    horizon: int
    n_values: list[int]
    boundary: list[float]
    partial_sum: list[float]
    quad_error: list[float]
    value: float
    terms: list[float] = field(default_factory=list)

    @property
    def values(self) -> list[float]:
        return [b + s for b, s in zip(self.boundary, self.partial_sum)]

    @property
    def spread(self) -> float:
        v = self.values
        return max(v) - min(v) if v else 0.0

    def converged(self, tol: float = 1e-8) -> bool:
        return self.spread <= tol

    def csv_rows(self) -> list[list]:
        return [[n, b, s, b + s] for n, b, s in zip(self.n_values, self.boundary, self.partial_sum)]

    def to_dict(self) -> dict:
        return {"sign": self.sign, "y": self.y.tolist(), "footpoint": self.footpoint.tolist(),
                "horizon": self.horizon, "value": self.value, "spread": self.spread,
                "table": [dict(zip(("N", "boundary", "partial_sum", "value"), r)) for r in self.csv_rows()],
                "quad_error": self.quad_error}


@dataclass
class _Orbits:
    sign: int
    horizon: int
    dps: int
    y: list
    foot: list


def _orbits(sys: MapSystem, y, sign: int, horizon: int) -> _Orbits:
    """Extended-precision orbit of ``y`` refined onto the stable (sign +1) or unstable manifold and of its footpoint."""
    side = "s" if sign > 0 else "u"
    y_mp, dps = refine(sys, y, horizon, side=side, mode="manifold")
    with mpmath.workdps(dps):
        orb = mp_orbit(sys, y_mp, horizon, sign)
        foot = mp_orbit(sys, mp_project(sys, orb[-1]), horizon, -sign)[::-1]
    return _Orbits(sign, horizon, dps, orb, foot)


def _default_horizon(sys: MapSystem, y, sign: int, n_max: int) -> int:
    return max(n_max, entry_depth(sys, y, sign, ENTRY_RADIUS) + SERIES_TAIL)


def _on_manifold(sys, y) -> bool:
    model = sys.model
    return float(np.linalg.norm(circle_diff(y, model.project(y), sys.periodic))) == 0.0


def _series_terms(sys, orbits: _Orbits, action: GaugedAction) -> list[float]:
    """Term ``j`` of the + series (``j = 0..M-1``) or of the - series (``j = 1..M``)."""
    prim = action.prim(sys)
    eta = float(sys.eta)
    sign, m = orbits.sign, orbits.horizon
    out = []
    idx = range(m) if sign > 0 else range(1, m + 1)
    for j in idx:
        py = float(prim(to_float(orbits.y[j])))
        pf = float(prim(to_float(orbits.foot[j])))
        out.append(eta ** (-j - 1) * (pf - py) if sign > 0 else eta ** (j - 1) * (py - pf))
    return out


def _boundary(sys, orbits: _Orbits, action: GaugedAction, n: int, nodes=None) -> tuple[float, float]:
    eta = float(sys.eta)
    scale = eta ** (-n) if orbits.sign > 0 else eta**n
    start, end = orbits.foot[n], orbits.y[n]
    if nodes is None:
        with mpmath.workdps(orbits.dps):
            nodes = [start + (end - start) * mpmath.mpf(k) / 16 for k in range(17)]
    val, err = path_integral(action.alpha, nodes)
    val += action.endpoint_term(to_float(start), to_float(end))
    return scale * val, scale * err


def primitive_wave(sys: MapSystem, y, sign: int = 1, alpha=None, primitive=None, gauge=None,
                   n_values=range(1, 21), horizon: int | None = None, levels: int = PATH_LEVELS[-1],
                   warp: float = 0.0) -> PrimitiveSeries:
    """Boundary term, partial sum and value of the primitive series of ``Omega_+`` or ``Omega_-`` at ``y``.

    The path is the chord between ``f^M y`` and its footpoint at the horizon ``M``, pulled back
    to each requested depth.  ``warp`` reparameterizes the chord by ``s + warp s (1 - s)`` to
    test path independence.
    """
    model = _require_model(sys)
    if not supports_mp(sys):
        raise ArgumentError(f"system {sys.name!r} lacks the extended-precision model the series needs")
    action = GaugedAction.of(sys, alpha, primitive, gauge)
    y = np.asarray(y, dtype=float)
    n_values = sorted(int(n) for n in n_values)
    if _on_manifold(sys, y):
        zeros = [0.0] * len(n_values)
        return PrimitiveSeries(sign, y, y.copy(), 0, n_values, zeros, list(zeros), list(zeros), 0.0)
    m = horizon or _default_horizon(sys, y, sign, max(n_values, default=0))
    if n_values and n_values[-1] > m:
        raise ArgumentError("requested depth exceeds the horizon")
    orbits = _orbits(sys, y, sign, m)
    terms = _series_terms(sys, orbits, action)
    partial = np.concatenate([[0.0], np.cumsum(terms)])
    b_m, _ = _boundary(sys, orbits, action, m)
    value = float(b_m + partial[m])

    boundary, quad = [], []
    want = set(n_values)
    with mpmath.workdps(orbits.dps):
        start, end = orbits.foot[m], orbits.y[m]
        count = 2**levels
        s = [mpmath.mpf(k) / count for k in range(count + 1)]
        s = [t + warp * t * (1 - t) for t in s]
        nodes = [start + (end - start) * t for t in s]
        found = {}
        for depth in range(m, (n_values[0] - 1) if n_values else m, -1):
            if depth in want:
                found[depth] = _boundary(sys, orbits, action, depth, nodes)
            if depth > 0:
                step = sys.finv_mp if sign > 0 else sys.f_mp
                nodes = [step(p) for p in nodes]
    for n in n_values:
        b, e = found[n]
        boundary.append(float(b))
        quad.append(float(e))
    return PrimitiveSeries(sign, y, to_float(orbits.foot[0]), m, n_values, boundary,
                           [float(partial[n]) for n in n_values], quad, value, [float(t) for t in terms])


def primitive_value(sys: MapSystem, y, sign: int = 1, alpha=None, primitive=None, gauge=None,
                    horizon: int | None = None) -> tuple[float, np.ndarray]:
    """``P_+(y)`` or ``P_-(y)`` at the horizon, with the footpoint."""
    ser = primitive_wave(sys, y, sign, alpha, primitive, gauge, n_values=(), horizon=horizon)
    return ser.value, ser.footpoint


# --------------------------------------------------------------------------
# primitive of the scattering map


@dataclass
class ScatteringPrimitive:
    x_minus: np.ndarray
    x_plus: np.ndarray
    y: np.ndarray
    value: float
    expanded: float
    p_plus: float
    p_minus: float

    @property
    def agreement(self) -> float:
        return abs(self.value - self.expanded)

    def to_dict(self) -> dict:
        return {"x_minus": self.x_minus.tolist(), "x_plus": self.x_plus.tolist(), "y": self.y.tolist(),
                "value": self.value, "expanded": self.expanded, "agreement": self.agreement,
                "p_plus": self.p_plus, "p_minus": self.p_minus}


def _channel_point(sys, x_minus, channel, tol):
    return scattering_eval(sys, x_minus, channel, tol)


def scattering_primitive_value(sys: MapSystem, x_minus, channel: Channel, alpha=None, primitive=None,
                               gauge=None, tol: float = 1e-12) -> float:
    """``P^S(x_-) = (P_- - P_+)(y)`` with ``Omega_-(y) = x_-``; both primitives oriented footpoint to ``y``."""
    y = _channel_point(sys, x_minus, channel, tol).y
    pp, _ = primitive_value(sys, y, 1, alpha, primitive, gauge)
    pm, _ = primitive_value(sys, y, -1, alpha, primitive, gauge)
    return pm - pp


def primitive_scattering(sys: MapSystem, x_minus, channel: Channel, alpha=None, primitive=None, gauge=None,
                         tol: float = 1e-12) -> ScatteringPrimitive:
    """``P^S`` from the two primitives at the horizon, and from both series truncated at tube entry."""
    sm = _channel_point(sys, x_minus, channel, tol)
    y = sm.y
    n_p = entry_depth(sys, y, 1, ENTRY_RADIUS)
    n_m = entry_depth(sys, y, -1, ENTRY_RADIUS)
    plus = primitive_wave(sys, y, 1, alpha, primitive, gauge, n_values=[n_p])
    minus = primitive_wave(sys, y, -1, alpha, primitive, gauge, n_values=[n_m])
    expanded = minus.values[0] - plus.values[0]
    return ScatteringPrimitive(sm.x_minus, sm.x_plus, y, minus.value - plus.value, expanded,
                               plus.value, minus.value)


def scattering_exactness(sys: MapSystem, samples, channel: Channel, h: float = 1e-4, tol: float = 1e-12,
                         alpha=None) -> dict:
    """``max |dP^S - (S^* alpha - alpha)|`` on the manifold coordinates, by central differences."""
    model = _require_model(sys)
    alpha = alpha if alpha is not None else sys.alpha
    cidx = list(model.center_idx)
    per = []
    for x in np.atleast_2d(samples):
        grad = np.zeros(len(cidx))
        for k, i in enumerate(cidx):
            e = np.zeros(sys.dim)
            e[i] = h
            grad[k] = (scattering_primitive_value(sys, x + e, channel, alpha, tol=tol)
                       - scattering_primitive_value(sys, x - e, channel, alpha, tol=tol)) / (2 * h)
        ds, sx = scattering_derivative(sys, x, channel, tol=tol)
        pulled = ds.T @ alpha(sx)[cidx] - alpha(x)[cidx]
        per.append(float(np.max(np.abs(grad - pulled))))
    return {"residual": max(per), "per_sample": per, "h": h}


def test_gauge(sys: MapSystem, normalized: bool) -> GaugeFunction:
    """A smooth gauge; the normalized one vanishes on the invariant manifold."""
    model = _require_model(sys)
    cidx = list(model.center_idx)

    def normal_sq(z):
        n = circle_diff(z, model.project(z), sys.periodic)
        return np.sum(n * n, axis=-1)

    def value(z):
        z = np.asarray(z, dtype=float)
        c = z[..., cidx]
        wave = 1.0 + 0.5 * np.sin(2 * np.pi * c[..., -1])
        out = wave * normal_sq(z)
        if not normalized:
            out = out + 0.3 * np.sin(2 * np.pi * c[..., -1]) + 0.2 * c[..., 0] ** 2
        return out

    return GaugeFunction(value, None, normalized)


def gauge_covariance(sys: MapSystem, samples, channel: Channel, gauge: GaugeFunction, tol: float = 1e-12) -> dict:
    """``max |P^S_{alpha + dG} - P^S_alpha - (G o S - G)|`` over the samples."""
    per = []
    for x in np.atleast_2d(samples):
        sm = _channel_point(sys, x, channel, tol)
        base = scattering_primitive_value(sys, x, channel, tol=tol)
        shifted = scattering_primitive_value(sys, x, channel, gauge=gauge, tol=tol)
        expected = float(gauge(sm.x_plus) - gauge(sm.x_minus))
        per.append(abs(shifted - base - expected))
    return {"residual": max(per), "per_sample": per, "normalized": bool(getattr(gauge, "normalized", False))}


# --------------------------------------------------------------------------
# gauge removing the boundary term near the manifold


def plateau_bump(r):
    """Smooth profile equal to 1 on ``r <= 1/2`` and 0 on ``r >= 1``."""
    r = np.asarray(r, dtype=float)

    def psi(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    a, b = psi(1.0 - r), psi(r - 0.5)
    return a / (a + b)


def _segment_integral(alpha: ActionForm, start, end, order: int = 8) -> np.ndarray:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (nodes + 1.0)
    d = end - start
    pts = start[..., None, :] + t[:, None] * d[..., None, :]
    vals = np.einsum("...kj,...j->...k", alpha(pts), d)
    return 0.5 * np.einsum("...k,k->...", vals, weights)


def convergent_gauge(sys: MapSystem, channel: Channel | None = None, rho: float = 2e-4, alpha=None) -> GaugeFunction:
    """Gauge equal to minus the local primitive within ``rho / 2`` of the manifold and 0 beyond ``rho``.

    The local primitive is the integral of ``alpha`` along the chord from the projection; on the
    local stable and unstable manifolds it matches ``P_+`` and ``P_-`` to third order in the distance.
    """
    model = _require_model(sys)
    alpha = alpha if alpha is not None else sys.alpha
    if channel is not None:
        y = channel.seed.point
        dist = float(np.linalg.norm(circle_diff(y, model.project(y), sys.periodic)))
        if dist <= rho:
            raise ConfigurationError(f"channel point at distance {dist:.3g} lies inside the gauge tube rho = {rho:g}")

    def value(z):
        z = np.asarray(z, dtype=float)
        base = model.project(z)
        n = circle_diff(z, base, sys.periodic)
        r = np.linalg.norm(n, axis=-1) / rho
        out = np.zeros(z.shape[:-1])
        inside = r < 1.0
        if np.any(inside):
            zi, bi = z[inside], base[inside]
            out[inside] = -plateau_bump(r[inside]) * _segment_integral(alpha, bi, bi + n[inside])
        return out

    g = GaugeFunction(value, None, True)
    object.__setattr__(g, "rho", rho)
    return g


def entry_boundary(sys: MapSystem, y, sign: int, gauge: GaugeFunction, alpha=None, primitive=None) -> dict:
    """Boundary term at the first depth inside the gauge plateau, with and without the gauge."""
    rho = getattr(gauge, "rho", ENTRY_RADIUS)
    n = entry_depth(sys, y, sign, rho / 2)
    with_g = primitive_wave(sys, y, sign, alpha, primitive, gauge, n_values=[n])
    without = primitive_wave(sys, y, sign, alpha, primitive, None, n_values=[n])
    return {"n_entry": n, "boundary": with_g.boundary[0], "partial_sum": with_g.partial_sum[0],
            "value": with_g.value, "boundary_ungauged": without.boundary[0], "value_ungauged": without.value,
            "identity_ungauged": abs(without.values[0] - without.value)}


# --------------------------------------------------------------------------
# discounted stationarity


TWIST_FLOOR = 1e-8


def _forward_c(sys, z):
    return np.asarray(sys.forward(np.asarray(z, dtype=complex), np), dtype=complex)


def _momentum(sys, q, qp, guess: float, max_iter: int = 50) -> complex:
    """Solve ``theta'(I, q) = q'`` for ``I`` by Newton in complex arithmetic."""
    i = complex(guess)
    for _ in range(max_iter):
        z = np.array([i, q])
        g = _forward_c(sys, z)[1] - qp
        twist = complex(np.asarray(sys.jacobian(z, np), dtype=complex)[1, 0])
        if abs(twist) < TWIST_FLOOR:
            raise TwistError(f"|d theta'/d I| = {abs(twist):.3g} below {TWIST_FLOOR:g}")
        step = g / twist
        i -= step
        if abs(step) <= 1e-15 * (1 + abs(i)):
            return i
    raise ContractViolation("generating-function solve did not converge")


def generating_function(sys: MapSystem, primitive=None, sigma: float | None = None):
    """``S(q, q') = P(q, I(q, q'))`` with ``I`` eliminated by Newton; complex arguments allowed."""
    prim = primitive if primitive is not None else sys.primitive
    if prim is None:
        raise ArgumentError(f"system {sys.name!r} has no primitive")

    def s(q, qp, guess=0.0):
        i = _momentum(sys, q, qp, guess)
        return prim.value_fn(np.array([i, q]))

    return s


def _complex_step(fun, a, b, which: int, h: float = 1e-30) -> float:
    if which == 0:
        return float(np.imag(fun(a + 1j * h, b)) / h)
    return float(np.imag(fun(a, b + 1j * h)) / h)


@dataclass
class StationarityReport:
    relation_residual: float
    euler_lagrange: float
    length: int

    @property
    def residual(self) -> float:
        return max(self.relation_residual, self.euler_lagrange)

    def to_dict(self) -> dict:
        return {"relation_residual": self.relation_residual, "euler_lagrange": self.euler_lagrange,
                "residual": self.residual, "length": self.length}


def discounted_stationarity(sys: MapSystem, q, p=None, primitive=None) -> StationarityReport:
    """Residuals of ``p' = d2 S(q, q')``, ``p = -d1 S(q, q') / eta`` and the discounted Euler-Lagrange relation.

    ``q`` is a lifted angle sequence and ``p`` the matching action-form momenta ``I + sigma``.
    The Euler-Lagrange residual ``d2 S(q_{n-1}, q_n) + d1 S(q_n, q_{n+1}) / eta`` is the weighted
    one multiplied by ``eta^(n-1)``.
    """
    if sys.dim != 2 or sys.jacobian is None:
        raise ArgumentError("discounted stationarity needs a planar twist map with an analytic Jacobian")
    eta = float(sys.eta)
    q = np.asarray(q, dtype=float)
    s = generating_function(sys, primitive)
    d1, d2 = [], []
    for a, b in zip(q[:-1], q[1:]):
        d1.append(_complex_step(s, a, b, 0))
        d2.append(_complex_step(s, a, b, 1))
    d1, d2 = np.array(d1), np.array(d2)
    rel = 0.0
    if p is not None:
        p = np.asarray(p, dtype=float)
        rel = float(max(np.max(np.abs(p[1:] - d2)), np.max(np.abs(p[:-1] + d1 / eta))))
    el = float(np.max(np.abs(d2[:-1] + d1[1:] / eta))) if len(q) > 2 else 0.0
    return StationarityReport(rel, el, len(q))


def stationarity_orbit(sys: MapSystem, x0, n: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Lifted angles and momenta ``I + sigma`` along an orbit."""
    seg = iterate(sys, np.asarray(x0, dtype=float), n - 1, reduce=False)
    pts = np.asarray(seg.points, dtype=float)
    sigma = float((sys.alpha.params if sys.alpha else {}).get("sigma", 0.0) or 0.0)
    return pts[:, 1], pts[:, 0] + sigma


# --------------------------------------------------------------------------
# growth of action forms on the cylinder


def _ball_boundary(radius: float, center, n: int) -> np.ndarray:
    """Boundary of the flat metric ball on ``R x T`` sampled at ``n`` angles per branch."""
    c = np.asarray(center, dtype=float)
    if radius <= 0.5:
        t = np.linspace(0, 2 * np.pi, 2 * n, endpoint=False)
        return c + radius * np.stack([np.cos(t), np.sin(t)], axis=-1)
    d = np.linspace(-0.5, 0.5, n)
    i = np.sqrt(radius**2 - d**2)
    up = np.stack([c[0] + i, c[1] + d], axis=-1)
    down = np.stack([c[0] - i, c[1] + d], axis=-1)
    return np.concatenate([up, down])


def _ball_volumes(radius: float) -> tuple[float, float]:
    if radius <= 0.5:
        return math.pi * radius**2, 2 * math.pi * radius
    a = math.asin(0.5 / radius)
    area = 2 * (0.5 * math.sqrt(radius**2 - 0.25) + radius**2 * a)
    return area, 4 * radius * a


def action_lower_bound_probe(alpha: ActionForm, radii, center=(0.0, 0.0), n: int = 401) -> dict:
    """``sup |alpha|`` over metric spheres of ``R x T`` against the volume ratio of the ball."""
    rows = []
    for r in radii:
        pts = _ball_boundary(float(r), center, n)
        sup = float(np.max(np.linalg.norm(alpha(pts), axis=-1)))
        vol, area = _ball_volumes(float(r))
        rows.append({"R": float(r), "sup_norm": sup, "volume_ratio": vol / area, "ratio": sup / (vol / area)})
    rs = np.array([row["R"] for row in rows])
    sups = np.array([row["sup_norm"] for row in rows])
    slope, intercept = np.polyfit(rs, sups, 1) if len(rs) > 1 else (math.nan, math.nan)
    return {"rows": rows, "slope": float(slope), "intercept": float(intercept)}
