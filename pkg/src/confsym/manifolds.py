"""Invariant graphs, strong stable/unstable fibers and convergence of channels to the manifold."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import _shadow
from ._backend import np_ns, to_float
from .dynamics import MapSystem, iterate
from .errors import ArgumentError, ContractViolation, ConvergenceError
from .geometry import circle_diff, max_angle_sine
from .topology import TorusAutomorphism, int_inverse

SERIES_TOL = 1e-14
AGREEMENT_TOL = 1e-12
MIN_SHELLS = 6


def _transpose(m):
    return tuple(tuple(int(m[j][i]) for j in range(len(m))) for i in range(len(m)))


def _apply(m, k):
    return tuple(sum(int(m[i][j]) * k[j] for j in range(len(k))) for i in range(len(m)))


# --------------------------------------------------------------------------
# trigonometric polynomials and graphs


@dataclass
class TrigPoly:
    """Real function ``sum_k c_k exp(2 pi i k.theta)`` stored as a sparse mode table."""

    dim: int
    coeffs: dict = field(default_factory=dict)

    @classmethod
    def cosine(cls, k0, amp: float = 1.0) -> "TrigPoly":
        k0 = tuple(int(k) for k in k0)
        if not any(k0):
            return cls(len(k0), {k0: complex(amp)})
        neg = tuple(-k for k in k0)
        return cls(len(k0), {k0: complex(amp / 2), neg: complex(amp / 2)})

    @classmethod
    def sine(cls, k0, amp: float = 1.0) -> "TrigPoly":
        k0 = tuple(int(k) for k in k0)
        if not any(k0):
            return cls(len(k0), {})
        neg = tuple(-k for k in k0)
        return cls(len(k0), {k0: complex(0, -amp / 2), neg: complex(0, amp / 2)})

    @classmethod
    def constant(cls, dim: int, value: float) -> "TrigPoly":
        return cls(dim, {(0,) * dim: complex(value)} if value else {})

    def norm(self) -> float:
        """Sum of coefficient moduli, an upper bound for the sup norm."""
        return float(sum(abs(c) for c in self.coeffs.values()))

    def reality_defect(self) -> float:
        worst = 0.0
        for k, c in self.coeffs.items():
            neg = tuple(-x for x in k)
            worst = max(worst, abs(c - self.coeffs.get(neg, 0).conjugate()))
        return worst

    def _phase(self, theta, k):
        return sum(k[i] * theta[..., i] for i in range(self.dim) if k[i])

    def evaluate(self, theta, xp=np_ns):
        theta = np.asarray(theta) if xp is not np_ns else np.asarray(theta, dtype=float)
        total = theta[..., 0] * 0
        for k, c in self.coeffs.items():
            if not any(k):
                total = total + c.real
                continue
            ph = 2 * xp.pi * self._phase(theta, k)
            if c.real:
                total = total + c.real * xp.cos(ph)
            if c.imag:
                total = total - c.imag * xp.sin(ph)
        return total

    def gradient(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape)
        for k, c in self.coeffs.items():
            if not any(k):
                continue
            ph = 2 * np.pi * self._phase(theta, k)
            dval = -2 * np.pi * (c.real * np.sin(ph) + c.imag * np.cos(ph))
            out = out + dval[..., None] * np.asarray(k, dtype=float)
        return out

    def compose_linear(self, m) -> "TrigPoly":
        """``theta -> self(m theta)`` for an integer matrix ``m``; modes map by the transpose."""
        mt = _transpose(m)
        return TrigPoly(self.dim, {_apply(mt, k): c for k, c in self.coeffs.items()})


@dataclass
class FourierGraph(TrigPoly):
    """Invariant graph component with its series metadata."""

    K: int | None = None
    side: str = "s"
    lam: float = 0.0
    terms: int = 0
    tail_bound: float = 0.0
    fixed_point_gap: float = 0.0

    def radius(self) -> int:
        return max((max(abs(x) for x in k) for k in self.coeffs), default=0)

    def csv_rows(self) -> list[list]:
        rows = []
        for k in sorted(self.coeffs, key=lambda m: (max(abs(x) for x in m), m)):
            c = self.coeffs[k]
            rows.append([*k, c.real, c.imag])
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow([f"k{i}" for i in range(self.dim)] + ["real", "imag"])
        w.writerows(self.csv_rows())
        return buf.getvalue()


def _accumulate(table: dict, poly: dict, scale: float, K: int | None) -> None:
    for k, c in poly.items():
        if K is not None and max(abs(x) for x in k) > K:
            continue
        table[k] = table.get(k, 0) + scale * c


def _fixed_point(mat, lam, a: TrigPoly, side: str, K, n_terms: int) -> dict:
    """Iterate the graph transform on coefficient tables until the update is negligible."""
    g: dict = {}
    if side == "s":
        shifted_a = a.compose_linear(mat).coeffs
    else:
        shifted_a = {k: -lam * c for k, c in a.coeffs.items()}
    for _ in range(n_terms + 200):
        new: dict = {}
        _accumulate(new, TrigPoly(a.dim, g).compose_linear(mat).coeffs, lam, K)
        _accumulate(new, shifted_a, 1.0, K)
        delta = max((abs(new.get(k, 0) - g.get(k, 0)) for k in set(new) | set(g)), default=0.0)
        g = new
        if delta < 1e-16 * max(1.0, a.norm()):
            break
    return g


def solve_invariant_graph(A, lam: float, a: TrigPoly, K: int | None = None, side: str = "s") -> FourierGraph:
    """Bounded solution of the graph equation over the torus automorphism ``A``.

    ``side='s'``: ``b(A theta) = lam b(theta) + a(theta)``.
    ``side='u'``: ``b(A theta) = b(theta) / lam + a(theta)``.
    The coefficient table is computed by direct series summation and, independently,
    by iterating the graph transform; the two must agree within 1e-12.
    """
    if not abs(lam) < 1:
        raise ContractViolation(f"|lambda| = {abs(lam)} >= 1: no bounded invariant graph")
    if side not in ("s", "u"):
        raise ArgumentError("side must be 's' or 'u'")
    aut = TorusAutomorphism(A)
    if aut.dim != a.dim:
        raise ArgumentError("trigonometric polynomial and matrix dimensions differ")
    ainv = tuple(tuple(int(x) for x in row) for row in int_inverse(aut.matrix))
    step = ainv if side == "s" else aut.matrix
    anorm = a.norm()
    table: dict = {}
    term = a.compose_linear(step) if side == "s" else a
    coef = 1.0 if side == "s" else -lam
    j = 0
    while anorm and abs(coef) * anorm >= SERIES_TOL:
        _accumulate(table, term.coeffs, coef, K)
        term = term.compose_linear(step)
        coef *= lam
        j += 1
    tail = abs(coef) * anorm / (1 - abs(lam)) if anorm else 0.0
    fp = _fixed_point(step, lam, a, side, K, j)
    gap = max((abs(table.get(k, 0) - fp.get(k, 0)) for k in set(table) | set(fp)), default=0.0)
    if gap > AGREEMENT_TOL:
        raise ConvergenceError(f"series and fixed-point solutions differ by {gap:.3e}", [gap])
    return FourierGraph(dim=a.dim, coeffs=table, K=K, side=side, lam=lam, terms=j, tail_bound=tail,
                        fixed_point_gap=gap)


def graph_invariance_residual(A, graph: FourierGraph, a: TrigPoly, samples: np.ndarray) -> float:
    """Max violation of the graph equation at sample angles."""
    mat = np.array(A, dtype=float)
    th = np.asarray(samples, dtype=float)
    lhs = graph.evaluate(th @ mat.T)
    if graph.side == "s":
        rhs = graph.lam * graph.evaluate(th) + a.evaluate(th)
    else:
        rhs = graph.evaluate(th) / graph.lam + a.evaluate(th)
    return float(np.max(np.abs(lhs - rhs)))


@dataclass
class RegularityEstimate:
    verdict: str
    exponent: float | None
    ceiling: float
    shells: list

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "exponent": self.exponent, "ceiling": self.ceiling,
                "shells": self.shells}


def regularity_estimate(graph: FourierGraph, A) -> RegularityEstimate:
    """Fit ``|b_k| ~ |k|^-l`` over dyadic shells and compare with the rate-limited ceiling."""
    mat = np.array(A, dtype=float)
    grow = np.linalg.inv(mat) if graph.side == "s" else mat
    rho = float(max(abs(np.linalg.eigvals(grow))))
    ceiling = math.log(1 / abs(graph.lam)) / math.log(rho) if graph.lam else math.inf
    best: dict[int, tuple[float, float]] = {}
    for k, c in graph.coeffs.items():
        r = max(abs(x) for x in k)
        if r == 0 or abs(c) < 1e-300:
            continue
        shell = int(math.floor(math.log2(r)))
        if shell not in best or abs(c) > best[shell][1]:
            best[shell] = (float(r), abs(c))
    shells = [best[s] for s in sorted(best)]
    if not shells:
        return RegularityEstimate("smooth", None, ceiling, [])
    if len(shells) < MIN_SHELLS:
        return RegularityEstimate("inconclusive", None, ceiling, shells)
    x = np.log([s[0] for s in shells])
    y = np.log([s[1] for s in shells])
    slope = np.polyfit(x, y, 1)[0]
    return RegularityEstimate("finite", float(-slope), ceiling, shells)


# --------------------------------------------------------------------------
# strong stable / unstable fibers


@dataclass
class FiberPolyline:
    """Ordered points of a local strong fiber with per-point certificates."""

    footpoint: np.ndarray
    side: str
    points: np.ndarray
    arclength: np.ndarray
    certificates: np.ndarray
    seed_direction: np.ndarray
    contract_constants: np.ndarray
    rate_constants: np.ndarray
    lam: float
    mu: float
    horizon: int
    refined: bool

    @property
    def C(self) -> float:
        return float(np.max(self.contract_constants))

    @property
    def D(self) -> float:
        return float(np.max(self.rate_constants))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        d = self.points.shape[1]
        w.writerow(["s"] + [f"z{i}" for i in range(d)] + ["certificate", "C", "D"])
        for k in range(len(self.points)):
            w.writerow([self.arclength[k], *self.points[k], self.certificates[k], self.contract_constants[k],
                        self.rate_constants[k]])
        return buf.getvalue()


def _side_data(sys: MapSystem, side: str) -> tuple[int, float, float]:
    if side not in ("s", "u"):
        raise ArgumentError("side must be 's' or 'u'")
    if sys.model is None or not sys.rates:
        raise ArgumentError(f"system {sys.name!r} declares no invariant manifold with rates")
    r = sys.rates
    if side == "s":
        return 1, r["lambda_plus"], r.get("mu_minus", 1.0)
    return -1, r["lambda_minus"], r.get("mu_plus", 1.0)


def _step_float(sys, z, sign):
    return sys.f(z) if sign > 0 else sys.finv(z)


def _orbit_distances_mp(sys, y_mp, x_mp, horizon: int, sign: int) -> np.ndarray:
    out = []
    y, x = y_mp, x_mp
    for n in range(horizon + 1):
        diff = [y[i] - x[i] for i in range(sys.dim)]
        out.append(float(mpmath.sqrt(sum(v * v for v in diff))))
        if n < horizon:
            y, x = _shadow.mp_step(sys, y, sign), _shadow.mp_step(sys, x, sign)
    return np.array(out)


def _orbit_distances_float(sys, y, x, horizon: int, sign: int) -> np.ndarray:
    out = []
    for n in range(horizon + 1):
        out.append(float(np.linalg.norm(circle_diff(y, x, sys.periodic))))
        if n < horizon:
            y, x = _step_float(sys, y, sign), _step_float(sys, x, sign)
    return np.array(out)


def contract_constants(dist: np.ndarray, lam: float, mu: float) -> tuple[float, float]:
    """Relative constants of the rate contract and of the faster-rate characterization."""
    n = np.arange(len(dist))
    if dist[0] == 0:
        return 0.0, 0.0
    c = float(np.max(dist / (dist[0] * lam**n)))
    d = float(np.max(dist * mu**n / dist[0]))
    return c, d


def local_fiber(sys: MapSystem, x, side: str = "s", length: float = 0.05, tol: float = 1e-10,
                delta: float = 1e-6, per_level: int = 6, horizon: int | None = None, c_max: float = 2.0,
                column: int = 0, orientation: int = 1, refine: bool | None = None,
                rate_margin: float = 1e-3) -> FiberPolyline:
    """Local strong fiber through ``x`` grown from the linear seed by fundamental domains.

    Each point is refined so that its orbit shadows that of ``x`` (forward for ``side='s'``),
    then checked against ``d(f^n y, f^n x) <= C lam^n d(y, x)`` over the horizon with
    ``lam`` the declared rate plus ``rate_margin``.
    """
    sign, rate, mu = _side_data(sys, side)
    if not 1e-9 <= delta <= 1e-2:
        raise ArgumentError("seed offset delta must lie in [1e-9, 1e-2]")
    if tol < 1e-12:
        raise ArgumentError("tol must be at least 1e-12")
    if length <= delta:
        raise ArgumentError("length must exceed the seed offset")
    lam = rate + rate_margin
    horizon = horizon or int(math.ceil(math.log(tol) / math.log(rate)))
    refine = _shadow.supports_mp(sys) if refine is None else refine
    model = sys.model
    x = model.project(np.asarray(x, dtype=float))
    bundle = model.stable if side == "s" else model.unstable
    seed = bundle(x)[:, column] * orientation
    levels = int(math.ceil(math.log(length / delta) / math.log(1 / rate))) + 1
    pts = []
    xn = x.copy()
    for n in range(levels + 1):
        e = bundle(xn)[:, column]
        t = np.geomspace(delta, delta * rate, per_level, endpoint=False)
        for flip in (1.0, -1.0):
            seg = xn + flip * t[:, None] * e
            for _ in range(n):
                seg = _step_float(sys, seg, -sign)
            if np.dot(np.mean(circle_diff(seg, x, sys.periodic), axis=0), seed) > 0:
                break
        pts.append(seg)
        xn = model.project(_step_float(sys, xn, sign))
    cand = np.concatenate(pts)
    if not refine:
        # without extended precision only the linear seed keeps the exact cancellations the check needs
        t = np.geomspace(delta, length, levels * per_level)
        cand = x + t[:, None] * seed
    d0 = np.linalg.norm(circle_diff(cand, x, sys.periodic), axis=-1)
    keep = np.argsort(d0)
    cand, d0 = cand[keep], d0[keep]
    cand = cand[d0 <= length]
    points = [x]
    certs, cs, ds = [0.0], [1.0], [1.0]
    for y in cand:
        if refine:
            y_mp, dps = _shadow.refine(sys, y, horizon, side=side, mode="fiber", x=x)
            with mpmath.workdps(dps):
                x_mp = np.array([mpmath.mpf(v) for v in x], dtype=object)
                dist = _orbit_distances_mp(sys, y_mp, x_mp, horizon, sign)
                y_ref = to_float(y_mp)
        else:
            y_ref = y
            dist = _orbit_distances_float(sys, y, x, horizon, sign)
        c, d = contract_constants(dist, lam, mu)
        if not c <= c_max:
            raise ContractViolation(f"fiber point {y_ref.tolist()} violates the contract: C = {c:.3g} > {c_max}")
        points.append(y_ref)
        certs.append(float(np.linalg.norm(y_ref - y)))
        cs.append(c)
        ds.append(d)
    points = np.array(points)
    steps = np.linalg.norm(np.diff(points, axis=0), axis=-1)
    arc = np.concatenate([[0.0], np.cumsum(steps)])
    return FiberPolyline(x, side, points, arc, np.array(certs), seed, np.array(cs), np.array(ds), lam, mu,
                         horizon, bool(refine))


def verify_fiber(sys: MapSystem, fiber: FiberPolyline, c_max: float = 2.0) -> tuple[float, float]:
    """Re-run the stored contract on the accepted points; returns the worst ``(C, D)``."""
    sign = 1 if fiber.side == "s" else -1
    worst_c, worst_d = 0.0, 0.0
    x = fiber.footpoint
    for y in fiber.points[1:]:
        if fiber.refined:
            y_mp, dps = _shadow.refine(sys, y, fiber.horizon, side=fiber.side, mode="fiber", x=x)
            with mpmath.workdps(dps):
                x_mp = np.array([mpmath.mpf(v) for v in x], dtype=object)
                dist = _orbit_distances_mp(sys, y_mp, x_mp, fiber.horizon, sign)
        else:
            dist = _orbit_distances_float(sys, y, x, fiber.horizon, sign)
        c, d = contract_constants(dist, fiber.lam, fiber.mu)
        worst_c, worst_d = max(worst_c, c), max(worst_d, d)
    if worst_c > c_max:
        raise ContractViolation(f"stored fiber fails the contract: C = {worst_c:.3g}")
    return worst_c, worst_d


# --------------------------------------------------------------------------
# convergence of a patch inside the stable manifold


@dataclass
class DecayFit:
    """Exponential fit ``d_n ~ K rate^n`` over a window of a distance sequence."""

    distances: np.ndarray
    rate: float
    residual: float
    window: tuple[int, int]
    truncated: bool = False
    warning: str | None = None

    def to_dict(self) -> dict:
        return {"rate": self.rate, "residual": self.residual, "window": list(self.window),
                "truncated": self.truncated, "warning": self.warning, "distances": self.distances.tolist()}


def fit_decay(distances, window: tuple[int, int] | None = None) -> DecayFit:
    d = np.asarray(distances, dtype=float)
    n = len(d)
    lo, hi = window or (n // 2, n)
    hi = min(hi, n)
    if np.all(d == 0):
        return DecayFit(d, 0.0, 0.0, (lo, hi))
    idx = np.arange(lo, hi)
    idx = idx[d[idx] > 0]
    if len(idx) < 2:
        return DecayFit(d, math.nan, math.nan, (lo, hi), warning="too few positive samples to fit")
    y = np.log(d[idx])
    coef = np.polyfit(idx, y, 1)
    resid = float(np.sqrt(np.mean((np.polyval(coef, idx) - y) ** 2)))
    return DecayFit(d, float(np.exp(coef[0])), resid, (int(idx[0]), int(idx[-1]) + 1))


def _mp_angle_sine(chords, center, normal) -> float:
    """Largest principal-angle sine between span(chords) and the coordinate subspace ``center``."""
    k = len(chords)
    g = mpmath.matrix(k, k)
    hmat = mpmath.matrix(k, k)
    for a in range(k):
        for b in range(k):
            g[a, b] = sum(chords[a][i] * chords[b][i] for i in range(len(chords[a])))
            hmat[a, b] = sum(chords[a][i] * chords[b][i] for i in normal)
    ev = mpmath.eig(g ** -1 * hmat, left=False, right=False)
    worst = max(mpmath.re(e) for e in ev)
    return float(mpmath.sqrt(max(worst, 0)))


@dataclass
class ChannelConvergence:
    c0: DecayFit
    c1: DecayFit

    def to_dict(self) -> dict:
        return {"C0": self.c0.to_dict(), "C1": self.c1.to_dict()}


def channel_convergence(sys: MapSystem, patch, params, n_max: int = 30, h: float = 1e-6,
                        radius: float = 1.0, window: tuple[int, int] | None = None,
                        refine: bool = True) -> ChannelConvergence:
    """C0 and C1 distances of ``f^n(patch)`` to the manifold, with exponential fits.

    ``patch`` maps parameters of shape ``(k,)`` to points of the stable manifold; tangent
    planes come from chords of length ``h`` along each parameter.  With ``refine`` every
    point is first moved onto the stable manifold in extended precision and orbits are
    computed at that precision, so decay far below double precision is resolved.
    """
    if not _shadow.supports_mp(sys) or sys.model.embed_fn is not None and sys.model.center_idx:
        raise ArgumentError("channel convergence needs a coordinate manifold with an analytic Jacobian")
    params = np.atleast_2d(np.asarray(params, dtype=float))
    k = params.shape[1]
    center = list(sys.model.center_idx)
    normal = list(sys.model.normal_idx)
    dps = _shadow.working_dps(sys, n_max + 5) + int(-math.log10(h)) + 10
    c0 = np.zeros(n_max + 1)
    c1 = np.zeros(n_max + 1)
    alive = n_max + 1
    with mpmath.workdps(dps):
        for c in params:
            stencil = [c] + [c + h * np.eye(k)[j] for j in range(k)]
            orbits = []
            for q in stencil:
                y = np.asarray(patch(q), dtype=float)
                if refine and sys.model.distance(y) > 0:
                    y_mp, _ = _shadow.refine(sys, y, n_max + 5, side="s", mode="manifold", dps=dps)
                else:
                    y_mp = np.array([mpmath.mpf(v) for v in y], dtype=object)
                orbits.append(_shadow.mp_orbit(sys, y_mp, n_max, 1))
            base_c = np.array([mpmath.mpf(v) for v in sys.model.embed(np.zeros(len(center)))], dtype=object)
            for n in range(n_max + 1):
                z = orbits[0][n]
                dist = float(mpmath.sqrt(sum((z[i] - base_c[i]) ** 2 for i in normal)))
                if dist > radius:
                    alive = min(alive, n)
                c0[n] = max(c0[n], dist)
                chords = [[(orbits[j + 1][n][i] - z[i]) / h for i in range(sys.dim)] for j in range(k)]
                c1[n] = max(c1[n], _mp_angle_sine(chords, center, normal))
    warn = None
    truncated = alive <= n_max
    if truncated:
        warn = f"patch left the neighbourhood at step {alive}; fit truncated"
        warnings.warn(warn, RuntimeWarning, stacklevel=2)
        c0, c1 = c0[:alive], c1[:alive]
    f0, f1 = fit_decay(c0, window), fit_decay(c1, window)
    for f in (f0, f1):
        f.truncated, f.warning = truncated, warn or f.warning
    return ChannelConvergence(f0, f1)


def affine_patch(origin, tangents):
    """Parameterized affine cell ``c -> origin + sum_j c_j t_j``."""
    origin = np.asarray(origin, dtype=float)
    tangents = np.asarray(tangents, dtype=float)
    return lambda c: origin + np.asarray(c, dtype=float) @ tangents


# --------------------------------------------------------------------------
# planar saddle: branches of the invariant curves and their first crossing


def saddle_branch(sys: MapSystem, side: str, orientation: int = 1, delta: float = 1e-7, per_level: int = 200,
                  levels: int = 12, bound: float = 50.0) -> np.ndarray:
    """Polyline of one branch of the stable or unstable curve of a planar saddle."""
    sign, rate, _ = _side_data(sys, "s" if side == "s" else "u")
    p = sys.model.embed(np.zeros(0))
    e = (sys.model.stable(p) if side == "s" else sys.model.unstable(p))[:, 0]
    t = np.geomspace(delta * rate, delta, per_level, endpoint=False)
    pts = [p + orientation * np.outer(t, e)]
    for _ in range(levels):
        q = _step_float(sys, pts[-1], -sign)
        if not np.all(np.isfinite(q)) or np.max(np.abs(q - p)) > bound:
            break
        pts.append(q)
    return np.concatenate(pts)


def first_crossing(branch_u: np.ndarray, branch_s: np.ndarray, base, exclude: float = 1e-3):
    """First crossing of two polylines away from ``base``; ``None`` if they do not cross."""
    c = branch_s[:-1]
    dc = branch_s[1:] - branch_s[:-1]
    far_s = np.linalg.norm(c - base, axis=1) > exclude
    for i in range(len(branch_u) - 1):
        a, b = branch_u[i], branch_u[i + 1]
        if np.linalg.norm(a - base) < exclude:
            continue
        d = b - a
        den = d[0] * dc[:, 1] - d[1] * dc[:, 0]
        r = c - a
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (r[:, 0] * dc[:, 1] - r[:, 1] * dc[:, 0]) / den
            s = (r[:, 0] * d[1] - r[:, 1] * d[0]) / den
        ok = np.nonzero((t >= 0) & (t <= 1) & (s >= 0) & (s <= 1) & far_s)[0]
        if len(ok):
            return a + t[ok[0]] * d
    return None


def planar_homoclinic_seed(sys: MapSystem) -> np.ndarray:
    """Transverse homoclinic point of a planar saddle from the first branch crossing."""
    p = sys.model.embed(np.zeros(0))
    for su in (1, -1):
        bu = saddle_branch(sys, "u", su)
        for ss in (1, -1):
            hit = first_crossing(bu, saddle_branch(sys, "s", ss), p)
            if hit is not None:
                return hit
    raise ConvergenceError("no crossing of the invariant curves found", [])
