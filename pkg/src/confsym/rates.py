"""Hyperbolicity-rate estimation, pairing and rate-condition checks, and vanishing experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from itertools import combinations

import mpmath
import numpy as np

from . import _shadow
from ._backend import to_float, to_mp
from .dynamics import MapSystem, iterate
from .errors import ArgumentError
from .geometry import TwoForm, exterior_derivative_value

DRIFT_LIMIT = 0.1
DEFAULT_N = 400
BUNDLE_TOL = 1e-8


# --------------------------------------------------------------------------
# pushing vectors along orbits


def bundle_basis(sys: MapSystem, z, name: str) -> np.ndarray:
    """Columns spanning the declared bundle ``name`` in {'t', 's', 'u'} at ``z``."""
    if sys.model is None:
        raise ArgumentError(f"system {sys.name!r} declares no splitting")
    t, s, u = sys.model.splitting(np.asarray(z, dtype=float))
    return {"t": t, "s": s, "u": u}[name]


def _bundle_project(sys, z, name, v):
    t, s, u = sys.model.splitting(z)
    basis = np.concatenate([t, s, u], axis=-1)
    coef = np.linalg.solve(basis, v)
    kt, ks = t.shape[-1], s.shape[-1]
    sl = {"t": slice(0, kt), "s": slice(kt, kt + ks), "u": slice(kt + ks, None)}[name]
    return basis[:, sl] @ coef[sl]


def _angle(a, b) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    c = abs(np.dot(a, b)) / (na * nb)
    return float(math.acos(min(1.0, c)))


def detect_bundle_name(sys: MapSystem, x, v) -> str | None:
    """Name of the declared bundle containing ``v`` at ``x`` (None when mixed or undeclared)."""
    if sys.model is None:
        return None
    v = np.asarray(v, dtype=float)
    for name in ("t", "s", "u"):
        b = bundle_basis(sys, x, name)
        if b.shape[-1] and np.linalg.norm(_bundle_project(sys, x, name, v) - v) <= BUNDLE_TOL * np.linalg.norm(v):
            return name
    return None


@dataclass
class PushedVector:
    log_norms: np.ndarray
    final: np.ndarray
    drift: float
    orbit: np.ndarray
    units: np.ndarray


def push_vector(sys: MapSystem, x, v, n: int, direction: int = 1, bundle: str | None = None) -> PushedVector:
    """``D f^{k} (x) v`` for ``k = 0..n`` (``direction=-1`` for ``f^{-1}``), renormalized each step.

    With ``bundle`` the vector is re-projected onto that declared bundle after each step,
    which removes rounding components outside the invariant bundle; the largest angle
    removed is reported as ``drift``.
    """
    v = np.asarray(v, dtype=float)
    if not np.linalg.norm(v) > 0:
        raise ArgumentError("vector must be nonzero")
    orbit = iterate(sys, x, direction * n).points
    jac = sys.jac(orbit[:-1]) if direction > 0 else sys.jac_inv(orbit[:-1])
    logs = np.zeros(n + 1)
    w = v / np.linalg.norm(v)
    logs[0] = math.log(np.linalg.norm(v))
    units = np.zeros((n + 1, sys.dim))
    units[0] = w
    drift = 0.0
    for k in range(n):
        w = jac[k] @ w
        if bundle is not None:
            p = _bundle_project(sys, orbit[k + 1], bundle, w)
            drift = max(drift, _angle(w, p))
            w = p
        nw = np.linalg.norm(w)
        if nw == 0:
            logs[k + 1:] = -np.inf
            break
        logs[k + 1] = logs[k] + math.log(nw)
        w = w / nw
        units[k + 1] = w
    return PushedVector(logs, w, drift, orbit, units)


# --------------------------------------------------------------------------
# rate fits


@dataclass
class RateFit:
    rate: float
    slope: float
    intercept: float
    window: tuple[int, int]
    residual: float
    richardson_gap: float
    method: str
    bundle: str | None
    warning: str | None = None
    curve: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "curve"}
        d["window"] = list(self.window)
        return d


def _tail_fit(logs: np.ndarray, n: int) -> tuple[float, float, float, tuple[int, int]]:
    lo = n // 2
    idx = np.arange(lo, n + 1)
    y = logs[idx]
    coef = np.polyfit(idx, y, 1)
    resid = float(np.sqrt(np.mean((np.polyval(coef, idx) - y) ** 2)))
    return float(coef[0]), float(coef[1]), resid, (lo, n)


def estimate_bundle_rate(sys: MapSystem, x, v, direction: str = "forward", n_max: int = DEFAULT_N,
                         method: str = "auto", bundle: str | None = None) -> RateFit:
    """Exponentiated tail slope of ``log |D f^n(x) v|``.

    ``method``: ``direct`` pushes the raw vector; ``stabilized`` re-projects onto the declared
    bundle containing ``v``; ``auto`` picks ``stabilized`` when such a bundle exists.
    """
    if direction not in ("forward", "backward"):
        raise ArgumentError("direction must be 'forward' or 'backward'")
    if n_max < 8:
        raise ArgumentError("n_max must be at least 8")
    sgn = 1 if direction == "forward" else -1
    bundle = bundle or detect_bundle_name(sys, x, v)
    if method == "auto":
        method = "stabilized" if bundle else "direct"
    if method not in ("direct", "stabilized"):
        raise ArgumentError(f"unknown method {method!r}")
    pushed = push_vector(sys, x, v, n_max, sgn, bundle if method == "stabilized" else None)
    logs = pushed.log_norms
    slope, icpt, resid, win = _tail_fit(logs, n_max)
    half, _, _, _ = _tail_fit(logs[: n_max // 2 + 1], n_max // 2)
    warning = None
    drift = pushed.drift
    if method == "direct" and bundle is not None:
        drift = _angle(pushed.final, _bundle_project(sys, pushed.orbit[-1], bundle, pushed.final))
    if drift > DRIFT_LIMIT:
        warning = f"bundle drift {drift:.3g} rad exceeds {DRIFT_LIMIT}"
    return RateFit(float(math.exp(slope)), slope, float(math.exp(icpt)), win, resid,
                   float(abs(math.exp(slope) - math.exp(half))), method, bundle, warning, logs)


def detect_bundle(sys: MapSystem, x, side: str, n: int = 60, seed: int = 0) -> np.ndarray:
    """Dominant direction of ``E^u`` (forward power iteration) or ``E^s`` (backward) at ``x``."""
    rng = np.random.default_rng(seed)
    sgn = 1 if side == "u" else -1
    start = iterate(sys, x, -sgn * n).points[-1]
    w = rng.standard_normal(sys.dim)
    pushed = push_vector(sys, start, w, n, sgn)
    return pushed.final


@dataclass
class RateReport:
    lambda_plus: float
    lambda_minus: float
    mu_plus: float
    mu_minus: float
    fits: dict
    declared: bool
    point: list

    def as_rates(self) -> dict:
        return {"lambda_plus": self.lambda_plus, "lambda_minus": self.lambda_minus,
                "mu_plus": self.mu_plus, "mu_minus": self.mu_minus}

    @property
    def nhim_consistent(self) -> bool:
        lp, lm, mp_, mm = self.lambda_plus, self.lambda_minus, self.mu_plus, self.mu_minus
        tol = 1e-9
        return lp * lm < 1 and mp_ >= 1 - tol and mm >= 1 - tol and mp_ * mm >= 1 - tol

    def to_dict(self) -> dict:
        return {**self.as_rates(), "nhim_consistent": self.nhim_consistent, "declared": self.declared,
                "point": self.point, "fits": {k: [f.to_dict() for f in v] for k, v in self.fits.items()}}


def compute_rate_report(sys: MapSystem, x, n_max: int = DEFAULT_N, method: str = "auto") -> RateReport:
    """Optimal-rate estimates: the slowest rate over a basis of each declared bundle."""
    if sys.model is None:
        raise ArgumentError(f"system {sys.name!r} declares no invariant manifold")
    x = np.asarray(x, dtype=float)
    plan = {"lambda_plus": ("s", "forward"), "lambda_minus": ("u", "backward"),
            "mu_plus": ("t", "forward"), "mu_minus": ("t", "backward")}
    values, fits = {}, {}
    for key, (name, direction) in plan.items():
        basis = bundle_basis(sys, x, name)
        fl = [estimate_bundle_rate(sys, x, basis[:, j], direction, n_max, method, bundle=name)
              for j in range(basis.shape[-1])]
        fits[key] = fl
        values[key] = max((f.rate for f in fl), default=1.0)
    return RateReport(values["lambda_plus"], values["lambda_minus"], values["mu_plus"], values["mu_minus"],
                      fits, True, x.tolist())


def _rates(obj) -> dict:
    if isinstance(obj, RateReport):
        return obj.as_rates()
    if isinstance(obj, MapSystem):
        if not obj.rates:
            raise ArgumentError(f"system {obj.name!r} declares no rates")
        return dict(obj.rates)
    return dict(obj)


def pairing_check(report, eta: float, tol: float = 1e-6) -> dict:
    r = _rates(report)
    res_l = abs(r["lambda_plus"] / r["lambda_minus"] - eta)
    res_m = abs(r["mu_plus"] / r["mu_minus"] - eta)
    return {"res_lambda": res_l, "res_mu": res_m, "tol": tol, "holds": bool(res_l <= tol and res_m <= tol)}


def rate_condition_check(report, eta: float) -> dict:
    """Each rate inequality as ``{value, bound, margin, holds}``."""
    r = _rates(report)
    lp, lm, mp_, mm = r["lambda_plus"], r["lambda_minus"], r["mu_plus"], r["mu_minus"]

    def below(value, bound=1.0):
        return {"value": value, "bound": bound, "margin": bound - value, "holds": bool(value < bound)}

    def above(value, bound=1.0):
        return {"value": value, "bound": bound, "margin": value - bound, "holds": bool(value >= bound)}

    out = {
        "R": {"lambda_plus": below(lp), "lambda_minus": below(lm), "lambda_plus_mu_minus": below(lp * mm),
              "lambda_minus_mu_plus": below(lm * mp_)},
        "S": {"plus": below(mp_ * lp / eta), "minus": below(mm * lm * eta)},
        "lambda_mu_gap": {"plus": below(lp * mm), "minus": below(lm * mp_)},
        "mubounds": {"mu_plus": above(mp_), "mu_minus": above(mm), "product": above(mp_ * mm)},
        "tts": below(mp_**2 * lp / eta),
        "ttu": below(mm**2 * lm * eta),
    }
    for key in ("R", "S", "lambda_mu_gap", "mubounds"):
        out[key]["holds"] = all(v["holds"] for v in out[key].values())
    return out


# --------------------------------------------------------------------------
# vanishing experiments


def _eta_forward(sys: MapSystem) -> float:
    if sys.eta is not None:
        return float(sys.eta)
    if sys.eta_bounds is not None:
        return float(sys.eta_bounds[0])
    raise ArgumentError(f"system {sys.name!r} declares no conformal factor")


def _omega_of(sys: MapSystem, omega: TwoForm | None) -> TwoForm:
    om = omega or sys.omega
    if om is None:
        raise ArgumentError(f"system {sys.name!r} declares no two-form")
    return om


@dataclass
class VanishingResidual:
    n: np.ndarray
    lhs: float
    rhs: np.ndarray
    ratio: np.ndarray
    bound_holds: bool
    exponent: float

    def to_dict(self) -> dict:
        return {"n": self.n.tolist(), "lhs": self.lhs, "rhs": self.rhs.tolist(),
                "ratio": [None if not np.isfinite(v) else float(v) for v in self.ratio],
                "bound_holds": self.bound_holds, "exponent": self.exponent}


# relative slack for comparing a computed bound against a computed value in floating point
ROUNDING_SLACK = 1e-13


def vanishing_residual(sys: MapSystem, x, u, v, n_range=range(0, 41), omega: TwoForm | None = None
                       ) -> VanishingResidual:
    """``|omega(x)(u, v)|`` against ``eta^-n |omega(f^n x)| |Df^n u| |Df^n v|`` for ``n`` in range."""
    om = _omega_of(sys, omega)
    eta = _eta_forward(sys)
    x = np.asarray(x, dtype=float)
    ns = np.array(list(n_range), dtype=int)
    if len(ns) == 0 or ns.min() < 0:
        raise ArgumentError("n_range must be a nonempty range of non-negative integers")
    n = int(ns.max())
    pu = push_vector(sys, x, u, n, 1, detect_bundle_name(sys, x, u))
    pv = push_vector(sys, x, v, n, 1, detect_bundle_name(sys, x, v))
    norms = om.norm(pu.orbit)
    lhs = float(abs(om(x, np.asarray(u, float), np.asarray(v, float))))
    log_rhs = -np.arange(n + 1) * math.log(eta) + np.log(norms) + pu.log_norms + pv.log_norms
    rhs = np.exp(log_rhs[ns])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lhs > 0, rhs / lhs, np.inf)
    holds = bool(np.all(rhs >= lhs * (1 - ROUNDING_SLACK)))
    lo = ns[len(ns) // 2:]
    exponent = float(np.polyfit(lo, log_rhs[lo], 1)[0]) if len(lo) > 1 else math.nan
    return VanishingResidual(ns, lhs, rhs, ratio, holds, exponent)


def _unit_columns(b: np.ndarray) -> list[np.ndarray]:
    return [b[:, j] / np.linalg.norm(b[:, j]) for j in range(b.shape[-1])]


def _block_value(om: TwoForm, z, a: list, b: list, same: bool) -> tuple[float, bool]:
    if same:
        pairs = list(combinations(range(len(a)), 2))
        vals = [abs(float(om(z, a[i], a[j]))) for i, j in pairs]
    else:
        vals = [abs(float(om(z, p, q))) for p in a for q in b]
    return (max(vals) if vals else 0.0), not vals


BLOCK_CONDITIONS = {
    ("t", "s"): ("mu_plus^(1+a) lambda_plus / eta", lambda r, e, a: r["mu_plus"] ** (1 + a) * r["lambda_plus"] / e),
    ("t", "u"): ("mu_minus^(1+a) lambda_minus eta", lambda r, e, a: r["mu_minus"] ** (1 + a) * r["lambda_minus"] * e),
    ("s", "s"): ("mu_plus^a lambda_plus^2 / eta", lambda r, e, a: r["mu_plus"] ** a * r["lambda_plus"] ** 2 / e),
    ("u", "u"): ("mu_minus^a lambda_minus^2 eta", lambda r, e, a: r["mu_minus"] ** a * r["lambda_minus"] ** 2 * e),
    ("t", "t"): ("min(mu_plus^(2+a) / eta, mu_minus^(2+a) eta)",
                 lambda r, e, a: min(r["mu_plus"] ** (2 + a) / e, r["mu_minus"] ** (2 + a) * e)),
}


def _block_table(sys, points, rates, eta, alpha, omega) -> list[dict]:
    om = _omega_of(sys, omega)
    rows = []
    for (p, q), (label, fn) in BLOCK_CONDITIONS.items():
        worst, vacuous = 0.0, True
        for z in np.atleast_2d(points):
            a = _unit_columns(bundle_basis(sys, z, p))
            b = _unit_columns(bundle_basis(sys, z, q))
            val, vac = _block_value(om, z, a, b, p == q)
            worst, vacuous = max(worst, val), vacuous and vac
        cond = fn(rates, eta, alpha)
        rows.append({"block": f"{p}{q}", "max_abs": worst, "vacuous": vacuous, "condition": label,
                     "condition_value": cond, "condition_holds": bool(cond < 1)})
    return rows


def block_vanishing_check(sys: MapSystem, points, rates=None, omega: TwoForm | None = None,
                          fibers=None) -> dict:
    """Largest ``|omega|`` on each bundle block at points of the manifold, with governing conditions.

    ``fibers`` (accepted stable fibers) adds the fiber analogue: the pairing of the fiber
    tangent with the tangent space of the stable manifold at each fiber point.
    """
    r = _rates(rates if rates is not None else sys)
    eta = _eta_forward(sys)
    out = {"blocks": _block_table(sys, points, r, eta, 0.0, omega)}
    if fibers:
        out["fiber_blocks"] = [fiber_block(sys, fb, omega) for fb in fibers]
    return out


def _pulled_back(sys, y_mp, vecs, steps: int, sign: int):
    """Transport vectors given at ``f^N(y)`` back to ``y`` in extended precision."""
    orbit = _shadow.mp_orbit(sys, y_mp, steps, sign)
    out = []
    for v in vecs:
        w = mpmath.matrix([mpmath.mpf(c) for c in v])
        for k in range(steps, 0, -1):
            w = _shadow.mp_jac(sys, orbit[k], -sign) * w
            w = w / mpmath.norm(w)
        out.append(np.array([float(c) for c in w]))
    return out, orbit


def fiber_block(sys: MapSystem, fiber, omega: TwoForm | None = None) -> dict:
    """``omega(y)(v_fiber, v_manifold)`` at fiber points.

    Tangents at ``y`` are obtained by transporting the declared bundles at ``f^N(x)`` back
    along the extended-precision orbit of ``y``: the bundle of the fiber side gives the fiber
    tangent and the manifold tangent plus that bundle span the tangent of the stable
    (or unstable) manifold of the whole invariant set.
    """
    om = _omega_of(sys, omega)
    sign = 1 if fiber.side == "s" else -1
    x = fiber.footpoint
    steps = fiber.horizon
    same_worst, cross_worst = 0.0, 0.0
    vacuous = True
    for y in fiber.points[1:]:
        y_mp, dps = _shadow.refine(sys, y, steps, side=fiber.side, mode="fiber", x=x)
        with mpmath.workdps(dps):
            xn = to_float(_shadow.mp_orbit(sys, to_mp(x), steps, sign)[-1])
            fib = bundle_basis(sys, xn, fiber.side)
            vacuous = fib.shape[1] < 2
            tan = bundle_basis(sys, xn, "t")
            vs, _ = _pulled_back(sys, y_mp, [fib[:, j] for j in range(fib.shape[1])], steps, sign)
            vt, _ = _pulled_back(sys, y_mp, [tan[:, j] for j in range(tan.shape[1])], steps, sign)
        yf = to_float(y_mp)
        val, _ = _block_value(om, yf, vs, vs, True)
        same_worst = max(same_worst, val)
        for a in vs:
            for b in vt:
                cross_worst = max(cross_worst, abs(float(om(yf, a, b))))
    return {"side": fiber.side, "same_block": same_worst, "same_block_vacuous": vacuous,
            "cross_block": cross_worst, "points": len(fiber.points) - 1}


def unbounded_vanishing_check(sys: MapSystem, points, alpha: float = 0.0, rates=None,
                              omega: TwoForm | None = None) -> list[dict]:
    """Implication table for forms of polynomial growth ``|omega(x)| <= B + A d(x, anchor)^alpha``."""
    if alpha < 0:
        raise ArgumentError("growth exponent must be non-negative")
    r = _rates(rates if rates is not None else sys)
    return _block_table(sys, points, r, _eta_forward(sys), alpha, omega)


# --------------------------------------------------------------------------
# exterior-derivative check


def _three_form_norm(beta: TwoForm, z) -> float:
    """Frobenius bound ``sqrt(6 sum_{i<j<k} d beta_{ijk}^2)`` of ``d beta`` at ``z``."""
    d = beta.dim
    e = np.eye(d)
    acc = 0.0
    for i, j, k in combinations(range(d), 3):
        acc += exterior_derivative_value(beta, z, e[i], e[j], e[k]) ** 2
    return math.sqrt(6 * acc)


@dataclass
class DerivativeVanishing:
    lhs: float
    pushed: np.ndarray
    bound: np.ndarray
    exponent: float

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "pushed": self.pushed.tolist(), "bound": self.bound.tolist(),
                "exponent": self.exponent}


def derivative_vanishing_check(sys: MapSystem, y, v_t, w_t, u_s, n: int = 30,
                               beta: TwoForm | None = None) -> DerivativeVanishing:
    """``d beta(y)(v_t, w_t, u_s)`` with the pushed values and the decay bound along the orbit.

    ``pushed[k] = eta^-k |d beta(f^k y)(Df^k v_t, Df^k w_t, Df^k u_s)|`` equals ``lhs`` for an
    invariant form; ``bound[k]`` replaces the value by the norm product and decays at the
    rate ``mu_plus^2 lambda_plus / eta``.
    """
    b = _omega_of(sys, beta)
    eta = _eta_forward(sys)
    y = np.asarray(y, dtype=float)
    vecs = [np.asarray(a, dtype=float) for a in (v_t, w_t, u_s)]
    pushes = [push_vector(sys, y, a, n, 1, detect_bundle_name(sys, y, a)) for a in vecs]
    orbit = pushes[0].orbit
    lhs = abs(exterior_derivative_value(b, y, *vecs))
    pushed, bound = np.zeros(n + 1), np.zeros(n + 1)
    for k in range(n + 1):
        scale = math.exp(sum(p.log_norms[k] for p in pushes) - k * math.log(eta))
        units = [p.units[k] for p in pushes]
        pushed[k] = scale * abs(exterior_derivative_value(b, orbit[k], *units))
        bound[k] = scale * _three_form_norm(b, orbit[k])
    lo = np.arange(n // 2, n + 1)
    exponent = float(np.polyfit(lo, np.log(bound[lo]), 1)[0]) if np.all(bound[lo] > 0) else -math.inf
    return DerivativeVanishing(lhs, pushed, bound, exponent)


def fiber_rate(sys: MapSystem, fiber, index: int = 1, n: int | None = None) -> RateFit:
    """Contraction rate of the fiber tangent at a fiber point, from transported chords in extended precision."""
    if index < 1 or index >= len(fiber.points) - 1:
        raise ArgumentError("index must select an interior fiber point")
    sign = 1 if fiber.side == "s" else -1
    n = n or fiber.horizon
    y0, y1 = fiber.points[index], fiber.points[index + 1]
    a_mp, dps = _shadow.refine(sys, y0, n, side=fiber.side, mode="fiber", x=fiber.footpoint)
    b_mp, _ = _shadow.refine(sys, y1, n, side=fiber.side, mode="fiber", x=fiber.footpoint, dps=dps)
    with mpmath.workdps(dps):
        oa = _shadow.mp_orbit(sys, a_mp, n, sign)
        ob = _shadow.mp_orbit(sys, b_mp, n, sign)
        logs = np.array([float(mpmath.log(mpmath.sqrt(sum((p[i] - q[i]) ** 2 for i in range(sys.dim)))))
                         for p, q in zip(oa, ob)])
    slope, icpt, resid, win = _tail_fit(logs, n)
    half, _, _, _ = _tail_fit(logs[: n // 2 + 1], n // 2)
    return RateFit(float(math.exp(slope)), slope, float(math.exp(icpt)), win, resid,
                   float(abs(math.exp(slope) - math.exp(half))), "fiber-chord", fiber.side, None, logs)


def cubic_test_form(dim: int, i: int, j: int, k: int) -> TwoForm:
    """Non-closed form ``(z_k + z_k^3 / 3) dz_i ^ dz_j`` whose derivative is ``(1 + z_k^2) dz_k ^ dz_i ^ dz_j``."""
    if len({i, j, k}) < 3:
        raise ArgumentError("indices must be distinct")

    def fn(z):
        m = np.zeros(z.shape[:-1] + (dim, dim))
        c = z[..., k] + z[..., k] ** 3 / 3.0
        m[..., i, j] = c
        m[..., j, i] = -c
        return m

    return TwoForm(fn, dim)
