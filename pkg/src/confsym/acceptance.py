"""Acceptance battery: one function per criterion, each returning measured values, thresholds and a verdict."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import actions, geometry, manifolds, rates, scattering, topology
from .dynamics import registry_get
from .systems import flex_admissible


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    checks: dict
    runtime: float = 0.0
    budget: float = math.inf
    notes: list = field(default_factory=list)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] criterion {self.number:2d} {self.name}: {self.runtime:.1f}s (budget {self.budget:g}s)"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed, "checks": self.checks,
                "runtime": self.runtime, "budget": self.budget, "notes": self.notes}


def _check(value: float, tol: float, kind: str = "le") -> dict:
    ok = value <= tol if kind == "le" else value >= tol
    return {"value": float(value), "tolerance": float(tol), "relation": kind, "passed": bool(ok)}


def _finish(number, name, checks, start, budget, notes=()) -> CriterionResult:
    runtime = time.perf_counter() - start
    passed = all(c["passed"] for c in checks.values())
    return CriterionResult(number, name, passed, checks, runtime, budget, list(notes))


REAL_PAIR_MATRIX = ((1, 1, 0), (1, 2, 1), (0, 1, 2))


def criterion_1(seed: int = 0) -> CriterionResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    checks = {}
    for name in ("dsm", "flex"):
        sys = registry_get(name)
        checks[name] = _check(geometry.conformality_residual(sys, sys.sample(rng, 10_000)), 1e-12)
    checks["torus_concrete"] = _check(topology.verify_concrete_map(REAL_PAIR_MATRIX, 0.05, 10_000, seed), 1e-10)
    default_a = registry_get("torus_concrete").params["A"]
    checks["torus_concrete_default"] = _check(topology.verify_concrete_map(default_a, 0.05, 10_000, seed), 1e-10)
    return _finish(1, "conformality", checks, start, 5)


def criterion_2(seed: int = 0) -> CriterionResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    exact = registry_get("dsm")
    pts = exact.sample(rng, 1000)
    loop = geometry.circle_loop(np.array([0.3, 0.0]), 1, exact.periodic)
    rep = geometry.exactness_residual(exact, exact.alpha, exact.primitive, pts, [loop])
    plain = registry_get("dsm", mu=0.1, sigma=0.0)
    rep0 = geometry.exactness_residual(plain, plain.alpha, None, pts[:10], [loop])
    checks = {
        "pointwise_exact": _check(rep.pointwise, 1e-10),
        "period_exact": _check(abs(rep.periods[0]), 1e-10),
        "period_equals_mu": _check(abs(rep0.periods[0] - 0.1), 1e-10),
    }
    return _finish(2, "exactness dichotomy", checks, start, 5)


def _random_flex(rng):
    while True:
        lam = rng.uniform(0.1, 0.9, 2)
        mu = rng.uniform(1.0, 1.5, 2)
        eta = rng.uniform(0.6, 1.0)
        if flex_admissible(lam, mu, eta):
            return lam, mu, eta


def criterion_3(seed: int = 0, count: int = 100) -> CriterionResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        lam, mu, eta = _random_flex(rng)
        sys = registry_get("flex", lam=tuple(lam), mu=tuple(mu), eta=eta)
        rep = rates.compute_rate_report(sys, np.zeros(sys.dim), n_max=200)
        pc = rates.pairing_check(rep, eta)
        worst = max(worst, pc["res_lambda"], pc["res_mu"])
    deg = registry_get("degenerate")
    p = deg.params
    res_l = rates.pairing_check(rates.compute_rate_report(deg, np.zeros(deg.dim)), p["eta"])["res_lambda"]
    closed_l = abs(p["a"] * p["eta"] / p["c"] - p["eta"])
    unb = registry_get("unbounded")
    res_m = rates.pairing_check(rates.compute_rate_report(unb, np.zeros(unb.dim)), float(unb.eta))["res_mu"]
    closed_m = abs(1 - math.exp(unb.params["t"]))
    checks = {
        "flex_pairing": _check(worst, 1e-6),
        "degenerate_res_lambda": _check(abs(res_l - closed_l), 1e-6),
        "unbounded_res_mu": _check(abs(res_m - closed_m), 1e-6),
    }
    return _finish(3, "pairing rules", checks, start, 30)


def criterion_4(seed: int = 0) -> CriterionResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    fl = registry_get("flex")
    pts = 0.1 * rng.normal(size=(5, fl.dim))
    pts[:, list(fl.model.normal_idx)] = 0.0
    blocks = rates.block_vanishing_check(fl, pts)["blocks"]
    off = max(b["max_abs"] for b in blocks if b["block"] in ("ts", "tu", "ss", "uu"))
    ct = registry_get("coupled_test")
    r = ct.rates
    x = np.array([0.0, 0.3, 0.0, 0.0])
    es = rates.bundle_basis(ct, x, "s")[:, 0]
    et = np.array([0.0, 1.0, 0.0, 0.0])
    eta = float(ct.eta)
    e1 = rates.vanishing_residual(ct, x, es, et).exponent
    e2 = rates.vanishing_residual(ct, x, es, 2 * es).exponent
    t1 = math.log(r["lambda_plus"] * r["mu_plus"] / eta)
    t2 = math.log(r["lambda_plus"] ** 2 / eta)
    checks = {
        "flex_off_diagonal": _check(off, 1e-14),
        "coupled_ts_exponent_rel": _check(abs(e1 - t1) / abs(t1), 0.1),
        "coupled_ss_exponent_rel": _check(abs(e2 - t2) / abs(t2), 0.1),
    }
    return _finish(4, "vanishing residuals", checks, start, 60)


def criterion_5() -> CriterionResult:
    start = time.perf_counter()
    A = ((2, 1), (1, 1))
    k0 = (1, 0)
    graph = manifolds.solve_invariant_graph(A, 0.3, manifolds.TrigPoly.cosine(k0))
    inv_t = np.array(topology.int_inverse(A), dtype=np.int64).T
    k = np.array(k0, dtype=np.int64)
    worst = 0.0
    for j in range(9):
        k = inv_t @ k
        worst = max(worst, abs(graph.coeffs.get(tuple(int(v) for v in k), 0) - 0.5 * 0.3**j))
    checks = {"coefficient_law": _check(worst, 1e-10), "series_vs_fixed_point": _check(graph.fixed_point_gap, 1e-12)}
    return _finish(5, "graph transform", checks, start, 10)


def criterion_6() -> CriterionResult:
    start = time.perf_counter()
    fl = registry_get("flex")
    p = fl.params
    e = np.eye(fl.dim)
    tang = [e[p["u"][0]] + 0.3 * e[p["x"][0]], e[p["v"][0]] + 0.2 * e[p["x"][0]]]
    grid = np.array([[a, b] for a in (-0.5, 0.5) for b in (-0.5, 0.5)])
    flex_fit = manifolds.channel_convergence(fl, manifolds.affine_patch(np.zeros(fl.dim), tang), grid, n_max=20)
    target_flex = fl.rates["lambda_plus"] * fl.rates["mu_minus"]
    ct = registry_get("coupled_test")
    target_ct = ct.rates["lambda_plus"] * ct.rates["mu_minus"]
    patch = lambda c: scattering.stable_patch_point(ct, c, 1e-2)  # noqa: E731
    ct_fit = manifolds.channel_convergence(ct, patch, [[0.01, 0.3], [-0.05, 0.2]], n_max=30)
    checks = {
        "flex_c1_rate": _check(abs(flex_fit.c1.rate - target_flex), 1e-3),
        "coupled_c1_rate_rel": _check(abs(ct_fit.c1.rate - target_ct) / target_ct, 0.1),
    }
    return _finish(6, "channel convergence", checks, start, 60)


def scattering_samples(n_side: int = 5) -> np.ndarray:
    grid = [(i, t) for i in np.linspace(-0.08, 0.08, n_side) for t in np.linspace(0.17, 0.33, n_side)]
    return np.array([[i, t, 0.0, 0.0] for i, t in grid])


def _coupled(eps: float = 1e-3):
    sys = registry_get("coupled_test", eps=eps)
    return sys, scattering.coupled_channel(sys)


def criterion_7(n_side: int = 5) -> CriterionResult:
    start = time.perf_counter()
    sys, ch = _coupled()
    pts = scattering_samples(n_side)
    sym = scattering.symplecticity_residual_S(sys, pts, ch, tol=1e-9)
    abl = scattering.symplecticity_residual_S(sys, pts, ch, tol=1e-9, pullback=False, skip_outside=True)
    checks = {"symplecticity": _check(sym["residual"], 1e-6), "ablation": _check(abl["residual"], 1e-2, "ge")}
    notes = [f"ablation evaluated on {len(abl['per_sample'])} of {len(pts)} samples; "
             f"{abl['skipped']} leave the channel image without the pullback"]
    return _finish(7, "scattering symplecticity", checks, start, 600, notes)


def criterion_8(n_side: int = 5) -> CriterionResult:
    start = time.perf_counter()
    sys, ch = _coupled()
    pts = scattering_samples(n_side)
    ex = actions.scattering_exactness(sys, pts, ch)
    norm = actions.gauge_covariance(sys, pts, ch, actions.test_gauge(sys, True))
    cov = actions.gauge_covariance(sys, pts, ch, actions.test_gauge(sys, False))
    checks = {"exactness": _check(ex["residual"], 1e-6), "normalized_gauge": _check(norm["residual"], 1e-8),
              "gauge_covariance": _check(cov["residual"], 1e-8)}
    return _finish(8, "scattering exactness", checks, start, 300)


def criterion_9() -> CriterionResult:
    start = time.perf_counter()
    sys, ch = _coupled()
    y = ch.seed.point
    spread = max(actions.primitive_wave(sys, y, s, n_values=range(1, 21)).spread for s in (1, -1))
    gauge = actions.convergent_gauge(sys, ch)
    bnd = max(abs(actions.entry_boundary(sys, y, s, gauge)["boundary"]) for s in (1, -1))
    checks = {"n_invariance": _check(spread, 1e-8), "gauged_entry_boundary": _check(bnd, 1e-10)}
    return _finish(9, "primitive series", checks, start, 120)


def criterion_10() -> CriterionResult:
    start = time.perf_counter()
    sys = registry_get("dsm")
    q, p = actions.stationarity_orbit(sys, [0.1, 0.2], 50)
    rep = actions.discounted_stationarity(sys, q, p)
    return _finish(10, "discounted stationarity", {"residual": _check(rep.residual, 1e-9)}, start, 5)


def criterion_11(seed: int = 0, count: int = 50) -> CriterionResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    det_ok = mult_ok = True
    spec = 0.0
    for k in range(count):
        d = 3 + k % 3
        a = topology.random_unimodular(d, rng)
        b = topology.random_unimodular(d, rng)
        det_ok &= topology.determinant_law_holds(a)
        mult_ok &= all(topology.multiplicativity_holds(a, b).values())
        spec = max(spec, topology.spectrum_law_residual(a))
    a2 = ((2, 1), (1, 1))
    d2 = topology.wedge_square(a2).matrix == ((topology.int_det(a2),),)
    checks = {"determinant_law": _check(0.0 if det_ok else 1.0, 0.0),
              "multiplicativity": _check(0.0 if mult_ok else 1.0, 0.0),
              "spectrum_law": _check(spec, 1e-10),
              "d2_is_det": _check(0.0 if d2 else 1.0, 0.0)}
    return _finish(11, "cohomology", checks, start, 10)


def criterion_12(n_side: int = 5, tol: float = 1e-12) -> CriterionResult:
    start = time.perf_counter()
    sys, ch = _coupled()
    eqv = 0.0
    for x in scattering_samples(n_side):
        y = scattering.scattering_eval(sys, x, ch).y
        for sign in (1, -1):
            eqv = max(eqv, scattering.equivariance_residual(sys, y, sign, tol))
    ident = 0.0
    for x in scattering_samples(3):
        for sign in (1, -1):
            foot = scattering.wave_map(sys, x, sign, tol).footpoint
            ident = max(ident, float(np.linalg.norm(geometry.circle_diff(foot, x, sys.periodic))))
    checks = {"equivariance": _check(eqv, 10 * tol), "identity_on_manifold": _check(ident, 1e-12)}
    return _finish(12, "wave-map contract", checks, start, 60)


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
            7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11, 12: criterion_12}


def run(numbers=None, echo=None) -> list[CriterionResult]:
    out = []
    for n in numbers or sorted(CRITERIA):
        res = CRITERIA[n]()
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
