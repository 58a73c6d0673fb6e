import numpy as np
import pytest

from confsym import manifolds, topology
from confsym.dynamics import registry_get
from confsym.errors import ArgumentError


def test_graph_coefficients_follow_the_cascade():
    A, lam, k0 = ((2, 1), (1, 1)), 0.3, (1, 0)
    graph = manifolds.solve_invariant_graph(A, lam, manifolds.TrigPoly.cosine(k0))
    inv_t = np.array(topology.int_inverse(A), dtype=np.int64).T
    k = np.array(k0, dtype=np.int64)
    for j in range(9):
        k = inv_t @ k
        assert abs(graph.coeffs.get(tuple(int(v) for v in k), 0) - 0.5 * lam**j) <= 1e-10
    assert graph.fixed_point_gap <= 1e-12


def test_graph_invariance_on_samples(rng):
    sys = registry_get("skew_graph")
    A = sys.params["A"]
    theta = rng.uniform(size=(100, 2))
    for side, forcing in (("s", "a_s"), ("u", "a_u")):
        res = manifolds.graph_invariance_residual(A, sys.extras[f"graph_{side}"], sys.extras[forcing], theta)
        assert res <= 1e-10


def test_regularity_is_finite_for_rate_limited_graph():
    sys = registry_get("skew_graph")
    est = manifolds.regularity_estimate(sys.extras["graph_s"], sys.params["A"])
    assert est.exponent is None or np.isfinite(est.exponent)
    assert est.ceiling > 0


def test_coupled_stable_fiber_contract(coupled):
    fb = manifolds.local_fiber(coupled, np.array([0.0, 0.3, 0.0, 0.0]), "s")
    c, d = manifolds.verify_fiber(coupled, fb)
    assert c <= 2.0 and len(fb.points) > 5
    assert fb.to_csv().splitlines()[0].startswith("s,z0")


def test_fiber_rejects_bad_seed_offset(coupled):
    with pytest.raises(ArgumentError):
        manifolds.local_fiber(coupled, np.array([0.0, 0.3, 0.0, 0.0]), "s", delta=1.0)


def test_decay_fit_recovers_rate():
    d = 3.0 * 0.4 ** np.arange(30)
    fit = manifolds.fit_decay(d)
    assert fit.rate == pytest.approx(0.4, rel=1e-10)


def test_flex_channel_convergence_rate():
    fl = registry_get("flex")
    p = fl.params
    e = np.eye(fl.dim)
    tang = [e[p["u"][0]] + 0.3 * e[p["x"][0]], e[p["v"][0]] + 0.2 * e[p["x"][0]]]
    grid = np.array([[a, b] for a in (-0.5, 0.5) for b in (-0.5, 0.5)])
    fit = manifolds.channel_convergence(fl, manifolds.affine_patch(np.zeros(fl.dim), tang), grid, n_max=20)
    assert abs(fit.c1.rate - fl.rates["lambda_plus"] * fl.rates["mu_minus"]) <= 1e-3


def test_planar_homoclinic_seed_lies_on_both_branches():
    h = registry_get("henon", centered=True)
    q = manifolds.planar_homoclinic_seed(h)
    assert np.all(np.isfinite(q)) and np.linalg.norm(q) > 1e-3
