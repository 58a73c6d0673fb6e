import math

import numpy as np
import pytest

from confsym import rates
from confsym.dynamics import registry_get
from confsym.errors import ArgumentError
from confsym.systems import flex_admissible, flex_rates


def test_flex_rates_match_closed_form():
    sys = registry_get("flex")
    rep = rates.compute_rate_report(sys, np.zeros(sys.dim), n_max=200)
    expect = flex_rates(sys.params["lam"], sys.params["mu"], sys.eta)
    for key in ("lambda_plus", "lambda_minus", "mu_plus", "mu_minus"):
        assert getattr(rep, key) == pytest.approx(expect[key], abs=1e-9)
    assert rep.nhim_consistent


def test_flex_pairing_holds():
    sys = registry_get("flex")
    rep = rates.compute_rate_report(sys, np.zeros(sys.dim), n_max=200)
    pc = rates.pairing_check(rep, sys.eta)
    assert pc["holds"] and pc["res_lambda"] <= 1e-12 and pc["res_mu"] <= 1e-12


def test_degenerate_form_breaks_lambda_pairing():
    sys = registry_get("degenerate")
    p = sys.params
    rep = rates.compute_rate_report(sys, np.zeros(sys.dim))
    res = rates.pairing_check(rep, p["eta"])["res_lambda"]
    assert res == pytest.approx(abs(p["a"] * p["eta"] / p["c"] - p["eta"]), abs=1e-6)
    assert res > 1e-3


def test_unbounded_form_breaks_mu_pairing():
    sys = registry_get("unbounded")
    rep = rates.compute_rate_report(sys, np.zeros(sys.dim))
    res = rates.pairing_check(rep, float(sys.eta))["res_mu"]
    assert res == pytest.approx(abs(1 - math.exp(sys.params["t"])), abs=1e-6)


def test_rate_conditions_report_each_inequality():
    sys = registry_get("flex")
    cond = rates.rate_condition_check(sys, sys.eta)
    assert cond["R"]["holds"]
    assert all(v["holds"] for k, v in cond["R"].items() if isinstance(v, dict))


def test_admissibility_sampler_agrees_with_rates(rng):
    for _ in range(20):
        lam, mu, eta = rng.uniform(0.1, 0.9, 2), rng.uniform(1.0, 1.5, 2), rng.uniform(0.6, 1.0)
        if flex_admissible(lam, mu, eta):
            r = flex_rates(lam, mu, eta)
            assert r["lambda_plus"] * r["lambda_minus"] < 1


def test_flex_off_diagonal_blocks_vanish(rng):
    sys = registry_get("flex")
    pts = 0.1 * rng.normal(size=(4, sys.dim))
    pts[:, list(sys.model.normal_idx)] = 0.0
    blocks = rates.block_vanishing_check(sys, pts)["blocks"]
    assert max(b["max_abs"] for b in blocks if b["block"] in ("ts", "tu", "ss", "uu")) <= 1e-14


def test_coupled_vanishing_exponents(coupled):
    r = coupled.rates
    x = np.array([0.0, 0.3, 0.0, 0.0])
    es = rates.bundle_basis(coupled, x, "s")[:, 0]
    et = np.array([0.0, 1.0, 0.0, 0.0])
    e1 = rates.vanishing_residual(coupled, x, es, et).exponent
    t1 = math.log(r["lambda_plus"] * r["mu_plus"] / coupled.eta)
    assert abs(e1 - t1) / abs(t1) <= 0.1
    e2 = rates.vanishing_residual(coupled, x, es, 2 * es).exponent
    t2 = math.log(r["lambda_plus"] ** 2 / coupled.eta)
    assert abs(e2 - t2) / abs(t2) <= 0.1


def test_vanishing_rejects_negative_steps(coupled):
    x = np.array([0.0, 0.3, 0.0, 0.0])
    with pytest.raises(ArgumentError):
        rates.vanishing_residual(coupled, x, x, x, n_range=range(-1, 3))


def test_rates_need_a_manifold():
    with pytest.raises(ArgumentError):
        rates.compute_rate_report(registry_get("dsm"), np.zeros(2))
