import numpy as np
import pytest

from confsym import geometry
from confsym.dynamics import registry_get
from confsym.errors import ArgumentError


@pytest.mark.parametrize("name", ["dsm", "flex", "degenerate", "unbounded", "coupled_test", "henon"])
def test_conformality_of_registered_systems(name, rng):
    sys = registry_get(name)
    assert geometry.conformality_residual(sys, sys.sample(rng, 500)) <= 1e-12


def test_conformality_detects_wrong_factor(rng):
    sys = registry_get("dsm")
    wrong = sys.with_params(eta=sys.eta * 1.01)
    assert geometry.conformality_residual(wrong, wrong.sample(rng, 50)) > 1e-3


def test_empty_samples_rejected():
    sys = registry_get("dsm")
    with pytest.raises(ArgumentError):
        geometry.conformality_residual(sys, np.zeros((0, 2)))


def test_pullback_matches_pairing_on_vectors(rng):
    sys = registry_get("dsm")
    x = sys.sample(rng, 1)[0]
    u, v = rng.normal(size=2), rng.normal(size=2)
    m = geometry.pullback_matrix(sys, sys.omega, x)
    assert u @ m @ v == pytest.approx(float(geometry.pullback_two_form(sys, sys.omega, x, u, v)), abs=1e-12)


def test_exactness_dichotomy(rng):
    exact = registry_get("dsm")
    pts = exact.sample(rng, 200)
    loop = geometry.circle_loop(np.array([0.3, 0.0]), 1, exact.periodic)
    rep = geometry.exactness_residual(exact, exact.alpha, exact.primitive, pts, [loop])
    assert rep.pointwise <= 1e-10 and abs(rep.periods[0]) <= 1e-10
    plain = registry_get("dsm", mu=0.1, sigma=0.0)
    rep0 = geometry.exactness_residual(plain, plain.alpha, None, pts[:5], [loop])
    assert rep0.periods[0] == pytest.approx(0.1, abs=1e-10)


def test_gauge_shift_changes_primitive_only(rng):
    sys = registry_get("dsm")
    gauge = geometry.GaugeFunction(lambda z: np.sin(2 * np.pi * z[..., 1]) * z[..., 0],
                                   lambda z: np.stack([np.sin(2 * np.pi * z[..., 1]),
                                                       2 * np.pi * np.cos(2 * np.pi * z[..., 1]) * z[..., 0]],
                                                      axis=-1))
    shifted = geometry.gauge_shift_primitive(sys.primitive, gauge, sys)
    x = sys.sample(rng, 5)
    expect = sys.primitive(x) + gauge(sys.f(x)) - sys.eta * gauge(x)
    assert np.allclose(shifted(x), expect, atol=1e-13)


def test_closed_form_has_zero_derivative(rng):
    sys = registry_get("flex")
    x = rng.normal(size=sys.dim)
    u, v, w = rng.normal(size=(3, sys.dim))
    assert abs(geometry.exterior_derivative_value(sys.omega, x, u, v, w)) <= 1e-8


def test_principal_angles_of_identical_planes():
    a = np.eye(4)[:, :2]
    assert np.allclose(geometry.principal_angles(a, a), 0.0, atol=1e-12)
    b = np.eye(4)[:, 2:]
    assert np.allclose(geometry.principal_angles(a, b), np.pi / 2)
