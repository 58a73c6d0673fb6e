import numpy as np
import pytest

from confsym import actions, scattering
from confsym.dynamics import registry_get
from confsym.errors import ConfigurationError, TwistError
from confsym.manifolds import planar_homoclinic_seed
from confsym.systems import dsm_action_form

SAMPLES = np.array([[0.01, 0.3, 0.0, 0.0], [-0.05, 0.2, 0.0, 0.0]])


def test_path_integral_of_exact_form_depends_on_endpoints_only():
    alpha = dsm_action_form(0.0)
    t = np.linspace(0.0, 1.0, 33)[:, None]
    straight = (1 - t) * np.array([0.1, 0.2]) + t * np.array([0.4, 0.9])
    value, err = actions.path_integral(alpha, list(straight))
    # I dtheta along a segment: mean momentum times angle change
    assert value == pytest.approx(0.25 * 0.7, abs=1e-12)
    assert err <= 1e-12


def test_series_does_not_depend_on_truncation(coupled, channel):
    for sign in (1, -1):
        ser = actions.primitive_wave(coupled, channel.seed.point, sign, n_values=range(1, 12))
        assert ser.spread <= 1e-8
        assert [r[0] for r in ser.csv_rows()] == list(range(1, 12))


def test_uncoupled_scattering_primitive_is_the_planar_loop_action():
    sys = registry_get("coupled_test", eps=0.0)
    ch = scattering.coupled_channel(sys)
    values = [actions.scattering_primitive_value(sys, x, ch) for x in SAMPLES]
    assert abs(values[0] - values[1]) <= 1e-9
    h = registry_get("henon", centered=True)
    hp = scattering.find_homoclinic(h, planar_homoclinic_seed(h))
    loop = actions.primitive_value(h, hp.point, -1)[0] - actions.primitive_value(h, hp.point, 1)[0]
    assert values[0] == pytest.approx(loop, abs=1e-9)


def test_scattering_primitive_routes_agree(coupled, channel):
    ps = actions.primitive_scattering(coupled, SAMPLES[0], channel)
    assert ps.agreement <= 1e-8


def test_scattering_exactness(coupled, channel):
    assert actions.scattering_exactness(coupled, SAMPLES[:1], channel)["residual"] <= 1e-6


def test_normalized_gauge_leaves_scattering_primitive_unchanged(coupled, channel):
    res = actions.gauge_covariance(coupled, SAMPLES[:1], channel, actions.test_gauge(coupled, True))
    assert res["residual"] <= 1e-8


def test_convergent_gauge_kills_entry_boundary(coupled, channel):
    gauge = actions.convergent_gauge(coupled, channel)
    assert abs(actions.entry_boundary(coupled, channel.seed.point, 1, gauge)["boundary"]) <= 1e-10


def test_convergent_gauge_rejects_wide_tube(coupled, channel):
    with pytest.raises(ConfigurationError):
        actions.convergent_gauge(coupled, channel, rho=10.0)


def test_plateau_profile():
    r = np.array([0.0, 0.3, 0.5, 0.75, 1.0, 2.0])
    b = actions.plateau_bump(r)
    assert np.allclose(b[:3], 1.0) and np.allclose(b[4:], 0.0)
    assert 0.0 < b[3] < 1.0


def test_discounted_orbit_is_stationary():
    sys = registry_get("dsm")
    q, p = actions.stationarity_orbit(sys, [0.1, 0.2], 50)
    assert actions.discounted_stationarity(sys, q, p).residual <= 1e-9


def test_perturbed_orbit_is_not_stationary():
    sys = registry_get("dsm")
    q, p = actions.stationarity_orbit(sys, [0.1, 0.2], 20)
    q = q.copy()
    q[10] += 1e-6
    assert actions.discounted_stationarity(sys, q).euler_lagrange > 1e-7


def test_map_without_twist_is_rejected():
    sys = registry_get("dsm")
    eta = sys.eta

    def fwd(z, xp):
        return np.stack([eta * z[..., 0], z[..., 1]], axis=-1)

    flat = sys.with_params(forward=fwd, jacobian=lambda z, xp: np.array([[eta, 0.0], [0.0, 1.0]]))
    with pytest.raises(TwistError):
        actions.discounted_stationarity(flat, [0.1, 0.2, 0.3])


def test_lower_bound_probe_grows_linearly():
    radii = [1.0, 2.0, 4.0, 8.0]
    plain = actions.action_lower_bound_probe(dsm_action_form(0.0), radii)
    assert plain["slope"] == pytest.approx(1.0, rel=1e-3)
    shifted = actions.action_lower_bound_probe(dsm_action_form(5.0), radii)
    assert shifted["slope"] == pytest.approx(1.0, rel=1e-3)
    assert shifted["intercept"] == pytest.approx(5.0, rel=1e-3)
