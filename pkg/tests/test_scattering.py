import numpy as np
import pytest

from confsym import scattering
from confsym.dynamics import registry_get
from confsym.errors import DomainError, NoIntersectionError
from confsym.geometry import circle_diff
from confsym.manifolds import planar_homoclinic_seed

SAMPLES = np.array([[0.01, 0.3, 0.0, 0.0], [-0.05, 0.2, 0.0, 0.0]])


@pytest.fixture(scope="module")
def uncoupled():
    sys = registry_get("coupled_test", eps=0.0)
    return sys, scattering.coupled_channel(sys)


def test_homoclinic_point_is_certified(channel):
    hp = channel.seed
    assert hp.residual <= 1e-10
    assert hp.transversality > 1e-3 and hp.fiber_angle > 1e-3


def test_uncoupled_homoclinic_point_is_planar(uncoupled):
    sys, ch = uncoupled
    q = planar_homoclinic_seed(registry_get("henon", centered=True))
    hp = scattering.find_homoclinic(sys, np.array([0.0, 0.25, *q]))
    assert np.allclose(hp.point[:2], [0.0, 0.25], atol=1e-12)


def test_perturbed_point_is_close_to_uncoupled(uncoupled, channel):
    assert np.linalg.norm(channel.seed.point - uncoupled[1].seed.point) <= 1e-1


def test_far_seed_has_no_intersection(coupled):
    with pytest.raises((NoIntersectionError, DomainError)):
        scattering.find_homoclinic(coupled, np.array([0.0, 0.25, 5.0, -5.0]))


def test_wave_maps_fix_manifold_points(coupled):
    for x in SAMPLES:
        for sign in (1, -1):
            foot = scattering.wave_map(coupled, x, sign).footpoint
            assert np.linalg.norm(circle_diff(foot, x, coupled.periodic)) <= 1e-12


def test_uncoupled_wave_map_keeps_center_coordinates(uncoupled):
    sys, ch = uncoupled
    y = ch.point(np.array([0.02, 0.27]))
    foot = scattering.wave_map(sys, y, 1).footpoint
    assert np.allclose(foot[:2], y[:2], atol=1e-12)


def test_uncoupled_scattering_map_is_identity(uncoupled):
    sys, ch = uncoupled
    s = scattering.scattering_eval(sys, SAMPLES[0], ch)
    assert np.linalg.norm(circle_diff(s.x_plus, s.x_minus, sys.periodic)) <= 1e-9


def test_equivariance(coupled, channel):
    y = scattering.scattering_eval(coupled, SAMPLES[0], channel).y
    for sign in (1, -1):
        assert scattering.equivariance_residual(coupled, y, sign) <= 1e-11


def test_scattering_map_is_symplectic(coupled, channel):
    res = scattering.symplecticity_residual_S(coupled, SAMPLES, channel)
    assert res["residual"] <= 1e-6


def test_dropping_the_pullback_breaks_symplecticity(coupled, channel):
    res = scattering.symplecticity_residual_S(coupled, SAMPLES[:1], channel, pullback=False)
    assert res["residual"] >= 1e-2


def test_scattering_moves_points_when_coupled(coupled, channel):
    s = scattering.scattering_eval(coupled, SAMPLES[0], channel)
    assert np.linalg.norm(s.x_plus - s.x_minus) > 1e-4
    assert s.err_minus <= 1e-9 and s.err_plus <= 1e-9


def test_channel_is_symplectic_and_transverse(coupled, channel):
    ka = scattering.kernel_alignment(coupled, np.array([0.0, 0.25]))
    assert ka["angle"] <= 1e-8
    assert scattering.channel_symplecticity(coupled, channel, [np.array([0.0, 0.25])]) > 0.1


def test_outside_patch_raises(coupled, channel):
    with pytest.raises(DomainError):
        scattering.scattering_eval(coupled, np.array([0.9, 0.25, 0.0, 0.0]), channel)


def test_determinism(coupled, channel):
    a = scattering.scattering_eval(coupled, SAMPLES[1], channel).to_dict()
    b = scattering.scattering_eval(coupled, SAMPLES[1], channel).to_dict()
    assert a == b
