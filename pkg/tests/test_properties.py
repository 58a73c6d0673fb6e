import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from confsym import geometry, topology
from confsym.dynamics import registry_get


@settings(max_examples=30, deadline=None)
@given(eta=st.floats(0.3, 0.99), mu=st.floats(-0.5, 0.5), eps=st.floats(0.0, 1.0))
def test_dsm_is_conformal_for_any_parameters(eta, mu, eps):
    sys = registry_get("dsm", eta=eta, mu=mu, eps=eps)
    pts = sys.sample(np.random.default_rng(1), 50)
    assert geometry.conformality_residual(sys, pts) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(eta=st.floats(0.3, 0.99), mu=st.floats(0.01, 0.5))
def test_dsm_critical_shift_is_exact(eta, mu):
    sys = registry_get("dsm", eta=eta, mu=mu)
    pts = sys.sample(np.random.default_rng(2), 50)
    rep = geometry.exactness_residual(sys, sys.alpha, sys.primitive, pts)
    assert rep.pointwise <= 1e-10


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 5))
def test_wedge_square_laws(seed, d):
    rng = np.random.default_rng(seed)
    a = topology.random_unimodular(d, rng)
    b = topology.random_unimodular(d, rng)
    assert topology.determinant_law_holds(a)
    assert all(topology.multiplicativity_holds(a, b).values())
    c = topology.compound_square(topology.int_matmul(a, b))
    assert c == topology.int_matmul(topology.compound_square(a), topology.compound_square(b))


@settings(max_examples=40, deadline=None)
@given(entries=st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_two_torus_action_is_the_determinant(entries):
    a = (tuple(entries[:2]), tuple(entries[2:]))
    if abs(topology.int_det(a)) != 1:
        return
    assert topology.wedge_square(a).matrix == ((topology.int_det(a),),)
