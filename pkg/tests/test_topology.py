import numpy as np
import pytest

from confsym import topology
from confsym.errors import ArgumentError


def test_two_torus_wedge_square_is_determinant():
    a = ((2, 1), (1, 1))
    assert topology.wedge_square(a).matrix == ((topology.int_det(a),),)


def test_concrete_three_torus_example():
    act = topology.wedge_square(((0, 1, 0), (0, 0, 1), (1, 1, 0)))
    assert act.matrix == ((0, -1, 0), (0, 0, -1), (1, 0, -1))
    assert act.pairs == ((0, 1), (0, 2), (1, 2))


def test_charpoly_of_companion_matrix():
    assert topology.charpoly(((0, 1, 0), (0, 0, 1), (1, 1, 0))) == [1, 0, -1, -1]


def test_non_unimodular_rejected():
    with pytest.raises(ArgumentError):
        topology.TorusAutomorphism(((2, 0), (0, 1)))


def test_laws_on_random_unimodular(rng):
    for d in (3, 4, 5):
        a = topology.random_unimodular(d, rng)
        b = topology.random_unimodular(d, rng)
        assert topology.determinant_law_holds(a)
        assert all(topology.multiplicativity_holds(a, b).values())
        assert topology.spectrum_law_residual(a) <= 1e-10


def test_inverse_is_integer_inverse(rng):
    a = topology.random_unimodular(4, rng)
    prod = topology.int_matmul(a, topology.int_inverse(a))
    assert prod == tuple(tuple(int(i == j) for j in range(4)) for i in range(4))


def test_admissible_factors_positive_real():
    adm = topology.admissible_factors(((0, 1, 0), (0, 0, 1), (1, 1, 0)))
    assert all(v > 0 for v in adm.positive_real)
    assert adm.charpoly == (1, 1, 0, -1)


def test_concrete_map_is_conformal():
    assert topology.verify_concrete_map(((1, 1, 0), (1, 2, 1), (0, 1, 2)), 0.05, 500, 0) <= 1e-10


def test_commuting_closure_of_powers():
    a = ((2, 1), (1, 1))
    assert topology.commuting_closure_residual(a, topology.int_matmul(a, a)) <= 1e-10
    assert np.isfinite(topology.exact_spectrum([1, -3, 1])).all()
