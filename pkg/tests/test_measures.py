import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from recomb.errors import FeasibilityError, ValidationError
from recomb.genome import GenomeLayout, linkset
from recomb.measures import (TypeDistribution, TypeSpace, composite_recombinator,
                             composite_recombinator_sequential, distribution_from_json,
                             distribution_to_json, marginal, recombinator)

P2 = TypeDistribution(TypeSpace.binary(2), [0.5, 0.2, 0.1, 0.2])


def test_type_space_limits():
    with pytest.raises(FeasibilityError):
        TypeSpace((2,) * 25)
    with pytest.raises(ValidationError):
        TypeSpace((2, 0))
    s = TypeSpace((2, 3, 4))
    assert s.size == 24 and s.type_of(s.index((1, 2, 3))) == (1, 2, 3)


def test_distribution_validation():
    with pytest.raises(ValidationError):
        TypeDistribution(TypeSpace.binary(1), [0.6, 0.6])
    with pytest.raises(ValidationError):
        TypeDistribution(TypeSpace.binary(1), [1.5, -0.5])
    with pytest.raises(ValidationError):
        TypeDistribution(TypeSpace.binary(2), [1.0])
    with pytest.raises(ValueError):
        P2.weights[0] = 1.0


def test_marginal_examples():
    assert np.allclose(marginal(P2, [0]).weights, [0.7, 0.3])
    assert np.allclose(marginal(P2, [1]).weights, [0.6, 0.4])
    s = TypeSpace((2, 3, 2))
    d = TypeDistribution.point_mass(s, (1, 2, 0))
    assert np.array_equal(marginal(d, [0, 2]).weights, TypeDistribution.point_mass(s.sub([0, 2]), (1, 0)).weights)
    assert np.allclose(marginal(TypeDistribution.uniform(s), [1]).weights, 1 / 3)
    with pytest.raises(ValidationError):
        marginal(P2, [])


def test_recombinator_examples():
    assert np.allclose(recombinator(P2, 0).weights, [0.42, 0.28, 0.18, 0.12], atol=1e-15)
    d = TypeDistribution.point_mass(TypeSpace.binary(3), (1, 0, 1))
    assert np.array_equal(recombinator(d, 1).weights, d.weights)
    prod = TypeDistribution.product([[0.3, 0.7], [0.5, 0.5], [0.9, 0.1]])
    assert np.allclose(recombinator(prod, 0).weights, prod.weights, atol=1e-15)
    with pytest.raises(ValidationError):
        recombinator(P2, 1)


def test_composite_extremes():
    rng = np.random.default_rng(3)
    p = TypeDistribution.random(TypeSpace((2, 3, 2, 2)), rng)
    assert np.array_equal(composite_recombinator(p, 0).weights, p.weights)
    full = composite_recombinator(p, 0b111)
    product = TypeDistribution.product([marginal(p, [i]).weights for i in range(4)])
    assert np.allclose(full.weights, product.weights, atol=1e-15)


def test_degenerate_alphabet():
    rng = np.random.default_rng(5)
    p = TypeDistribution.random(TypeSpace((3, 1, 2)), rng)
    # site 1 is fixed, so cutting either side of it factorises the same way
    assert np.allclose(recombinator(p, 0).weights, recombinator(p, 1).weights, atol=1e-15)


spaces = st.lists(st.integers(1, 3), min_size=2, max_size=5)


@settings(max_examples=60, deadline=None)
@given(spaces, st.integers(0, 2**32 - 1))
def test_idempotent_and_commuting(sizes, seed):
    rng = np.random.default_rng(seed)
    p = TypeDistribution.random(TypeSpace(tuple(sizes)), rng)
    n = len(sizes) - 1
    for a in range(n):
        ra = recombinator(p, a)
        assert np.max(np.abs(recombinator(ra, a).weights - ra.weights)) <= 1e-12
        assert abs(ra.weights.sum() - 1) <= 1e-12 and ra.weights.min() >= 0
        for b in range(a + 1, n):
            ab = recombinator(ra, b).weights
            ba = recombinator(recombinator(p, b), a).weights
            assert np.max(np.abs(ab - ba)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(spaces, st.integers(0, 2**32 - 1), st.data())
def test_composite_matches_fold(sizes, seed, data):
    rng = np.random.default_rng(seed)
    p = TypeDistribution.random(TypeSpace(tuple(sizes)), rng)
    G = data.draw(st.integers(0, (1 << (len(sizes) - 1)) - 1))
    direct = composite_recombinator(p, G).weights
    assert np.max(np.abs(direct - composite_recombinator_sequential(p, G).weights)) <= 1e-12


def test_json_roundtrip():
    p = distribution_from_json({"kind": "product", "site_marginals": [[0.2, 0.8], [1.0]]})
    assert p.space.alphabet_sizes == (2, 1)
    q = distribution_from_json(distribution_to_json(p), p.space)
    assert np.array_equal(p.weights, q.weights)
    with pytest.raises(ValidationError):
        distribution_from_json({"kind": "table", "weights": [1.0]})
    with pytest.raises(ValidationError):
        distribution_from_json({"kind": "nope"})
    with pytest.raises(ValidationError):
        distribution_from_json({"kind": "product", "site_marginals": [[1.0]]}, TypeSpace((2,)))


def test_layout_mismatch():
    with pytest.raises(ValidationError):
        TypeSpace.binary(2).check_layout(GenomeLayout.from_rho([0.1, 0.1]))
