import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shaptree import randmodels
from shaptree.model import single_leaf_ensemble
from shaptree.oracle import (
    OracleCapError, all_subset_values, expvalue, shapley_brute_force, subset_weight,
)


def permutation_shapley(ensemble, x):
    """Average marginal contribution over all feature orderings (M! of them)."""
    m = ensemble.num_features
    phi = np.zeros(m)
    for order in itertools.permutations(range(m)):
        for k, i in enumerate(order):
            phi[i] += expvalue(ensemble, x, order[:k + 1]) - expvalue(ensemble, x, order[:k])
    return phi / math.factorial(m)


def test_subset_weight_examples():
    assert subset_weight(0, 2) == 0.5
    assert subset_weight(1, 2) == 0.5
    assert subset_weight(3, 8) == pytest.approx(1 / 280, rel=1e-15)
    assert Fraction(math.factorial(3) * math.factorial(4), math.factorial(8)) == Fraction(1, 280)


@pytest.mark.parametrize("k, m", [(-1, 3), (3, 3), (0, 0)])
def test_subset_weight_domain(k, m):
    with pytest.raises(ValueError):
        subset_weight(k, m)


@given(st.integers(1, 60), st.data())
def test_subset_weight_matches_factorials(m, data):
    k = data.draw(st.integers(0, m - 1))
    exact = Fraction(math.factorial(k) * math.factorial(m - k - 1), math.factorial(m))
    assert subset_weight(k, m) == pytest.approx(float(exact), rel=1e-14)


def test_subset_weight_large_m_finite():
    assert 0 < subset_weight(500, 1000) < 1


def test_expvalue_fixture(model_a, both):
    assert expvalue(model_a, both, {0, 1}) == 80
    assert expvalue(model_a, both, set()) == 20
    assert expvalue(model_a, both, {0}) == 40
    assert expvalue(model_a, both, {1}) == 40


def test_expvalue_rejects_bad_subset(model_a, both):
    with pytest.raises(ValueError):
        expvalue(model_a, both, {2})


def test_fixture_shapley_by_hand(model_a, model_b, both):
    # two players: phi_i = 1/2 (v(i) - v()) + 1/2 (v(N) - v(j))
    a = shapley_brute_force(model_a, both)
    assert a.phi0 == 20
    assert a.phi.tolist() == [30.0, 30.0]
    b = shapley_brute_force(model_b, both)
    assert b.phi0 == 25
    # v() = 25, v(F) = 45, v(C) = 50, v(FC) = 90
    assert b.phi.tolist() == [0.5 * (45 - 25) + 0.5 * (90 - 50), 0.5 * (50 - 25) + 0.5 * (90 - 45)]
    assert b.phi.tolist() == [30.0, 35.0]


def test_single_leaf_zero_attributions():
    e = single_leaf_ensemble(5.0, 3)
    att = shapley_brute_force(e, np.zeros(3))
    assert att.phi0 == 5
    assert np.all(att.phi == 0)


def test_vectorized_values_match_scalar(rng):
    for _ in range(20):
        m = int(rng.integers(1, 6))
        e = randmodels.random_ensemble(rng, 2, m, 4)
        x = randmodels.random_instances(rng, 1, m)[0]
        table = all_subset_values(e, x)
        for mask in range(1 << m):
            members = [i for i in range(m) if mask >> i & 1]
            assert table[mask] == pytest.approx(expvalue(e, x, members), abs=1e-12)


def test_matches_permutation_definition(rng):
    for _ in range(15):
        m = int(rng.integers(1, 5))
        e = randmodels.random_ensemble(rng, 2, m, 4)
        x = randmodels.random_instances(rng, 1, m)[0]
        np.testing.assert_allclose(shapley_brute_force(e, x).phi, permutation_shapley(e, x),
                                   atol=1e-10)


def test_endpoints(rng):
    for _ in range(20):
        m = int(rng.integers(1, 7))
        e = randmodels.random_ensemble(rng, 3, m, 5)
        x = randmodels.random_instances(rng, 1, m)[0]
        assert expvalue(e, x, range(m)) == pytest.approx(e.predict(x), abs=1e-12)
        assert expvalue(e, x, ()) == pytest.approx(e.expected_value(), abs=1e-12)


def test_local_accuracy(rng):
    for _ in range(30):
        m = int(rng.integers(1, 9))
        e = randmodels.random_ensemble(rng, 3, m, 5)
        x = randmodels.random_instances(rng, 1, m)[0]
        att = shapley_brute_force(e, x)
        pred = e.predict(x)
        assert abs(att.total - pred) <= 1e-9 * max(1.0, abs(pred))


def test_linear_over_trees(rng):
    e = randmodels.random_ensemble(rng, 4, 5, 4)
    x = randmodels.random_instances(rng, 1, 5)[0]
    parts = [type(e)([t], 5) for t in e.trees]
    summed = sum(shapley_brute_force(p, x).phi for p in parts)
    np.testing.assert_allclose(shapley_brute_force(e, x).phi, summed, atol=1e-12)
    for subset in ([], [1, 3], range(5)):
        assert expvalue(e, x, subset) == pytest.approx(
            e.base_score + sum(expvalue(p, x, subset) for p in parts), abs=1e-12)


def test_dummy_feature_exact_zero(rng):
    for _ in range(20):
        e = randmodels.random_ensemble(rng, 3, 4, 4)
        wide = type(e)(e.trees, 6, e.base_score)
        x = randmodels.random_instances(rng, 1, 6)[0]
        phi = shapley_brute_force(wide, x).phi
        for f in set(range(6)) - wide.used_features:
            assert phi[f] == 0.0


def test_symmetry(model_a, both):
    phi = shapley_brute_force(model_a, both).phi
    assert phi[0] == phi[1]


def test_cap():
    e = single_leaf_ensemble(1.0, 21)
    with pytest.raises(OracleCapError):
        shapley_brute_force(e, np.zeros(21))
    assert shapley_brute_force(e, np.zeros(21), max_features=21).phi0 == 1.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_deterministic(seed):
    rng = np.random.default_rng(seed)
    e = randmodels.random_ensemble(rng, 2, 6, 4)
    x = randmodels.random_instances(rng, 1, 6)[0]
    a, b = shapley_brute_force(e, x), shapley_brute_force(e, x)
    assert a.phi.tobytes() == b.phi.tobytes() and a.phi0 == b.phi0
