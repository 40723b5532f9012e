"""Exact Shapley attributions by enumerating every feature subset.

The coalition value of a subset ``S`` is the cover-weighted estimate of
``E[f(x) | x_S]``: splits on features in ``S`` follow ``x``, every other split
sends weight down both branches in proportion to the child covers.  The
attribution of feature ``i`` is then the classic Shapley sum over all subsets
not containing ``i``.  Cost is O(T * L * 2**M), so this module is for
verification and small models only.
"""

import math
from dataclasses import dataclass

import numpy as np

from .model import LEAF

DEFAULT_MAX_FEATURES = 20


class OracleCapError(ValueError):
    """The model has too many features for subset enumeration."""


@dataclass(frozen=True)
class Attribution:
    """Base value plus one attribution per feature; they sum to the prediction."""

    phi0: float
    phi: np.ndarray

    @property
    def total(self):
        return self.phi0 + float(np.sum(self.phi))

    def __add__(self, other):
        return Attribution(self.phi0 + other.phi0, self.phi + other.phi)


def subset_weight(subset_size, num_features):
    """Shapley coefficient ``|S|! (M - |S| - 1)! / M!``.

    Evaluated as ``1 / (M * C(M - 1, |S|))`` with an exact integer binomial,
    so nothing overflows for any realistic ``M``.
    """
    if num_features < 1 or not 0 <= subset_size <= num_features - 1:
        raise ValueError(f"subset size {subset_size} outside [0, {num_features - 1}]")
    return 1.0 / (num_features * math.comb(num_features - 1, subset_size))


def _tree_expvalue(tree, x, subset):
    left, right = tree.children_left, tree.children_right
    feature, threshold, value, cover = tree.feature, tree.threshold, tree.value, tree.cover

    def g(j, w):
        if left[j] == LEAF:
            return w * value[j]
        if feature[j] in subset:
            return g(left[j] if x[feature[j]] <= threshold[j] else right[j], w)
        a, b = left[j], right[j]
        return g(a, w * cover[a] / cover[j]) + g(b, w * cover[b] / cover[j])

    return g(0, 1.0)


def expvalue(ensemble, x, subset):
    """Coalition value of ``subset`` (an iterable of feature indexes) at ``x``."""
    x = ensemble.check_instance(x)
    subset = frozenset(int(i) for i in subset)
    bad = [i for i in subset if not 0 <= i < ensemble.num_features]
    if bad:
        raise ValueError(f"subset members {bad} outside [0, {ensemble.num_features})")
    total = ensemble.base_score
    for tree in ensemble.trees:
        total += _tree_expvalue(tree, x, subset)
    return total


def _membership(num_features):
    masks = np.arange(1 << num_features, dtype=np.int64)
    return [(masks >> i) & 1 == 1 for i in range(num_features)]


def all_subset_values(ensemble, x, max_features=DEFAULT_MAX_FEATURES):
    """Coalition values for all ``2**M`` subsets, indexed by bitmask.

    Same recursion as :func:`expvalue`, carried out for every subset at once
    with one weight per subset.
    """
    m = ensemble.num_features
    if m > max_features:
        raise OracleCapError(
            f"{m} features exceeds the brute-force cap of {max_features}; use tree_shap instead")
    x = ensemble.check_instance(x)
    member = _membership(m)
    out = np.full(1 << m, ensemble.base_score)
    for tree in ensemble.trees:
        left, right = tree.children_left, tree.children_right
        feature, threshold, value, cover = tree.feature, tree.threshold, tree.value, tree.cover
        acc = np.zeros(1 << m)
        stack = [(0, np.ones(1 << m))]
        while stack:
            j, w = stack.pop()
            if left[j] == LEAF:
                acc += w * value[j]
                continue
            d = feature[j]
            hot, cold = (left[j], right[j]) if x[d] <= threshold[j] else (right[j], left[j])
            known = member[d]
            stack.append((cold, np.where(known, 0.0, w * (cover[cold] / cover[j]))))
            stack.append((hot, np.where(known, w, w * (cover[hot] / cover[j]))))
        out += acc
    return out


def shapley_from_values(values, num_features):
    """Shapley attributions from a table of coalition values indexed by bitmask."""
    m = num_features
    masks = np.arange(1 << m, dtype=np.int64)
    sizes = np.zeros(1 << m, dtype=np.int64)
    for i in range(m):
        sizes += (masks >> i) & 1
    weights = np.array([subset_weight(k, m) for k in range(m)] + [0.0])
    phi = np.empty(m)
    for i in range(m):
        without = masks[(masks >> i) & 1 == 0]
        phi[i] = np.sum(weights[sizes[without]] * (values[without | (1 << i)] - values[without]))
    return phi


def shapley_brute_force(ensemble, x, max_features=DEFAULT_MAX_FEATURES):
    """Exact SHAP values of ``ensemble`` at ``x`` by full subset enumeration."""
    values = all_subset_values(ensemble, x, max_features)
    return Attribution(float(values[0]), shapley_from_values(values, ensemble.num_features))
