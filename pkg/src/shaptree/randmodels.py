"""Seeded random trees and ensembles for validation suites and benchmarks."""

import numpy as np

from .model import LEAF, TreeEnsemble, TreeModel


def _assemble(nodes):
    # nodes: list of [left, right, feature, threshold, value, cover] in creation order
    cols = list(zip(*nodes))
    return TreeModel(*cols)


def random_tree(rng, num_features, max_depth, split_prob=0.8, max_leaf_cover=10):
    """Random tree with integer covers; the same feature may repeat on a path.

    Thresholds sit on a 0.05 grid so instances drawn by :func:`random_instances`
    regularly land exactly on a threshold, which exercises ``<=`` routing.
    """
    nodes = []

    def build(level):
        j = len(nodes)
        nodes.append(None)
        if level < max_depth and (level == 0 or rng.random() < split_prob):
            d = int(rng.integers(num_features))
            t = round(float(rng.integers(1, 20)) * 0.05, 2)
            a, ca = build(level + 1)
            b, cb = build(level + 1)
            nodes[j] = [a, b, d, t, 0.0, ca + cb]
            return j, ca + cb
        c = float(rng.integers(1, max_leaf_cover + 1))
        nodes[j] = [LEAF, LEAF, LEAF, 0.0, float(np.round(rng.normal(0, 10), 3)), c]
        return j, c

    build(0)
    return _assemble(nodes)


def random_ensemble(rng, num_trees, num_features, max_depth, split_prob=0.8):
    trees = [random_tree(rng, num_features, max_depth, split_prob) for _ in range(num_trees)]
    return TreeEnsemble(trees, num_features, float(np.round(rng.normal(), 3)))


def random_instances(rng, n, num_features):
    """Instances on a 0.05 grid in [0, 1], matching :func:`random_tree` thresholds."""
    return np.round(rng.integers(0, 21, size=(n, num_features)) * 0.05, 2)


def full_tree(rng, depth, level_features, num_features=None):
    """Complete binary tree of the given depth (``2**depth`` leaves).

    Every node at level ``k`` splits on ``level_features[k]``; with distinct
    entries each root-to-leaf path has ``depth`` unique features.  Leaves get
    random integer covers and Gaussian values.
    """
    if len(level_features) < depth:
        raise ValueError("need one split feature per level")
    nodes = []

    def build(level):
        j = len(nodes)
        nodes.append(None)
        if level < depth:
            a, ca = build(level + 1)
            b, cb = build(level + 1)
            nodes[j] = [a, b, int(level_features[level]), float(rng.random()), 0.0, ca + cb]
            return j, ca + cb
        c = float(rng.integers(1, 11))
        nodes[j] = [LEAF, LEAF, LEAF, 0.0, float(rng.normal()), c]
        return j, c

    build(0)
    return _assemble(nodes)


def full_ensemble(rng, num_trees, depth, num_features, distinct=True):
    """Ensemble of complete trees; split features drawn per tree and per level."""
    if distinct and depth > num_features:
        raise ValueError("distinct per-level features need num_features >= depth")
    trees = []
    for _ in range(num_trees):
        if distinct:
            levels = rng.choice(num_features, size=depth, replace=False)
        else:
            levels = rng.integers(num_features, size=depth)
        trees.append(full_tree(rng, depth, levels))
    return TreeEnsemble(trees, num_features)


def probe_instances(rng, ensemble, n):
    """Instances that hit both sides of, and land exactly on, the model's thresholds."""
    candidates = [[0.0] for _ in range(ensemble.num_features)]
    for tree in ensemble.trees:
        internal = ~tree.is_leaf
        for d, t in zip(tree.feature[internal], tree.threshold[internal]):
            candidates[d].extend((t - 1.0, t, t + 1.0))
    cols = [rng.choice(np.unique(c), size=n) for c in candidates]
    return np.column_stack(cols)
