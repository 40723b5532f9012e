"""Synthetic regression data with a known generating tree ensemble.

Features come in deliberately mismatched units (per-feature scales spread
over four orders of magnitude).  Only the first ``informative`` features
drive the outcome; the remaining ones are noise.
"""

from dataclasses import dataclass

import numpy as np

from .model import LEAF, TreeEnsemble, TreeModel


@dataclass(frozen=True)
class SynthData:
    X: np.ndarray
    y: np.ndarray
    ensemble: TreeEnsemble
    informative: tuple
    scales: np.ndarray


def _median_split_tree(rng, X, features, max_depth, leaf_scale):
    """Tree whose thresholds are midpoints between the two middle samples at
    each node, so both children always receive data and covers are the
    sample counts."""
    nodes = []

    def build(rows, level):
        j = len(nodes)
        nodes.append(None)
        if level < max_depth and len(rows) >= 2:
            d = int(rng.choice(features))
            col = np.sort(X[rows, d])
            mid = len(col) // 2
            lo, hi = col[mid - 1], col[mid]
            if lo < hi:
                t = float(lo + (hi - lo) / 2)
                go_left = X[rows, d] <= t
                a = build(rows[go_left], level + 1)
                b = build(rows[~go_left], level + 1)
                nodes[j] = [a, b, d, t, 0.0, float(len(rows))]
                return j
        nodes[j] = [LEAF, LEAF, LEAF, 0.0, float(rng.normal(0.0, leaf_scale)), float(len(rows))]
        return j

    build(np.arange(len(X)), 0)
    return TreeModel(*zip(*nodes))


def synth_dataset(seed, n, num_features, noise, informative=5, num_trees=20, depth=3):
    """Deterministic dataset ``(X, y)`` with ``y = f(X) + noise * N(0, 1)``.

    ``f`` is a random ensemble of median-split trees over the informative
    features; its covers are the sample counts of ``X`` itself.
    """
    if n < 2 or num_features < 2:
        raise ValueError("need n >= 2 and num_features >= 2")
    if not 1 <= informative <= num_features:
        raise ValueError("informative must be in [1, num_features]")
    rng = np.random.default_rng(seed)
    scales = 10.0 ** rng.uniform(-2, 2, size=num_features)
    X = rng.normal(size=(n, num_features)) * scales
    features = np.arange(informative)
    trees = [_median_split_tree(rng, X, features, depth, 1.0) for _ in range(num_trees)]
    ensemble = TreeEnsemble(trees, num_features)
    y = ensemble.predict_many(X)
    if noise:
        y = y + noise * rng.normal(size=n)
    return SynthData(X, y, ensemble, tuple(int(i) for i in features), scales)
