"""Classical tree attributions: decision-path (Saabas), gain, and split count.

These are the widely shipped importance measures that can rank a feature
lower after the model comes to depend on it more.  They are kept here as
comparison baselines for the demo and for supervised clustering.
"""

from dataclasses import dataclass

import numpy as np

from .model import LEAF
from .oracle import Attribution
from .treeshap import tree_shap_ensemble

METHODS = ("gain", "split_count", "mean_abs_shap")


@dataclass(frozen=True)
class GlobalImportance:
    scores: np.ndarray
    method: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown importance method {self.method!r}")


def _as_trees(model):
    return model.trees if hasattr(model, "trees") else (model,)


def saabas_path(model, x):
    """Credit each split on the decision path with the change in subtree mean.

    ``model`` may be a single tree or an ensemble.  Subtree means are
    cover-weighted, so the attributions telescope from the expected value
    to the prediction.
    """
    trees = _as_trees(model)
    x = model.check_instance(x) if hasattr(model, "check_instance") else np.asarray(x, float)
    num_features = getattr(model, "num_features", len(x))
    phi = np.zeros(num_features)
    phi0 = getattr(model, "base_score", 0.0)
    for tree in trees:
        means = tree.subtree_means()
        phi0 += means[0]
        j = 0
        while tree.children_left[j] != LEAF:
            d = tree.feature[j]
            child = tree.children_left[j] if x[d] <= tree.threshold[j] else tree.children_right[j]
            phi[d] += means[child] - means[j]
            j = child
    return Attribution(float(phi0), phi)


def _tree_gains(tree):
    """SSE reduction of every split, assuming each leaf's data equals its value.

    SSE(n) is the cover-weighted squared deviation of the leaf values under
    ``n`` from their cover-weighted mean.
    """
    leaf = tree.is_leaf
    means = tree.subtree_means()
    below = {}
    for j in tree._postorder():
        if leaf[j]:
            below[j] = [j]
        else:
            below[j] = below[tree.children_left[j]] + below[tree.children_right[j]]
    sse = np.zeros(tree.num_nodes)
    for j, leaves in below.items():
        if not leaf[j]:
            sse[j] = float(np.dot(tree.cover[leaves], (tree.value[leaves] - means[j]) ** 2))
    gains = {}
    for j in np.flatnonzero(~leaf):
        a, b = tree.children_left[j], tree.children_right[j]
        gains[int(j)] = sse[j] - sse[a] - sse[b]
    return gains, sse


def gain_importance(ensemble):
    """Total squared-error reduction of the splits on each feature."""
    scores = np.zeros(ensemble.num_features)
    for tree in ensemble.trees:
        gains, _ = _tree_gains(tree)
        for j, g in gains.items():
            scores[tree.feature[j]] += g
    # gains are >= 0 analytically; clip rounding noise
    return GlobalImportance(np.maximum(scores, 0.0), "gain")


def split_count(ensemble):
    scores = np.zeros(ensemble.num_features)
    for tree in ensemble.trees:
        np.add.at(scores, tree.feature[~tree.is_leaf], 1)
    return GlobalImportance(scores, "split_count")


def mean_abs_shap(ensemble, X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.size == 0 or len(X) == 0:
        raise ValueError("mean_abs_shap needs at least one instance")
    total = np.zeros(ensemble.num_features)
    for x in X:
        total += np.abs(tree_shap_ensemble(ensemble, x).phi)
    return GlobalImportance(total / len(X), "mean_abs_shap")
