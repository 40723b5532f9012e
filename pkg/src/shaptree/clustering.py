"""Supervised clustering: agglomerative clustering of attribution vectors.

Instances are clustered in attribution space (all coordinates in model-output
units) with Ward linkage.  Clustering quality is scored by replaying the merges
and tracking how much outcome variance the group means still explain, from
``n`` singleton groups (R^2 = 1) down to one group (R^2 = 0).

Group ids follow the usual dendrogram convention: items are ``0 .. n-1`` and
the group created by merge ``k`` gets id ``n + k``.
"""

from dataclasses import dataclass

import numpy as np

from .baselines import saabas_path
from .oracle import shapley_brute_force
from .treeshap import tree_shap_ensemble

MATRIX_METHODS = ("treeshap", "path", "brute", "raw")


class DegenerateOutcomeError(ValueError):
    """Outcomes have zero variance, so R^2 is undefined."""


@dataclass(frozen=True)
class MergeTrace:
    """Merge sequence of a dendrogram and, once scored, its R^2 curve.

    ``merges[k]`` is the ``(low_id, high_id)`` pair joined at step ``k`` and
    ``heights[k]`` the Ward distance of that merge.  ``r2`` has length ``n``:
    ``r2[k]`` is the R^2 after ``k`` merges, when ``n - k`` groups remain.
    """

    merges: tuple
    heights: np.ndarray
    n: int
    r2: np.ndarray = None

    @property
    def groups_remaining(self):
        return np.arange(self.n, 0, -1)


def attribution_matrix(ensemble, X, method="treeshap"):
    """One row per instance: its attributions, or the raw features for ``"raw"``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if len(X) == 0 or X.shape[1] == 0:
        raise ValueError("dataset is empty")
    if method == "raw":
        return X.copy()
    explain = {
        "treeshap": tree_shap_ensemble,
        "path": saabas_path,
        "brute": shapley_brute_force,
    }.get(method)
    if explain is None:
        raise ValueError(f"unknown method {method!r}; expected one of {MATRIX_METHODS}")
    return np.array([explain(ensemble, x).phi for x in X])


def hierarchical_cluster(matrix):
    """Ward agglomerative clustering on Euclidean distances.

    Uses the Lance-Williams update on merge costs
    ``|A||B| / (|A|+|B|) * ||mean(A) - mean(B)||**2``.  Among equal-cost pairs
    the one with the lowest (smaller id, larger id) wins.
    """
    X = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    n = len(X)
    if n < 2:
        raise ValueError("need at least two rows to cluster")
    cost = np.empty((n, n))
    for i in range(n):
        cost[i] = 0.5 * np.sum((X - X[i]) ** 2, axis=1)
    np.fill_diagonal(cost, np.inf)
    size = np.ones(n)
    ids = np.arange(n)
    active = np.ones(n, dtype=bool)
    merges = []
    heights = np.empty(n - 1)
    for step in range(n - 1):
        best = cost.min()
        rows, cols = np.nonzero(cost == best)
        keep = rows < cols
        rows, cols = rows[keep], cols[keep]
        lo = np.minimum(ids[rows], ids[cols])
        hi = np.maximum(ids[rows], ids[cols])
        pick = np.lexsort((hi, lo))[0]
        a, b = rows[pick], cols[pick]
        merges.append((int(lo[pick]), int(hi[pick])))
        heights[step] = np.sqrt(2.0 * best)

        na, nb = size[a], size[b]
        nk = size
        updated = ((na + nk) * cost[a] + (nb + nk) * cost[b] - nk * best) / (na + nb + nk)
        updated[~active] = np.inf
        cost[a, :] = updated
        cost[:, a] = updated
        cost[a, a] = np.inf
        cost[b, :] = np.inf
        cost[:, b] = np.inf
        active[b] = False
        size[a] = na + nb
        ids[a] = n + step
    return MergeTrace(tuple(merges), heights, n)


def r2_curve(merges, outcomes):
    """R^2 of group-mean predictions after each merge, starting with no merges.

    Merging groups A and B raises the within-group sum of squares by exactly
    ``|A||B| / (|A|+|B|) * (mean_A - mean_B)**2``, so the curve is
    non-increasing by construction.
    """
    y = np.asarray(outcomes, dtype=np.float64)
    n = len(y)
    merges = tuple(merges)
    if len(merges) != n - 1:
        raise ValueError(f"{len(merges)} merges cannot form a dendrogram over {n} outcomes")
    ss_total = float(np.sum((y - y.mean()) ** 2))
    if not ss_total > 0:
        raise DegenerateOutcomeError("outcomes have zero variance; R^2 curve is undefined")
    count = {i: 1 for i in range(n)}
    mean = {i: float(v) for i, v in enumerate(y)}
    within = 0.0
    curve = np.empty(n)
    curve[0] = 1.0
    for k, (a, b) in enumerate(merges):
        if a not in count or b not in count or a == b:
            raise ValueError(f"merge {k} joins unknown or already merged groups ({a}, {b})")
        na, nb = count.pop(a), count.pop(b)
        ma, mb = mean.pop(a), mean.pop(b)
        within += na * nb / (na + nb) * (ma - mb) ** 2
        count[n + k] = na + nb
        mean[n + k] = (na * ma + nb * mb) / (na + nb)
        curve[k + 1] = 1.0 - within / ss_total
    return curve


def r2_auc(curve):
    """Area under R^2 versus groups remaining, normalized to [0, 1].

    ``curve`` is ordered as returned by :func:`r2_curve` (n groups first).
    """
    curve = np.asarray(curve, dtype=np.float64)
    if len(curve) < 2:
        raise ValueError("curve needs at least two points")
    area = curve.sum() - 0.5 * (curve[0] + curve[-1])
    return float(np.clip(area / (len(curve) - 1), 0.0, 1.0))


def supervised_clustering(ensemble, X, outcomes, method="treeshap"):
    """Cluster ``X`` in the space selected by ``method`` and score it against ``outcomes``."""
    matrix = attribution_matrix(ensemble, X, method)
    trace = hierarchical_cluster(matrix)
    curve = r2_curve(trace.merges, outcomes)
    return MergeTrace(trace.merges, trace.heights, trace.n, curve), matrix


def permutation_baseline(merges, outcomes, rng, rounds=50):
    """AUC values of the same dendrogram against shuffled outcomes."""
    y = np.asarray(outcomes, dtype=np.float64)
    return np.array([r2_auc(r2_curve(merges, rng.permutation(y))) for _ in range(rounds)])
