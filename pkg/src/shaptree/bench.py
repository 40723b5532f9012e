"""Scaling benchmarks for Tree SHAP and the brute-force oracle.

Wall time is informational.  The machine-independent measure is the
operation count of the path-copying engine (node visits plus path weight
updates) and, for the oracle, the number of coalition evaluations.
"""

import csv
import io
import time

import numpy as np

from . import randmodels
from .oracle import all_subset_values
from .treeshap import OpCounter, _packed, tree_shap_ensemble, tree_shap_single

COLUMNS = ("trees", "leaves", "depth", "features", "method", "ops", "seconds")


def treeshap_ops(tree, x, num_features):
    counter = OpCounter()
    tree_shap_single(tree, x, num_features, engine="python", counter=counter)
    return counter.total


def ops_by_depth(depths, seed=0):
    """Operation counts of one complete tree per depth (distinct feature per level)."""
    rng = np.random.default_rng(seed)
    out = []
    for depth in depths:
        tree = randmodels.full_tree(rng, depth, np.arange(depth))
        x = rng.random(max(depth, 1))
        out.append(treeshap_ops(tree, x, max(depth, 1)))
    return np.array(out)


def fit_exponent(x, y):
    """Slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def _time(fn, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_bench(trees, depths, features, seed=0, brute_cap=12, repeat=3):
    """Time one explanation per grid point ``(T, D, M)`` with ``D <= M``.

    Returns a list of row dicts keyed by :data:`COLUMNS`.  Brute force runs
    only when ``M <= brute_cap``.
    """
    rows = []
    rng = np.random.default_rng(seed)
    kernel_ready = False
    for num_trees in trees:
        if num_trees == 0:
            continue
        for depth in depths:
            for m in features:
                if depth > m:
                    continue
                ensemble = randmodels.full_ensemble(rng, num_trees, depth, m)
                x = rng.random(m)
                if not kernel_ready:
                    tree_shap_ensemble(ensemble, x)
                    kernel_ready = True
                _packed(ensemble)
                # complete trees with distinct level features all cost the same
                ops = num_trees * treeshap_ops(ensemble.trees[0], x, m)
                seconds = _time(lambda: tree_shap_ensemble(ensemble, x), repeat)
                base = dict(trees=num_trees, leaves=2 ** depth, depth=depth, features=m)
                rows.append(dict(base, method="treeshap", ops=ops, seconds=seconds))
                if m <= brute_cap:
                    seconds = _time(lambda: all_subset_values(ensemble, x, brute_cap), 1)
                    rows.append(dict(base, method="brute", ops=num_trees * 2 ** m, seconds=seconds))
    return rows


def fits(rows):
    """Scaling summaries from bench rows.

    ``treeshap_ops_per_leaf_vs_depth``: log-log slope of ops / (T * L) against
    D.  ``brute_ops_ratio_per_feature``: geometric-mean growth factor of the
    oracle's coalition count per added feature.
    """
    out = {}
    ts = [r for r in rows if r["method"] == "treeshap" and r["depth"] > 0]
    if len({r["depth"] for r in ts}) >= 2:
        out["treeshap_ops_per_leaf_vs_depth"] = fit_exponent(
            [r["depth"] for r in ts], [r["ops"] / (r["trees"] * r["leaves"]) for r in ts])
    bf = [r for r in rows if r["method"] == "brute"]
    if len({r["features"] for r in bf}) >= 2:
        slope = np.polyfit([r["features"] for r in bf],
                           [np.log2(r["ops"] / r["trees"]) for r in bf], 1)[0]
        out["brute_ops_ratio_per_feature"] = float(2.0 ** slope)
    return out


def format_rows(rows, with_timing=True):
    buf = io.StringIO()
    columns = COLUMNS if with_timing else COLUMNS[:-1]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([f"{r[c]:.6f}" if c == "seconds" else r[c] for c in columns])
    for name, value in fits(rows).items():
        buf.write(f"# fit,{name},{value:.6f}\n")
    return buf.getvalue()
