"""Polynomial-time exact SHAP values for tree ensembles.

A single depth-first pass over each tree tracks, for every distinct feature on
the current root-to-node path, which fraction of the "feature known" and
"feature unknown" coalitions reach the node, together with a weight per
coalition size.  At a leaf those weights give every path feature its exact
Shapley share of the leaf value, so the result equals
:func:`shaptree.oracle.shapley_brute_force` without enumerating subsets.

Two engines compute identical values:

``"python"``
    Value-semantics ``extend``/``unwind`` that copy the path at every step,
    with an optional operation counter.  Slow; used for auditing and
    complexity measurements.
``"compiled"``
    A numba kernel that keeps one path buffer per depth and sums unwound
    weights without materializing the unwound path.  This is the default.
"""

from typing import NamedTuple

import numpy as np

from .model import LEAF
from .oracle import Attribution


class PathElement(NamedTuple):
    feature: int
    zero_fraction: float
    one_fraction: float
    weight: float


ROOT_FEATURE = -1


class OpCounter:
    """Machine-independent work counter: node visits and weight updates."""

    def __init__(self):
        self.nodes = 0
        self.weight_updates = 0

    @property
    def total(self):
        return self.nodes + self.weight_updates


def extend(path, zero_fraction, one_fraction, feature, counter=None):
    """Return ``path`` with one more feature appended.

    The coalition-size weights of the new path mix the old ones: a fraction
    ``one_fraction`` of each size-``k`` weight moves to size ``k + 1`` (the new
    feature is in the coalition) and ``zero_fraction`` stays at size ``k``.
    """
    depth = len(path)
    n = depth + 1
    weights = [e.weight for e in path] + [1.0 if depth == 0 else 0.0]
    for i in range(depth - 1, -1, -1):
        weights[i + 1] += one_fraction * weights[i] * (i + 1) / n
        weights[i] = zero_fraction * weights[i] * (depth - i) / n
    if counter is not None:
        counter.weight_updates += depth
    old = [PathElement(e.feature, e.zero_fraction, e.one_fraction, w)
           for e, w in zip(path, weights)]
    return tuple(old) + (PathElement(feature, zero_fraction, one_fraction, weights[depth]),)


def unwind(path, index, counter=None):
    """Undo the extension of the element at position ``index``.

    Returns a path one element shorter whose weights are those the path
    would have had if that element had never been added.
    """
    n = len(path)
    if not 0 <= index < n:
        raise IndexError(f"path position {index} outside [0, {n})")
    zero_fraction = path[index].zero_fraction
    one_fraction = path[index].one_fraction
    if one_fraction == 0 and zero_fraction == 0:
        raise ZeroDivisionError("cannot unwind an element with zero and one fractions both 0")
    carry = path[n - 1].weight
    weights = [e.weight for e in path[:n - 1]]
    for j in range(n - 2, -1, -1):
        if one_fraction != 0:
            held = weights[j]
            weights[j] = carry * n / ((j + 1) * one_fraction)
            carry = held - weights[j] * zero_fraction * (n - 1 - j) / n
        else:
            weights[j] = weights[j] * n / (zero_fraction * (n - 1 - j))
    if counter is not None:
        counter.weight_updates += n - 1
    kept = path[:index] + path[index + 1:]
    return tuple(PathElement(e.feature, e.zero_fraction, e.one_fraction, w)
                 for e, w in zip(kept, weights))


def find_feature(path, feature):
    for k, e in enumerate(path):
        if e.feature == feature:
            return k
    return None


def _tree_shap_python(tree, x, phi, counter):
    left, right = tree.children_left, tree.children_right
    feature, threshold, value, cover = tree.feature, tree.threshold, tree.value, tree.cover

    def recurse(j, path, zero_fraction, one_fraction, split_feature):
        if counter is not None:
            counter.nodes += 1
        path = extend(path, zero_fraction, one_fraction, split_feature, counter)
        if left[j] == LEAF:
            for i in range(1, len(path)):
                w = sum(e.weight for e in unwind(path, i, counter))
                e = path[i]
                phi[e.feature] += w * (e.one_fraction - e.zero_fraction) * value[j]
            return
        d = feature[j]
        hot, cold = (left[j], right[j]) if x[d] <= threshold[j] else (right[j], left[j])
        incoming_zero = incoming_one = 1.0
        k = find_feature(path, d)
        if k is not None:
            incoming_zero, incoming_one = path[k].zero_fraction, path[k].one_fraction
            path = unwind(path, k, counter)
        recurse(hot, path, incoming_zero * cover[hot] / cover[j], incoming_one, d)
        recurse(cold, path, incoming_zero * cover[cold] / cover[j], 0.0, d)

    recurse(0, (), 1.0, 1.0, ROOT_FEATURE)


# ---------------------------------------------------------------------------
# compiled engine


def _kernel_source():
    from numba import njit

    @njit(cache=True)
    def _unwound_sum(pz, po, pw, level, depth, index):
        one = po[level, index]
        zero = pz[level, index]
        carry = pw[level, depth]
        total = 0.0
        n = depth + 1
        for i in range(depth - 1, -1, -1):
            if one != 0.0:
                tmp = carry * n / ((i + 1) * one)
                total += tmp
                carry = pw[level, i] - tmp * zero * (depth - i) / n
            else:
                total += pw[level, i] / (zero * (depth - i) / n)
        return total

    @njit(cache=True)
    def _extend(pf, pz, po, pw, level, depth, zero, one, feat):
        pf[level, depth] = feat
        pz[level, depth] = zero
        po[level, depth] = one
        pw[level, depth] = 1.0 if depth == 0 else 0.0
        n = depth + 1
        for i in range(depth - 1, -1, -1):
            pw[level, i + 1] += one * pw[level, i] * (i + 1) / n
            pw[level, i] = zero * pw[level, i] * (depth - i) / n

    @njit(cache=True)
    def _unwind(pf, pz, po, pw, level, depth, index):
        one = po[level, index]
        zero = pz[level, index]
        carry = pw[level, depth]
        n = depth + 1
        for i in range(depth - 1, -1, -1):
            if one != 0.0:
                tmp = pw[level, i]
                pw[level, i] = carry * n / ((i + 1) * one)
                carry = tmp - pw[level, i] * zero * (depth - i) / n
            else:
                pw[level, i] = pw[level, i] * n / (zero * (depth - i))
        for i in range(index, depth):
            pf[level, i] = pf[level, i + 1]
            pz[level, i] = pz[level, i + 1]
            po[level, i] = po[level, i + 1]

    @njit(cache=True)
    def kernel(x, roots, left, right, feature, threshold, value, cover, max_depth, phi):
        size = max_depth + 2
        pf = np.empty((size, size), np.int64)
        pz = np.empty((size, size))
        po = np.empty((size, size))
        pw = np.empty((size, size))
        cap = 2 * size + 2
        s_node = np.empty(cap, np.int64)
        s_level = np.empty(cap, np.int64)
        s_len = np.empty(cap, np.int64)
        s_zero = np.empty(cap)
        s_one = np.empty(cap)
        s_feat = np.empty(cap, np.int64)
        for t in range(roots.shape[0]):
            sp = 0
            s_node[0] = roots[t]
            s_level[0] = 0
            s_len[0] = 0
            s_zero[0] = 1.0
            s_one[0] = 1.0
            s_feat[0] = -1
            sp = 1
            while sp > 0:
                sp -= 1
                j = s_node[sp]
                level = s_level[sp]
                depth = s_len[sp]
                if level > 0:
                    for i in range(depth):
                        pf[level, i] = pf[level - 1, i]
                        pz[level, i] = pz[level - 1, i]
                        po[level, i] = po[level - 1, i]
                        pw[level, i] = pw[level - 1, i]
                _extend(pf, pz, po, pw, level, depth, s_zero[sp], s_one[sp], s_feat[sp])
                if left[j] < 0:
                    for i in range(1, depth + 1):
                        w = _unwound_sum(pz, po, pw, level, depth, i)
                        phi[pf[level, i]] += w * (po[level, i] - pz[level, i]) * value[j]
                    continue
                d = feature[j]
                if x[d] <= threshold[j]:
                    hot = left[j]
                    cold = right[j]
                else:
                    hot = right[j]
                    cold = left[j]
                incoming_zero = 1.0
                incoming_one = 1.0
                length = depth + 1
                for k in range(1, length):
                    if pf[level, k] == d:
                        incoming_zero = pz[level, k]
                        incoming_one = po[level, k]
                        _unwind(pf, pz, po, pw, level, depth, k)
                        length -= 1
                        break
                # cold pushed first so the hot branch is processed first
                s_node[sp] = cold
                s_level[sp] = level + 1
                s_len[sp] = length
                s_zero[sp] = incoming_zero * cover[cold] / cover[j]
                s_one[sp] = 0.0
                s_feat[sp] = d
                sp += 1
                s_node[sp] = hot
                s_level[sp] = level + 1
                s_len[sp] = length
                s_zero[sp] = incoming_zero * cover[hot] / cover[j]
                s_one[sp] = incoming_one
                s_feat[sp] = d
                sp += 1

    return kernel


_KERNEL = None


def _kernel():
    global _KERNEL
    if _KERNEL is None:
        _KERNEL = _kernel_source()
    return _KERNEL


def pack_trees(trees):
    """Concatenate trees into flat node arrays with global child indexes."""
    offsets = np.cumsum([0] + [t.num_nodes for t in trees])
    roots = offsets[:-1].astype(np.int64)

    def cat(name, shift=False):
        parts = []
        for off, t in zip(roots, trees):
            a = getattr(t, name)
            parts.append(np.where(a == LEAF, LEAF, a + off) if shift else a)
        if not parts:
            return np.empty(0, np.int64 if shift or name == "feature" else np.float64)
        return np.ascontiguousarray(np.concatenate(parts))

    return (roots, cat("children_left", True), cat("children_right", True), cat("feature"),
            cat("threshold"), cat("value"), cat("cover"),
            max((t.depth for t in trees), default=0))


def _packed(ensemble):
    cache = ensemble.__dict__.get("_packed_trees")
    if cache is None:
        cache = pack_trees(ensemble.trees)
        object.__setattr__(ensemble, "_packed_trees", cache)
    return cache


ENGINES = ("compiled", "python")


def tree_shap_single(tree, x, num_features, engine="compiled", counter=None):
    """SHAP values of one tree at ``x``; ``phi0`` is the tree's expected value."""
    x = np.asarray(x, dtype=np.float64)
    phi = np.zeros(num_features)
    if engine == "python":
        _tree_shap_python(tree, x, phi, counter)
    elif engine == "compiled":
        if counter is not None:
            raise ValueError("operation counting is only available with engine='python'")
        _kernel()(x, *pack_trees([tree]), phi)
    else:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    return Attribution(tree.expected_value(), phi)


def tree_shap_ensemble(ensemble, x, engine="compiled", counter=None):
    """SHAP values of the whole ensemble at ``x``.

    Per-tree attributions are summed in tree order; ``phi0`` is the model's
    expected value including ``base_score``.
    """
    x = ensemble.check_instance(x)
    phi = np.zeros(ensemble.num_features)
    if engine == "python":
        for tree in ensemble.trees:
            _tree_shap_python(tree, x, phi, counter)
    elif engine == "compiled":
        if counter is not None:
            raise ValueError("operation counting is only available with engine='python'")
        _kernel()(x, *_packed(ensemble), phi)
    else:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    return Attribution(ensemble.expected_value(), phi)


def shap_values(ensemble, X, engine="compiled"):
    """Attribution matrix (n x M) for a batch of instances, rows in input order."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return np.array([tree_shap_ensemble(ensemble, x, engine).phi for x in X]).reshape(
        len(X), ensemble.num_features)
