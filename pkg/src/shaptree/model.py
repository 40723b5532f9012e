"""Array-encoded binary decision trees and ensembles.

Each tree is stored as parallel per-node arrays (``children_left``,
``children_right``, ``feature``, ``threshold``, ``value``, ``cover``) with
node 0 as the root and ``-1`` marking leaves in the child and feature arrays.
An instance is routed left iff ``x[feature] <= threshold``.
"""

import json
import os
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

LEAF = -1

_NODE_FIELDS = ("children_left", "children_right", "feature", "threshold", "value", "cover")


class ModelError(ValueError):
    """Raised when a model document is malformed or violates a tree invariant."""

    def __init__(self, message, tree=None, node=None):
        self.detail = message
        where = []
        if tree is not None:
            where.append(f"tree {tree}")
        if node is not None:
            where.append(f"node {node}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.tree = tree
        self.node = node


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TreeModel:
    """A single binary regression tree.

    ``value`` is NaN on internal nodes and ``threshold`` is NaN on leaves, so
    the arrays carry no meaningless numbers.  Construction validates the
    structure; the feature range is checked by :class:`TreeEnsemble`.
    """

    children_left: np.ndarray
    children_right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray
    cover: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in _NODE_FIELDS:
            dtype = np.int64 if name in ("children_left", "children_right", "feature") else np.float64
            try:
                arrays[name] = np.array(getattr(self, name), dtype=dtype)
            except (TypeError, ValueError) as exc:
                raise ModelError(f"field '{name}' is not numeric: {exc}") from None
            if arrays[name].ndim != 1:
                raise ModelError(f"field '{name}' must be one-dimensional")
        n = len(arrays["children_left"])
        if n == 0:
            raise ModelError("tree has no nodes")
        for name, a in arrays.items():
            if len(a) != n:
                raise ModelError(f"field '{name}' has length {len(a)}, expected {n}")

        left, right = arrays["children_left"], arrays["children_right"]
        is_leaf = left == LEAF
        arrays["feature"] = np.where(is_leaf, LEAF, arrays["feature"])
        arrays["value"] = np.where(is_leaf, arrays["value"], np.nan)
        arrays["threshold"] = np.where(is_leaf, np.nan, arrays["threshold"])
        _validate_structure(arrays)
        for name in _NODE_FIELDS:
            object.__setattr__(self, name, _frozen(arrays[name], arrays[name].dtype))

    @property
    def num_nodes(self):
        return len(self.children_left)

    @cached_property
    def is_leaf(self):
        mask = self.children_left == LEAF
        mask.setflags(write=False)
        return mask

    @property
    def num_leaves(self):
        return int(self.is_leaf.sum())

    @cached_property
    def depth(self):
        """Length of the longest root-to-leaf path, counted in edges."""
        depths = np.zeros(self.num_nodes, dtype=np.int64)
        best = 0
        stack = [0]
        while stack:
            j = stack.pop()
            if not self.is_leaf[j]:
                for c in (self.children_left[j], self.children_right[j]):
                    depths[c] = depths[j] + 1
                    stack.append(c)
            else:
                best = max(best, int(depths[j]))
        return best

    @cached_property
    def used_features(self):
        return frozenset(int(f) for f in self.feature[~self.is_leaf])

    def leaf_index(self, x):
        j = 0
        left, right, feature, threshold = (
            self.children_left, self.children_right, self.feature, self.threshold)
        while left[j] != LEAF:
            j = left[j] if x[feature[j]] <= threshold[j] else right[j]
        return int(j)

    def predict(self, x):
        return float(self.value[self.leaf_index(x)])

    def expected_value(self):
        """Cover-weighted mean of the leaf values."""
        leaves = self.is_leaf
        return float(np.dot(self.cover[leaves], self.value[leaves]) / self.cover[0])

    def subtree_means(self):
        """Cover-weighted mean leaf value below every node (bottom-up)."""
        means = np.where(self.is_leaf, self.value, 0.0)
        for j in self._postorder():
            if not self.is_leaf[j]:
                a, b = self.children_left[j], self.children_right[j]
                means[j] = (self.cover[a] * means[a] + self.cover[b] * means[b]) / self.cover[j]
        return means

    def _postorder(self):
        order = []
        stack = [0]
        while stack:
            j = stack.pop()
            order.append(j)
            if not self.is_leaf[j]:
                stack.append(self.children_left[j])
                stack.append(self.children_right[j])
        return order[::-1]

    def to_dict(self):
        leaf = self.is_leaf
        return {
            "children_left": self.children_left.tolist(),
            "children_right": self.children_right.tolist(),
            "feature": self.feature.tolist(),
            "threshold": np.where(leaf, 0.0, self.threshold).tolist(),
            "value": np.where(leaf, self.value, 0.0).tolist(),
            "cover": self.cover.tolist(),
        }

    def __eq__(self, other):
        if not isinstance(other, TreeModel):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, name), getattr(other, name), equal_nan=True)
            for name in _NODE_FIELDS
        )

    __hash__ = None


def _validate_structure(arrays):
    left = arrays["children_left"]
    right = arrays["children_right"]
    feature = arrays["feature"]
    threshold = arrays["threshold"]
    value = arrays["value"]
    cover = arrays["cover"]
    n = len(left)

    seen = np.zeros(n, dtype=bool)
    queue = deque([0])
    seen[0] = True
    while queue:
        j = queue.popleft()
        a, b = left[j], right[j]
        if (a == LEAF) != (b == LEAF):
            raise ModelError("exactly one child is a leaf sentinel; both or neither must be", node=j)
        if a == LEAF:
            if not np.isfinite(value[j]):
                raise ModelError("leaf value is not finite", node=j)
            continue
        if a == b:
            raise ModelError("left and right child are the same node", node=j)
        for c in (a, b):
            if not 0 <= c < n:
                raise ModelError(f"child index {c} out of range [0, {n})", node=j)
            if c == 0 or seen[c]:
                raise ModelError(f"child {c} is reachable more than once (cycle or shared node)", node=j)
            seen[c] = True
            queue.append(c)
        if feature[j] < 0:
            raise ModelError(f"internal node has invalid split feature {feature[j]}", node=j)
        if not np.isfinite(threshold[j]):
            raise ModelError("split threshold is not finite", node=j)

    unreachable = np.flatnonzero(~seen)
    if len(unreachable):
        raise ModelError("node is not reachable from the root", node=int(unreachable[0]))

    if not np.all(np.isfinite(cover)):
        j = int(np.flatnonzero(~np.isfinite(cover))[0])
        raise ModelError("cover is not finite", node=j)
    bad = np.flatnonzero(cover <= 0)
    if len(bad):
        raise ModelError("cover must be positive (zero-cover nodes are not supported)", node=int(bad[0]))
    for j in np.flatnonzero(left != LEAF):
        total = cover[left[j]] + cover[right[j]]
        if abs(cover[j] - total) > 1e-9 * max(1.0, abs(cover[j])):
            raise ModelError(
                f"cover {cover[j]!r} differs from the sum of child covers {total!r}", node=int(j))


@dataclass(frozen=True, eq=False)
class TreeEnsemble:
    """An additive ensemble: ``base_score + sum(tree outputs)``."""

    trees: tuple
    num_features: int
    base_score: float = 0.0

    def __post_init__(self):
        trees = tuple(self.trees)
        if not isinstance(self.num_features, (int, np.integer)) or self.num_features < 1:
            raise ModelError(f"num_features must be a positive integer, got {self.num_features!r}")
        if not np.isfinite(self.base_score):
            raise ModelError("base_score is not finite")
        for t, tree in enumerate(trees):
            if not isinstance(tree, TreeModel):
                raise ModelError("not a TreeModel", tree=t)
            internal = np.flatnonzero(~tree.is_leaf)
            over = internal[tree.feature[internal] >= self.num_features]
            if len(over):
                j = int(over[0])
                raise ModelError(
                    f"split feature {tree.feature[j]} outside [0, {self.num_features})", tree=t, node=j)
        object.__setattr__(self, "trees", trees)
        object.__setattr__(self, "num_features", int(self.num_features))
        object.__setattr__(self, "base_score", float(self.base_score))

    @property
    def num_trees(self):
        return len(self.trees)

    @property
    def max_leaves(self):
        return max((t.num_leaves for t in self.trees), default=0)

    @property
    def max_depth(self):
        return max((t.depth for t in self.trees), default=0)

    @cached_property
    def used_features(self):
        return frozenset().union(*(t.used_features for t in self.trees))

    def check_instance(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.num_features,):
            raise ValueError(f"instance has shape {x.shape}, expected ({self.num_features},)")
        if not np.all(np.isfinite(x)):
            raise ValueError("instance contains non-finite values")
        return x

    def predict(self, x):
        x = self.check_instance(x)
        total = self.base_score
        for tree in self.trees:
            total += tree.predict(x)
        return total

    def predict_many(self, X):
        return np.array([self.predict(x) for x in np.atleast_2d(X)])

    def expected_value(self):
        total = self.base_score
        for tree in self.trees:
            total += tree.expected_value()
        return total

    def to_dict(self):
        return {
            "num_features": self.num_features,
            "base_score": self.base_score,
            "trees": [t.to_dict() for t in self.trees],
        }

    def __eq__(self, other):
        if not isinstance(other, TreeEnsemble):
            return NotImplemented
        return (self.num_features == other.num_features
                and self.base_score == other.base_score
                and self.trees == other.trees)

    __hash__ = None


def tree_from_dict(doc, index=None):
    if not isinstance(doc, dict):
        raise ModelError("tree must be a JSON object", tree=index)
    missing = [k for k in _NODE_FIELDS if k not in doc]
    if missing:
        raise ModelError(f"missing field(s) {', '.join(missing)}", tree=index)
    try:
        return TreeModel(**{k: doc[k] for k in _NODE_FIELDS})
    except ModelError as exc:
        raise ModelError(exc.detail, tree=index, node=exc.node) from None


def ensemble_from_dict(doc):
    if not isinstance(doc, dict):
        raise ModelError("model document must be a JSON object")
    if "num_features" not in doc or "trees" not in doc:
        raise ModelError("model document needs 'num_features' and 'trees'")
    if not isinstance(doc["trees"], list):
        raise ModelError("'trees' must be a list")
    trees = [tree_from_dict(t, i) for i, t in enumerate(doc["trees"])]
    return TreeEnsemble(trees, doc["num_features"], doc.get("base_score", 0.0))


def load_ensemble(source):
    """Load and validate a model from a dict, a JSON string, or a file path."""
    if isinstance(source, dict):
        return ensemble_from_dict(source)
    if isinstance(source, (str, os.PathLike)) and str(source).lstrip()[:1] not in ("{", "["):
        with open(source) as fh:
            text = fh.read()
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON: {exc}") from None
    return ensemble_from_dict(doc)


def dump_ensemble(ensemble, path=None):
    text = json.dumps(ensemble.to_dict(), indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def single_leaf_ensemble(value, num_features, cover=1.0, base_score=0.0):
    tree = TreeModel([LEAF], [LEAF], [LEAF], [0.0], [value], [cover])
    return TreeEnsemble((tree,), num_features, base_score)
