"""Exact SHAP values for decision-tree ensembles in polynomial time."""

from .model import (
    ModelError, TreeEnsemble, TreeModel, dump_ensemble, load_ensemble, single_leaf_ensemble,
)
from .oracle import (
    Attribution, OracleCapError, expvalue, shapley_brute_force, subset_weight,
)
from .treeshap import shap_values, tree_shap_ensemble, tree_shap_single

__version__ = "0.1.0"

__all__ = [
    "Attribution", "ModelError", "OracleCapError", "TreeEnsemble", "TreeModel",
    "dump_ensemble", "expvalue", "load_ensemble", "shap_values", "shapley_brute_force",
    "single_leaf_ensemble", "subset_weight", "tree_shap_ensemble", "tree_shap_single",
]
