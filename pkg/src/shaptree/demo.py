"""Side-by-side attributions for the two AND-tree fixtures.

Going from model A to model B gives Cough strictly more influence on the
output.  SHAP values rise for Cough while path, gain and split-count scores
fall.
"""

from . import fixtures
from .baselines import gain_importance, saabas_path, split_count
from .treeshap import tree_shap_ensemble

METHODS = ("shap", "path", "gain", "split_count")


def scores(model):
    x = fixtures.BOTH_PRESENT
    return {
        "shap": tree_shap_ensemble(model, x).phi,
        "path": saabas_path(model, x).phi,
        "gain": gain_importance(model).scores,
        "split_count": split_count(model).scores,
    }


def consistency_table():
    """Return ``(rows, checks)``.

    ``rows`` holds ``(method, feature name, score A, score B)`` tuples and
    ``checks`` holds ``(description, passed)`` tuples.
    """
    a, b = scores(fixtures.model_a()), scores(fixtures.model_b())
    rows = []
    for method in METHODS:
        for f, name in enumerate(fixtures.FEATURE_NAMES):
            rows.append((method, name, float(a[method][f]), float(b[method][f])))
    c = fixtures.COUGH
    checks = [("Cough shap increases A->B", b["shap"][c] > a["shap"][c])]
    for method in METHODS[1:]:
        checks.append((f"Cough {method} decreases A->B", b[method][c] < a[method][c]))
    return rows, [(d, bool(ok)) for d, ok in checks]


def render(rows, checks):
    lines = [f"{'method':<12}{'feature':<9}{'model_a':>10}{'model_b':>10}"]
    for method, name, va, vb in rows:
        lines.append(f"{method:<12}{name:<9}{va:>10g}{vb:>10g}")
    lines.append("")
    for desc, ok in checks:
        lines.append(f"{'PASS' if ok else 'FAIL'}  {desc}")
    return "\n".join(lines) + "\n"
