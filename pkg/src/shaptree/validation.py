"""Cross-check Tree SHAP against the brute-force oracle."""

from dataclasses import dataclass

import numpy as np

from . import fixtures, randmodels
from .oracle import DEFAULT_MAX_FEATURES, shapley_brute_force
from .treeshap import tree_shap_ensemble

ABS_TOL = 1e-8
REL_TOL = 1e-10


@dataclass
class Deviation:
    cases: int = 0
    max_abs: float = 0.0
    max_rel: float = 0.0
    failures: int = 0

    def update(self, fast, exact, abs_tol=ABS_TOL, rel_tol=REL_TOL):
        fast = np.append(fast.phi, fast.phi0)
        exact = np.append(exact.phi, exact.phi0)
        err = np.abs(fast - exact)
        scale = np.abs(exact)
        self.cases += 1
        if len(err):
            self.max_abs = max(self.max_abs, float(err.max()))
            rel = np.divide(err, scale, out=np.where(err > 0, np.inf, 0.0), where=scale > 0)
            self.max_rel = max(self.max_rel, float(rel.max()))
        if np.any(err > np.maximum(abs_tol, rel_tol * scale)):
            self.failures += 1

    @property
    def passed(self):
        return self.failures == 0


def check(ensemble, X, deviation=None, max_features=DEFAULT_MAX_FEATURES, abs_tol=ABS_TOL,
          inject=0.0):
    """Compare both algorithms on every row of ``X``.

    ``inject`` is added to the first Tree SHAP attribution; it exists only so
    the failure path can be exercised.
    """
    deviation = deviation or Deviation()
    for x in np.atleast_2d(X):
        fast = tree_shap_ensemble(ensemble, x)
        if inject:
            fast.phi[0] += inject
        deviation.update(fast, shapley_brute_force(ensemble, x, max_features), abs_tol)
    return deviation


def fixture_cases():
    grid = np.array([[a, b] for a in (0.0, 1.0) for b in (0.0, 1.0)])
    return [(fixtures.model_a(), grid), (fixtures.model_b(), grid)]


def random_cases(seed, num_models=50, max_features=12, max_depth=6, instances=20):
    rng = np.random.default_rng(seed)
    for _ in range(num_models):
        m = int(rng.integers(1, max_features + 1))
        ensemble = randmodels.random_ensemble(
            rng, int(rng.integers(1, 4)), m, int(rng.integers(0, max_depth + 1)))
        yield ensemble, randmodels.random_instances(rng, instances, m)
