"""Exit criteria.  Each test records one PASS/FAIL line for the terminal summary."""

import math
import time

import numpy as np
import pytest

from shaptree import bench, cli, fixtures, randmodels
from shaptree.baselines import gain_importance, saabas_path, split_count
from shaptree.clustering import r2_auc, supervised_clustering
from shaptree.model import TreeEnsemble, TreeModel
from shaptree.oracle import all_subset_values, shapley_brute_force, subset_weight
from shaptree.synth import synth_dataset
from shaptree.treeshap import tree_shap_ensemble, tree_shap_single

pytestmark = pytest.mark.acceptance

ABS_TOL, REL_TOL = 1e-8, 1e-10
LOCAL_TOL = 1e-9


def _local_gap(total, prediction):
    return abs(total - prediction) / max(1.0, abs(prediction))


@pytest.fixture(scope="module")
def equivalence_run():
    """500 random trees x 20 instances, both engines against the oracle."""
    rng = np.random.default_rng(20170614)
    t0 = time.perf_counter()
    worst_excess = 0.0
    worst_abs = 0.0
    worst_local = 0.0
    failures = 0
    explanations = 0
    max_m = max_d = 0
    for k in range(500):
        m = 1 + k % 12
        depth = k % 7
        tree = randmodels.random_tree(rng, m, depth, split_prob=0.85)
        ensemble = TreeEnsemble([tree], m)
        max_m, max_d = max(max_m, m), max(max_d, tree.depth)
        for x in randmodels.random_instances(rng, 20, m):
            exact = shapley_brute_force(ensemble, x)
            prediction = tree.predict(x)
            for engine in ("compiled", "python"):
                fast = tree_shap_single(tree, x, m, engine)
                err = np.abs(fast.phi - exact.phi)
                bound = np.maximum(ABS_TOL, REL_TOL * np.abs(exact.phi))
                worst_excess = max(worst_excess, float(np.max(err / bound)))
                worst_abs = max(worst_abs, float(err.max()))
                failures += int(np.any(err > bound)) + int(abs(fast.phi0 - exact.phi0) > ABS_TOL)
                worst_local = max(worst_local, _local_gap(fast.total, prediction))
                explanations += 1
            worst_local = max(worst_local, _local_gap(exact.total, prediction))
    return dict(seconds=time.perf_counter() - t0, worst_abs=worst_abs, worst_excess=worst_excess,
                failures=failures, worst_local=worst_local, explanations=explanations,
                max_m=max_m, max_d=max_d)


def test_c1_oracle_equivalence(equivalence_run, report):
    r = equivalence_run
    ok = r["failures"] == 0 and r["seconds"] < 300 and r["max_m"] == 12 and r["max_d"] == 6
    report("C1 oracle equivalence", ok,
           f"500 trees x 20 instances x 2 engines, max |dev| {r['worst_abs']:.2e}, "
           f"{r['seconds']:.1f}s")
    assert ok


def test_c2_local_accuracy(equivalence_run, report):
    gaps = [equivalence_run["worst_local"]]
    x = fixtures.BOTH_PRESENT
    grid = [np.array([a, b]) for a in (0.0, 1.0) for b in (0.0, 1.0)] + [x]
    for model in (fixtures.model_a(), fixtures.model_b()):
        for point in grid:
            prediction = model.predict(point)
            for att in (tree_shap_ensemble(model, point), shapley_brute_force(model, point),
                        saabas_path(model, point)):
                gaps.append(_local_gap(att.total, prediction))
    worst = max(gaps)
    ok = worst <= LOCAL_TOL
    report("C2 local accuracy", ok, f"worst relative gap {worst:.2e} "
           f"over {equivalence_run['explanations']} + fixture explanations")
    assert ok


def test_c3_figure_one(report):
    a, b = fixtures.model_a(), fixtures.model_b()
    x = fixtures.BOTH_PRESENT
    got = {}
    for name, model in (("A", a), ("B", b)):
        got[name] = {
            "shap": tree_shap_ensemble(model, x).phi,
            "path": saabas_path(model, x).phi,
            "gain": gain_importance(model).scores,
            "split": split_count(model).scores,
        }
    expected = {
        "A": {"shap": [30, 30], "path": [20, 40], "gain": [1600, 3200], "split": [1, 2]},
        "B": {"shap": [30, 35], "path": [40, 25], "gain": [3200, 2500], "split": [2, 1]},
    }
    values_ok = all(
        (np.array_equal(got[m][k], expected[m][k]) if k == "split"
         else np.allclose(got[m][k], expected[m][k], rtol=1e-9, atol=0))
        for m in expected for k in expected[m]
    )
    cough = fixtures.COUGH
    direction_ok = (got["B"]["shap"][cough] > got["A"]["shap"][cough]
                    and all(got["B"][k][cough] < got["A"][k][cough]
                            for k in ("path", "gain", "split")))
    ok = values_ok and direction_ok
    report("C3 AND-tree fixture regression", ok,
           "Cough: shap 30->35, path 40->25, gain 3200->2500, splits 2->1")
    assert ok


def _remap(tree, mapping):
    feature = np.where(tree.is_leaf, -1, mapping[np.maximum(tree.feature, 0)])
    return TreeModel(tree.children_left, tree.children_right, feature, tree.threshold,
                     tree.value, tree.cover)


def test_c4_missingness(report):
    rng = np.random.default_rng(4)
    violations = 0
    checked = 0
    for _ in range(100):
        m = 16
        used = rng.choice(m, size=int(rng.integers(1, 9)), replace=False)
        small = randmodels.random_ensemble(rng, int(rng.integers(1, 6)), len(used), 6)
        ensemble = TreeEnsemble([_remap(t, used) for t in small.trees], m, small.base_score)
        absent = sorted(set(range(m)) - ensemble.used_features)
        for x in rng.random((5, m)):
            for engine in ("compiled", "python"):
                phi = tree_shap_ensemble(ensemble, x, engine).phi
                violations += int(np.any(phi[absent] != 0.0))
                checked += 1
    ok = violations == 0
    report("C4 missingness", ok, f"{checked} explanations over 100 ensembles, "
           f"{violations} nonzero absent-feature attributions")
    assert ok


def test_c5_complexity_scaling(report):
    depths = list(range(1, 11))
    ops = bench.ops_by_depth(depths, seed=5)
    per_leaf = ops / 2.0 ** np.array(depths)
    exponent = bench.fit_exponent(depths, per_leaf)
    subset_counts = [len(all_subset_values(
        TreeEnsemble([randmodels.full_tree(np.random.default_rng(m), min(m, 4), np.arange(m))], m),
        np.zeros(m))) for m in range(1, 13)]
    doubling = all(b == 2 * a for a, b in zip(subset_counts, subset_counts[1:]))

    rows = bench.run_bench([1000], [6], [100], seed=5, repeat=3)
    wall = rows[0]["seconds"]
    ok = exponent <= 2.5 and doubling
    report("C5 complexity scaling", ok,
           f"ops/leaf ~ D^{exponent:.2f}; oracle subsets double per feature: {doubling}; "
           f"T=1000 L=64 D=6 M=100 explained in {wall * 1e3:.1f} ms (reported)")
    assert ok


def test_c6_weight_normalization(report):
    worst = 0.0
    for m in range(1, 21):
        total = sum(math.comb(m - 1, k) * subset_weight(k, m) for k in range(m))
        worst = max(worst, abs(total - 1.0))
    ok = worst <= 1e-12
    report("C6 Shapley weights sum to one", ok, f"max |sum - 1| = {worst:.1e} for M in 1..20")
    assert ok


def test_c7_r2_curves(report):
    t0 = time.perf_counter()
    data = synth_dataset(seed=7, n=200, num_features=20, noise=1.0, informative=5)
    auc = {}
    shape_ok = True
    for method in ("treeshap", "path", "raw"):
        trace, _ = supervised_clustering(data.ensemble, data.X, data.y, method)
        curve = trace.r2
        shape_ok &= (curve[0] == 1.0 and abs(curve[-1]) <= 1e-12
                     and bool(np.all(np.diff(curve) <= 0.0)))
        auc[method] = r2_auc(curve)
    seconds = time.perf_counter() - t0
    ok = (shape_ok and auc["treeshap"] >= auc["raw"] and auc["treeshap"] >= auc["path"] - 0.02
          and seconds < 120)
    report("C7 supervised clustering R^2", ok,
           f"AUC shap {auc['treeshap']:.3f}, path {auc['path']:.3f}, raw {auc['raw']:.3f}, "
           f"{seconds:.1f}s")
    assert ok


def _run_all(workdir, capsys):
    workdir.mkdir()
    data = synth_dataset(seed=8, n=30, num_features=6, noise=0.5)
    model = workdir / "model.json"
    from shaptree.model import dump_ensemble
    dump_ensemble(data.ensemble, model)
    csv_path = workdir / "data.csv"
    with open(csv_path, "w") as fh:
        fh.write(",".join(f"f{i}" for i in range(6)) + ",y\n")
        for row, y in zip(data.X, data.y):
            fh.write(",".join(repr(float(v)) for v in row) + f",{float(y)!r}\n")
    commands = [
        ["explain", "--model", str(model), "--data", str(csv_path), "--out",
         str(workdir / "explain.jsonl")],
        ["explain", "--model", str(model), "--data", str(csv_path), "--method", "path", "--csv",
         "--out", str(workdir / "path.csv")],
        ["importance", "--model", str(model), "--data", str(csv_path), "--out",
         str(workdir / "importance.csv")],
        ["validate", "--suite", "10", "--seed", "3", "--out", str(workdir / "validate.txt")],
        ["cluster", "--model", str(model), "--data", str(csv_path), "--out",
         str(workdir / "cluster"), "--matrix"],
        ["cluster", "--seed", "9", "--n", "80", "--out", str(workdir / "synth")],
        ["bench", "--trees", "1,20", "--depths", "2,4", "--features", "4,8", "--repeat", "1",
         "--out", str(workdir / "bench.csv")],
        ["demo", "--out", str(workdir / "demo.txt")],
    ]
    stdout = []
    for argv in commands:
        assert cli.main(argv) == 0, argv
        stdout.append(capsys.readouterr().out)
    (workdir / "stdout.txt").write_text("".join(stdout))
    bench_csv = workdir / "bench.csv"
    lines = bench_csv.read_text().splitlines()
    stripped = [",".join(line.split(",")[:-1]) if not line.startswith("#") else line
                for line in lines]
    bench_csv.write_text("\n".join(stripped) + "\n")
    return {p.relative_to(workdir): p.read_bytes() for p in sorted(workdir.rglob("*"))
            if p.is_file()}


def test_c8_determinism(tmp_path, capsys, report):
    first = _run_all(tmp_path / "run1", capsys)
    second = _run_all(tmp_path / "run2", capsys)
    differing = sorted(str(k) for k in set(first) | set(second) if first.get(k) != second.get(k))
    ok = not differing and len(first) >= 10
    report("C8 determinism", ok,
           f"{len(first)} artifacts byte-identical (bench seconds column excluded)"
           if ok else f"differs: {differing}")
    assert ok
