"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 a computed check failed
(local accuracy, oracle agreement, demo consistency).
"""

import argparse
import csv
import io
import os
import sys

import numpy as np

from . import bench, clustering, dataio, demo, randmodels, validation
from .baselines import gain_importance, mean_abs_shap, saabas_path, split_count
from .model import ModelError, load_ensemble
from .oracle import DEFAULT_MAX_FEATURES, OracleCapError, shapley_brute_force
from .synth import synth_dataset
from .treeshap import tree_shap_ensemble

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2

EXPLAINERS = {
    "treeshap": tree_shap_ensemble,
    "path": saabas_path,
    "brute": shapley_brute_force,
}


class CheckFailed(Exception):
    pass


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise dataio.DataError(f"--{name} is required for '{args.command}'")


def cmd_explain(args):
    _require(args, "model", "data")
    ensemble = load_ensemble(args.model)
    if args.method == "brute" and ensemble.num_features > args.max_features:
        raise OracleCapError(
            f"{ensemble.num_features} features exceeds the brute-force cap of {args.max_features}")
    names, X = dataio.read_instances(args.data, ensemble.num_features)
    explain = EXPLAINERS[args.method]
    records = []
    for row, x in enumerate(X, start=2):
        prediction = ensemble.predict(x)
        attribution = explain(ensemble, x)
        gap = abs(attribution.total - prediction)
        if gap > args.tol * max(1.0, abs(prediction)):
            raise CheckFailed(
                f"row {row}: local accuracy violated, base + sum(phi) = {attribution.total!r} "
                f"but prediction = {prediction!r} (gap {gap:.3g})")
        records.append(dataio.explanation_record(prediction, attribution))
    if args.csv:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["prediction", "base_value"] + [f"phi_{n}" for n in names])
        for r in records:
            writer.writerow([repr(r["prediction"]), repr(r["base_value"])]
                            + [repr(v) for v in r["phi"]])
        _emit(buf.getvalue(), args.out)
    else:
        _emit(dataio.format_jsonl(records), args.out)
    return EXIT_OK


def cmd_importance(args):
    _require(args, "model")
    ensemble = load_ensemble(args.model)
    columns = {"gain": gain_importance(ensemble).scores,
               "split_count": split_count(ensemble).scores}
    names = [f"f{i}" for i in range(ensemble.num_features)]
    if args.data is not None:
        names, X = dataio.read_instances(args.data, ensemble.num_features)
        columns["mean_abs_shap"] = mean_abs_shap(ensemble, X).scores
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["feature"] + list(columns))
    for i, name in enumerate(names):
        writer.writerow([name] + [repr(float(c[i])) for c in columns.values()])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_validate(args):
    abs_tol = args.tol if args.tol is not None else validation.ABS_TOL
    dev = validation.Deviation()
    if args.model is not None:
        ensemble = load_ensemble(args.model)
        if ensemble.num_features > args.max_features:
            raise OracleCapError(
                f"{ensemble.num_features} features exceeds the brute-force cap of "
                f"{args.max_features}; validation needs the oracle")
        if args.data is not None:
            _, X = dataio.read_instances(args.data, ensemble.num_features)
        else:
            X = randmodels.probe_instances(np.random.default_rng(args.seed), ensemble, 20)
        cases = [(ensemble, X)]
    else:
        cases = validation.fixture_cases()
        cases += list(validation.random_cases(args.seed, args.suite))
    for ensemble, X in cases:
        validation.check(ensemble, X, dev, args.max_features, abs_tol, args.inject_error)
    status = "PASS" if dev.passed else "FAIL"
    _emit(f"instances,{dev.cases}\nmax_abs_deviation,{dev.max_abs:.3e}\n"
          f"max_rel_deviation,{dev.max_rel:.3e}\nfailures,{dev.failures}\nstatus,{status}\n",
          args.out)
    return EXIT_OK if dev.passed else EXIT_CHECK


def cmd_demo(args):
    rows, checks = demo.consistency_table()
    _emit(demo.render(rows, checks), args.out)
    return EXIT_OK if all(ok for _, ok in checks) else EXIT_CHECK


def cmd_cluster(args):
    methods = args.method or ["treeshap", "path", "raw"]
    if args.data is not None:
        _require(args, "model")
        ensemble = load_ensemble(args.model)
        names, X, y = dataio.read_labeled(args.data, ensemble.num_features)
    else:
        if args.model is not None:
            raise dataio.DataError("--model without --data: supply the labeled dataset too")
        data = synth_dataset(args.seed, args.n, args.features, args.noise, args.informative)
        ensemble, X, y = data.ensemble, data.X, data.y
        names = [f"f{i}" for i in range(X.shape[1])]
    if len(X) < 2:
        raise dataio.DataError("clustering needs at least two rows")
    if float(np.ptp(y)) == 0.0:
        raise clustering.DegenerateOutcomeError("outcomes have zero variance; R^2 is undefined")
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
    lines = ["method,auc"]
    for method in methods:
        trace, matrix = clustering.supervised_clustering(ensemble, X, y, method)
        lines.append(f"{method},{clustering.r2_auc(trace.r2):.6f}")
        if args.out is not None:
            dataio.write_matrix(os.path.join(args.out, f"r2_{method}.csv"),
                                ["groups_remaining", "r2"],
                                np.column_stack([trace.groups_remaining, trace.r2]),
                                fmt=lambda v: format(v, ".12g"))
            if args.matrix:
                dataio.write_matrix(os.path.join(args.out, f"matrix_{method}.csv"), names, matrix)
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_bench(args):
    rows = bench.run_bench(args.trees, args.depths, args.features, args.seed,
                           args.brute_cap, args.repeat)
    _emit(bench.format_rows(rows, with_timing=not args.no_timing), args.out)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(
        prog="shaptree", description="Exact SHAP values for decision-tree ensembles.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, method_choices=None, method_default=None, multi=False):
        p.add_argument("--model", help="model JSON document")
        p.add_argument("--data", help="dataset CSV (header row; outcome last where needed)")
        p.add_argument("--out", help="output path (directory for 'cluster')")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-features", type=int, default=DEFAULT_MAX_FEATURES,
                       help="feature cap for the brute-force oracle")
        if method_choices:
            if multi:
                p.add_argument("--method", choices=method_choices, action="append",
                               help="may be repeated")
            else:
                p.add_argument("--method", choices=method_choices, default=method_default)
        return p

    p = common(sub.add_parser("explain", help="explain each instance"),
               tuple(EXPLAINERS), "treeshap")
    p.add_argument("--csv", action="store_true", help="flat CSV instead of JSON lines")
    p.add_argument("--tol", type=float, default=1e-9, help="relative local-accuracy tolerance")
    p.set_defaults(func=cmd_explain)

    p = common(sub.add_parser("importance", help="global gain / split-count / mean |SHAP|"))
    p.set_defaults(func=cmd_importance)

    p = common(sub.add_parser("validate", help="compare Tree SHAP with the brute-force oracle"))
    p.add_argument("--tol", type=float, default=None, help="absolute tolerance (default 1e-8)")
    p.add_argument("--suite", type=int, default=50, help="random models when no --model")
    p.add_argument("--inject-error", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)

    p = common(sub.add_parser("cluster", help="supervised clustering R^2 curves"),
               clustering.MATRIX_METHODS, multi=True)
    p.add_argument("--matrix", action="store_true", help="also write attribution matrices")
    p.add_argument("--n", type=int, default=200, help="synthetic rows when no --data")
    p.add_argument("--features", type=int, default=20)
    p.add_argument("--informative", type=int, default=5)
    p.add_argument("--noise", type=float, default=1.0)
    p.set_defaults(func=cmd_cluster)

    p = common(sub.add_parser("bench", help="timing and operation-count scaling table"))
    p.add_argument("--trees", type=_int_list, default=[1, 1000])
    p.add_argument("--depths", type=_int_list, default=[2, 3, 4, 5, 6])
    p.add_argument("--features", type=_int_list, default=[8, 100])
    p.add_argument("--brute-cap", type=int, default=12)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--no-timing", action="store_true", help="omit the seconds column")
    p.set_defaults(func=cmd_bench)

    p = common(sub.add_parser("demo", help="AND-tree consistency table"))
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CheckFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (ModelError, OracleCapError, dataio.DataError, clustering.DegenerateOutcomeError,
            OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
