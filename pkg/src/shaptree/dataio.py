"""CSV datasets and explanation output.

Dataset CSV: a header row, one instance per row; when present, the outcome is
the last column.
"""

import csv
import json

import numpy as np


class DataError(ValueError):
    pass


def read_csv(path):
    """Return ``(header, matrix)`` from a numeric CSV with a header row."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: file is empty")
    header, body = [c.strip() for c in rows[0]], rows[1:]
    if not body:
        raise DataError(f"{path}: no data rows")
    data = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} columns, header has {len(header)}")
        try:
            data[i - 2] = [float(c) for c in row]
        except ValueError as exc:
            raise DataError(f"{path}: row {i}: {exc}") from None
        if not np.all(np.isfinite(data[i - 2])):
            raise DataError(f"{path}: row {i} has non-finite values")
    return header, data


def read_instances(path, num_features):
    """Feature matrix for a model with ``num_features`` inputs.

    A file with exactly one extra column is taken to carry the outcome last,
    which is dropped.
    """
    header, data = read_csv(path)
    if data.shape[1] == num_features:
        return header, data
    if data.shape[1] == num_features + 1:
        return header[:-1], data[:, :-1]
    raise DataError(
        f"{path}: {data.shape[1]} columns do not match a model with {num_features} features")


def read_labeled(path, num_features=None):
    """``(feature names, X, y)`` with the outcome in the last column."""
    header, data = read_csv(path)
    if data.shape[1] < 2:
        raise DataError(f"{path}: need at least one feature column and an outcome column")
    if num_features is not None and data.shape[1] != num_features + 1:
        raise DataError(
            f"{path}: expected {num_features} feature columns plus the outcome, "
            f"got {data.shape[1]} columns")
    return header[:-1], data[:, :-1], data[:, -1]


def write_matrix(path, header, matrix, fmt=repr):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in matrix:
            writer.writerow([fmt(float(v)) for v in row])


def explanation_record(prediction, attribution):
    return {
        "prediction": float(prediction),
        "base_value": float(attribution.phi0),
        "phi": [float(v) for v in attribution.phi],
    }


def format_jsonl(records):
    return "".join(json.dumps(r) + "\n" for r in records)
