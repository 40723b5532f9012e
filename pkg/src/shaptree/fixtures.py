"""Built-in AND-tree models used by the consistency demo.

Feature 0 is "Fever" and feature 1 is "Cough", both coded 0 (no) / 1 (yes)
and split at 0.5.  Model A is a plain AND with output 80 when both are present.
Model B is the same AND plus 10 whenever Cough is present, with Cough at the
root.  Every leaf carries unit cover.
"""

import json
from importlib import resources

import numpy as np

from .model import ensemble_from_dict

FEATURE_NAMES = ("Fever", "Cough")
FEVER, COUGH = 0, 1
BOTH_PRESENT = np.array([1.0, 1.0])


def _load(name):
    text = resources.files(__package__).joinpath("data").joinpath(name).read_text()
    return ensemble_from_dict(json.loads(text))


def model_a():
    return _load("and_model_a.json")


def model_b():
    return _load("and_model_b.json")


def fixture_path(name):
    """Filesystem path of a bundled fixture ('a' or 'b')."""
    return resources.files(__package__).joinpath("data").joinpath(f"and_model_{name}.json")
