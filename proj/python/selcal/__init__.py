# Copyright 2026 The selcal Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Selective recalibration: Python bindings over the C++ core."""

import json

from . import _selcal
from ._selcal import (
    IoError,
    TrainingError,
    ValidationError,
    brier,
    choose_threshold,
    coverage_bound,
    coverage_count,
    ece,
    gen_synth,
    load_dataset,
    save_dataset,
)

__version__ = _selcal.__version__

__all__ = [
    "IoError",
    "TrainingError",
    "ValidationError",
    "brier",
    "choose_threshold",
    "coverage_bound",
    "coverage_count",
    "ece",
    "evaluate",
    "gen_synth",
    "load_dataset",
    "save_dataset",
    "train",
    "verify_theorems",
]


def train(data_path, config):
    """Train on a .selc file; returns the model document as a dict."""
    return json.loads(_selcal.train_json(str(data_path), json.dumps(config)))


def evaluate(data_path, model, beta=0.8, bins=15):
    """Selective evaluation of a model dict at coverage ``beta``."""
    return json.loads(_selcal.evaluate_json(str(data_path), json.dumps(model), beta, bins))


def verify_theorems(spec, seed=0, mc_samples=1_000_000):
    """Theory-lab report for a synthetic spec dict (r1 matched when absent)."""
    return json.loads(_selcal.verify_theorems_json(json.dumps(spec), seed, mc_samples))
