"""Python bindings for the safeqml core library."""

import json

from ._safeqml import (
    Classifier,
    SafeqmlError,
    accuracy,
    adjoint_entangling_layer,
    amplitude_encode,
    circuit_backward,
    circuit_forward,
    curve_area,
    cvm,
    f1_macro,
    generate_synthetic,
    gini,
    load_csv,
    mse_prob,
    parameter_count,
    pauli_z,
    qubits_for_dimension,
    rg_from_cvm,
    rg_score,
    rga,
    rge,
    rgr,
    strongly_entangling_layer,
)
from . import _safeqml

__all__ = [
    "Classifier",
    "SafeqmlError",
    "accuracy",
    "adjoint_entangling_layer",
    "amplitude_encode",
    "circuit_backward",
    "circuit_forward",
    "cli",
    "config_hash",
    "curve_area",
    "cvm",
    "f1_macro",
    "generate_synthetic",
    "gini",
    "load_csv",
    "mse_prob",
    "parameter_count",
    "pauli_z",
    "qubits_for_dimension",
    "rg_from_cvm",
    "rg_score",
    "rga",
    "rge",
    "rgr",
    "run_experiment",
    "strongly_entangling_layer",
    "train",
]


def _dump(config):
    return "" if config is None else json.dumps(config)


def train(kind, features, labels, n_classes=None, config=None):
    """Train a "QML", "MLP" or "Linear" classifier; `config` holds training fields."""
    return _safeqml.train(kind, features, list(labels), n_classes, _dump(config))


def run_experiment(features, labels, n_classes=None, config=None):
    """Stratified k-fold experiment; returns the report as a dict."""
    text = _safeqml.run_experiment_json(features, list(labels), n_classes, _dump(config))
    return json.loads(text)


def config_hash(config=None):
    return _safeqml.config_hash(_dump(config))


def cli(*args):
    """Run the command-line tool in-process and return its exit code."""
    return _safeqml.cli([str(a) for a in args])
