import json

import numpy as np
import pytest

import safeqml as sq


def rz(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def ry(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def dense_layer(angles):
    n = angles.shape[0]
    dim = 2**n
    u = np.eye(dim, dtype=complex)
    for q, (a, b, g) in enumerate(angles):
        op = np.array([[1.0]], dtype=complex)
        for k in range(n):
            op = np.kron(op, rz(g) @ ry(b) @ rz(a) if k == q else np.eye(2))
        u = op @ u
    if n > 1:
        for c in range(n):
            t = (c + 1) % n
            perm = np.zeros((dim, dim))
            for i in range(dim):
                j = i ^ (1 << (n - 1 - t)) if i & (1 << (n - 1 - c)) else i
                perm[j, i] = 1
            u = perm @ u
    return u


def test_amplitude_encode_pads_and_normalises():
    psi = sq.amplitude_encode([3.0, 4.0], 2)
    np.testing.assert_allclose(psi, [0.6, 0.8, 0, 0], atol=1e-15)


def test_zero_vector_raises():
    with pytest.raises(sq.SafeqmlError, match="ZeroVector"):
        sq.amplitude_encode([0.0, 0.0], 1)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_layer_matches_dense_matrix(n):
    rng = np.random.default_rng(n)
    angles = rng.uniform(0, 2 * np.pi, (n, 3))
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    psi /= np.linalg.norm(psi)
    out = sq.strongly_entangling_layer(psi, angles)
    np.testing.assert_allclose(out, dense_layer(angles) @ psi, atol=1e-12)
    back = sq.adjoint_entangling_layer(out, angles)
    np.testing.assert_allclose(back, psi, atol=1e-12)


def test_pauli_z_on_basis_state():
    np.testing.assert_allclose(sq.pauli_z(np.array([0, 1, 0, 0], dtype=complex)), [1.0, -1.0])


def test_circuit_backward_matches_finite_differences():
    rng = np.random.default_rng(3)
    x = rng.normal(size=5)
    angles = rng.uniform(0, 2 * np.pi, (3, 3))
    w = rng.normal(size=3)
    dx, dangles = sq.circuit_backward(list(x), angles, list(w))

    def f(xv, av):
        return float(np.dot(w, sq.circuit_forward(list(xv), av)))

    h = 1e-6
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        assert dx[i] == pytest.approx((f(x + e, angles) - f(x - e, angles)) / (2 * h), abs=1e-7)
    e = np.zeros_like(angles)
    e[1, 2] = h
    assert dangles[1, 2] == pytest.approx((f(x, angles + e) - f(x, angles - e)) / (2 * h), abs=1e-7)


def test_rg_equals_auc_on_binary_reference():
    y = [0, 0, 1, 1, 0, 1]
    s = [0.1, 0.4, 0.35, 0.8, 0.2, 0.9]
    pos = [b for a, b in zip(y, s) if a == 1]
    neg = [b for a, b in zip(y, s) if a == 0]
    auc = np.mean([[1.0 if p > q else 0.5 if p == q else 0.0 for q in neg] for p in pos])
    assert sq.rg_score([float(v) for v in y], s) == pytest.approx(auc, abs=1e-12)


def test_metric_examples():
    assert sq.cvm([1, 2, 3, 4], [1, 2, 3, 4]) == 0.0
    assert sq.gini([1, 1, 1, 1]) == pytest.approx(0.0)
    assert sq.curve_area([0, 0.5, 1], [1, 1, 1]) == pytest.approx(1.0)
    assert sq.f1_macro([0, 1, 1], [0, 1, 1]) == pytest.approx(1.0)


def test_parameter_counts():
    assert sq.parameter_count("QML", 512, 3) == 262713
    assert sq.parameter_count("MLP", 512, 3) == 264195
    assert sq.parameter_count("Linear", 512, 3) == 1539
    assert sq.qubits_for_dimension(512) == 9


def test_train_predict_and_checkpoint_round_trip():
    x, y = sq.generate_synthetic(n_samples=120, n_features=8, n_classes=3, seed=5)
    assert x.shape == (120, 8)
    x = (x - x.mean(axis=0)) / x.std(axis=0)
    model = sq.train("QML", x, y, config={"epochs": 30, "seed": 2})
    probs = model.predict_proba(x)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    assert sq.f1_macro(y, model.predict(x)) > 0.9
    assert 0.0 <= sq.rga(y, probs) <= 1.0
    again = sq.Classifier.from_json(model.to_json())
    np.testing.assert_array_equal(again.predict_proba(x), probs)


def test_run_experiment_report():
    x, y = sq.generate_synthetic(n_samples=90, n_features=8, n_classes=3, seed=1)
    config = {
        "kinds": ["QML", "Linear"],
        "folds": 3,
        "seed": 4,
        "train": {"epochs": 3},
        "curves": {"noise_multipliers": [0, 1], "fgsm_epsilons": [0, 0.1],
                   "removal_fractions": [0, 0.5], "feature_fractions": [0, 1]},
    }
    report = sq.run_experiment(x, y, config=config)
    assert report["config_hash"] == sq.config_hash(config)
    assert len(report["folds"]) == 6
    for row in report["folds"]:
        assert row["curves"]["rgr_noise"]["scores"][0] == 1.0
        assert 0.0 <= row["metrics"]["aurgr_noise"] <= 1.0
    assert json.dumps(report) == json.dumps(sq.run_experiment(x, y, config=config))


def test_cli_usage_error():
    assert sq.cli("full-run", "--kinds", "SVM") != 0
