"""Learner behavior: separability guarantees, gradients, serialization."""

import json

import numpy as np
import pytest

from lddos import classifiers
from lddos.classifiers import mlp as mlp_mod
from lddos.dataset import fit_normalizer
from lddos.errors import (
    CorruptModel,
    InvalidHyperparameter,
    NonFiniteInput,
    SchemaMismatch,
    SingleClass,
    VersionMismatch,
)

XOR_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_Y = np.array([0, 1, 1, 0])
XY_SCHEMA = ["x", "y"]


def random_problem(n=60, width=6, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2, 2, size=(n, width))
    y = rng.integers(0, 2, size=n)
    y[0], y[1] = 0, 1  # guarantee both classes
    return X, y, [f"f{i}" for i in range(width)]


def separable_problem(n=80, seed=1):
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.vstack([
        rng.normal(-2.0, 0.3, size=(half, 3)),
        rng.normal(2.0, 0.3, size=(n - half, 3)),
    ])
    y = np.array([0] * half + [1] * (n - half))
    return X, y, ["a", "b", "c"]


# -- hard separability guarantees --------------------------------------------

def test_rbf_svm_solves_xor():
    model = classifiers.fit("svm-rbf", XOR_X, XOR_Y, XY_SCHEMA)
    assert model.predict(XOR_X).tolist() == XOR_Y.tolist()


def test_linear_svm_cannot_solve_xor():
    model = classifiers.fit("svm-linear", XOR_X, XOR_Y, XY_SCHEMA)
    acc = float(np.mean(model.predict(XOR_X) == XOR_Y))
    assert acc <= 0.75


def test_dtree_solves_xor():
    model = classifiers.fit("dtree", XOR_X, XOR_Y, XY_SCHEMA)
    assert model.predict(XOR_X).tolist() == XOR_Y.tolist()


def test_knn_k1_solves_xor():
    model = classifiers.fit("knn", XOR_X, XOR_Y, XY_SCHEMA, {"k": 1})
    assert model.predict(XOR_X).tolist() == XOR_Y.tolist()


@pytest.mark.parametrize("algo,hyper", [("dtree", None), ("knn", {"k": 1})])
def test_memorizers_reach_perfect_training_accuracy(algo, hyper):
    X, y, schema = random_problem()
    model = classifiers.fit(algo, X, y, schema, hyper)
    assert np.array_equal(model.predict(X), y)


def test_dtree_conflicting_duplicates_predict_legit():
    X = np.array([[1.0, 1.0], [1.0, 1.0]])
    model = classifiers.fit("dtree", X, np.array([0, 1]), XY_SCHEMA)
    assert model.predict(X).tolist() == [0, 0]


# -- training dynamics -------------------------------------------------------

def test_mlp_gradients_match_finite_differences():
    rng = np.random.default_rng(3)
    dims = [3, 4, 2, 1]
    Ws, bs = mlp_mod.init_params(dims, seed=9)
    X = rng.normal(size=(5, 3))
    y = np.array([0.0, 1.0, 1.0, 0.0, 1.0])
    _, gWs, gbs = mlp_mod.loss_and_grads(Ws, bs, X, y)
    eps = 1e-6

    def fd(params, k, idx):
        saved = params[k][idx]
        params[k][idx] = saved + eps
        hi = mlp_mod.bce_loss(Ws, bs, X, y)
        params[k][idx] = saved - eps
        lo = mlp_mod.bce_loss(Ws, bs, X, y)
        params[k][idx] = saved
        return (hi - lo) / (2 * eps)

    for k, W in enumerate(Ws):
        for idx in np.ndindex(W.shape):
            approx = fd(Ws, k, idx)
            assert gWs[k][idx] == pytest.approx(approx, rel=1e-4, abs=1e-8)
    for k, b in enumerate(bs):
        for idx in np.ndindex(b.shape):
            approx = fd(bs, k, idx)
            assert gbs[k][idx] == pytest.approx(approx, rel=1e-4, abs=1e-8)


def test_logreg_loss_curve_decreases():
    X, y, schema = separable_problem()
    model = classifiers.fit(
        "logreg", X, y, schema, {"lr": 1e-3, "epochs": 200}
    )
    curve = model.loss_curve
    assert len(curve) == 201
    assert all(b <= a + 1e-12 for a, b in zip(curve, curve[1:]))
    assert curve[-1] < curve[0]


def test_mlp_separates_wide_clusters():
    X, y, schema = separable_problem()
    model = classifiers.fit("mlp", X, y, schema)
    assert float(np.mean(model.predict(X) == y)) == 1.0
    assert model.loss_curve[-1] < model.loss_curve[0]


# -- knn tie rules ------------------------------------------------------------

def test_knn_vote_tie_goes_to_nearest():
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1])
    model = classifiers.fit("knn", X, y, ["x"], {"k": 2})
    assert model.predict([[0.4]]).tolist() == [0]
    assert model.predict([[0.6]]).tolist() == [1]


def test_knn_distance_tie_goes_to_lower_index():
    X = np.array([[0.0], [2.0]])
    y = np.array([1, 0])
    model = classifiers.fit("knn", X, y, ["x"], {"k": 1})
    assert model.predict([[1.0]]).tolist() == [1]


def test_knn_k_capped_at_training_size():
    X = np.array([[0.0], [1.0], [2.0]])
    y = np.array([0, 1, 1])
    model = classifiers.fit("knn", X, y, ["x"], {"k": 50})
    assert model.predict([[1.9]]).tolist() == [1]


def test_knn_accepts_single_class():
    X = np.array([[0.0], [1.0]])
    model = classifiers.fit("knn", X, np.array([1, 1]), ["x"])
    assert model.predict([[5.0]]).tolist() == [1]


def test_knn_chunked_matches_unchunked():
    X, y, schema = random_problem(n=70, seed=4)
    Q = np.random.default_rng(5).uniform(-2, 2, size=(33, 6))
    small = classifiers.fit("knn", X, y, schema, {"chunk": 7})
    big = classifiers.fit("knn", X, y, schema, {"chunk": 4096})
    assert np.array_equal(small.predict(Q), big.predict(Q))


# -- determinism ---------------------------------------------------------------

@pytest.mark.parametrize("algo", ["mlp", "rforest", "svm-linear"])
def test_seeded_runs_identical(algo):
    X, y, schema = random_problem(seed=7)
    m1 = classifiers.fit(algo, X, y, schema, seed=42)
    m2 = classifiers.fit(algo, X, y, schema, seed=42)
    assert classifiers.serialize(m1) == classifiers.serialize(m2)
    m3 = classifiers.fit(algo, X, y, schema, seed=43)
    assert classifiers.serialize(m1) != classifiers.serialize(m3)


# -- validation errors ---------------------------------------------------------

def test_unknown_algorithm():
    with pytest.raises(InvalidHyperparameter, match="choose from"):
        classifiers.fit("boosting", XOR_X, XOR_Y, XY_SCHEMA)


def test_empty_training_set():
    with pytest.raises(SingleClass):
        classifiers.fit("dtree", np.zeros((0, 2)), [], XY_SCHEMA)


def test_single_class_rejected():
    with pytest.raises(SingleClass):
        classifiers.fit("logreg", XOR_X, [1, 1, 1, 1], XY_SCHEMA)


def test_non_finite_rejected():
    X = XOR_X.copy()
    X[0, 0] = np.nan
    with pytest.raises(NonFiniteInput):
        classifiers.fit("dtree", X, XOR_Y, XY_SCHEMA)


def test_bad_labels_rejected():
    with pytest.raises(ValueError):
        classifiers.fit("dtree", XOR_X, [0, 1, 2, 1], XY_SCHEMA)


def test_unknown_hyperparameter():
    with pytest.raises(InvalidHyperparameter):
        classifiers.fit("logreg", XOR_X, XOR_Y, XY_SCHEMA, {"momentum": 0.9})


@pytest.mark.parametrize(
    "algo,hyper",
    [
        ("logreg", {"lr": 0}),
        ("knn", {"k": -1}),
        ("mlp", {"epochs": 0}),
        ("svm-rbf", {"C": -2.0}),
    ],
)
def test_non_positive_hyperparameters(algo, hyper):
    with pytest.raises(InvalidHyperparameter):
        classifiers.fit(algo, XOR_X, XOR_Y, XY_SCHEMA, hyper)


def test_predict_width_mismatch():
    model = classifiers.fit("dtree", XOR_X, XOR_Y, XY_SCHEMA)
    with pytest.raises(SchemaMismatch):
        model.predict(np.zeros((2, 5)))


# -- scores ---------------------------------------------------------------------

def test_probability_scores_bounded():
    X, y, schema = separable_problem()
    for algo in ("logreg", "mlp"):
        scores = classifiers.fit(algo, X, y, schema).scores(X)
        assert np.all(scores > 0) and np.all(scores < 1)


def test_knn_has_no_scores():
    model = classifiers.fit("knn", XOR_X, XOR_Y, XY_SCHEMA, {"k": 1})
    assert model.scores(XOR_X) is None


def test_linear_svm_feature_weights_width():
    X, y, schema = separable_problem()
    model = classifiers.fit("svm-linear", X, y, schema)
    assert model.feature_weights().shape == (3,)
    assert np.all(model.feature_weights() >= 0)


# -- serialization ---------------------------------------------------------------

@pytest.mark.parametrize("algo", classifiers.ALGORITHMS)
def test_serialize_roundtrip_prediction_identity(algo):
    X, y, schema = random_problem(n=50, seed=11)
    model = classifiers.fit(algo, X, y, schema, seed=5)
    text = classifiers.serialize(model)
    again = classifiers.deserialize(text)
    Q = np.random.default_rng(6).uniform(-2, 2, size=(40, 6))
    assert np.array_equal(model.predict(Q), again.predict(Q))
    assert classifiers.serialize(again) == text


def test_serialized_document_shape():
    model = classifiers.fit("logreg", XOR_X, XOR_Y, XY_SCHEMA, seed=3)
    doc = json.loads(classifiers.serialize(model))
    assert doc["format_version"] == 1
    assert doc["algorithm"] == "logreg"
    assert doc["schema"] == XY_SCHEMA
    assert doc["seed"] == 3
    assert doc["normalization"] is None
    assert "parameters" in doc


def test_normalization_embedded_and_restored():
    X, y, schema = separable_problem()
    norm = fit_normalizer(X, schema)
    model = classifiers.fit("dtree", norm.apply(X), y, schema)
    model.normalization = norm
    again = classifiers.deserialize(classifiers.serialize(model))
    assert again.normalization is not None
    assert again.normalization.to_dict() == norm.to_dict()


def test_save_load_model(tmp_path):
    model = classifiers.fit("dtree", XOR_X, XOR_Y, XY_SCHEMA)
    path = tmp_path / "model.json"
    classifiers.save_model(str(path), model)
    again = classifiers.load_model(str(path))
    assert np.array_equal(again.predict(XOR_X), XOR_Y)


@pytest.mark.parametrize(
    "text,err",
    [
        ("not a model", CorruptModel),
        ("[1, 2]", CorruptModel),
        (json.dumps({"format_version": 2}), VersionMismatch),
        (
            json.dumps({
                "format_version": 1, "algorithm": "mystery", "schema": [],
                "seed": 0, "hyperparameters": {}, "parameters": {},
            }),
            CorruptModel,
        ),
        (
            json.dumps({
                "format_version": 1, "algorithm": "logreg", "schema": ["x"],
                "seed": 0, "hyperparameters": {},
            }),
            CorruptModel,
        ),
    ],
)
def test_corrupt_model_documents(text, err):
    with pytest.raises(err):
        classifiers.deserialize(text)
