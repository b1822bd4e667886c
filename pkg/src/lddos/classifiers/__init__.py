"""Uniform fit/predict/serialize surface over the six learners."""

from __future__ import annotations

import json

from ..dataset import Normalizer
from ..errors import CorruptModel, InvalidHyperparameter, VersionMismatch
from ..utils import atomic_write_text
from .base import BaseModel
from .knn import KNearestNeighbors
from .linear import LinearSVM, LogisticRegression
from .mlp import MLP
from .svm_rbf import RbfSVM
from .tree import DecisionTree, RandomForest

FORMAT_VERSION = 1

REGISTRY: dict[str, type[BaseModel]] = {
    cls.algorithm: cls
    for cls in (
        LogisticRegression,
        KNearestNeighbors,
        LinearSVM,
        RbfSVM,
        DecisionTree,
        RandomForest,
        MLP,
    )
}

ALGORITHMS = tuple(REGISTRY)


def fit(algorithm: str, X, y, schema, hyperparameters=None, seed: int = 0) -> BaseModel:
    if algorithm not in REGISTRY:
        raise InvalidHyperparameter(
            f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}"
        )
    return REGISTRY[algorithm].fit(X, y, schema, hyperparameters, seed)


def serialize(model: BaseModel) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "algorithm": model.algorithm,
        "schema": model.schema,
        "seed": model.seed,
        "hyperparameters": model.hyperparameters,
        "normalization": (
            model.normalization.to_dict() if model.normalization else None
        ),
        "parameters": model.to_params(),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def deserialize(text: str) -> BaseModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"not valid model text: {exc}") from None
    if not isinstance(doc, dict):
        raise CorruptModel("model document must be an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"format_version {version!r}, expected {FORMAT_VERSION}")
    try:
        algorithm = doc["algorithm"]
        cls = REGISTRY.get(algorithm)
        if cls is None:
            raise CorruptModel(f"unknown algorithm {algorithm!r}")
        model = cls.from_params(
            doc["schema"], doc["hyperparameters"], doc["seed"], doc["parameters"]
        )
        norm = doc.get("normalization")
        if norm is not None:
            model.normalization = Normalizer.from_dict(norm)
        return model
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"malformed model document: {exc}") from None


def save_model(path: str, model: BaseModel) -> None:
    atomic_write_text(path, serialize(model))


def load_model(path: str) -> BaseModel:
    with open(path) as fh:
        return deserialize(fh.read())
