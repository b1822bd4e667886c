"""Shared classifier plumbing: data validation and the model contract.

Every model exposes predict (binary labels, attack = 1), optional
scores, and an exact parameter dump used by the text serializer."""

from __future__ import annotations

import numpy as np

from ..errors import (
    InvalidHyperparameter,
    NonFiniteInput,
    SchemaMismatch,
    SingleClass,
)


def as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    return X


def check_training_data(X, y, require_both_classes: bool = True):
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if len(y) != len(X):
        raise SchemaMismatch(f"{len(X)} rows vs {len(y)} labels", [])
    if len(X) == 0:
        raise SingleClass("cannot fit on an empty training set")
    if not np.isfinite(X).all():
        raise NonFiniteInput("training matrix contains NaN or infinity")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 (legit) or 1 (attack)")
    if require_both_classes and len(np.unique(y)) < 2:
        raise SingleClass("training set contains a single class")
    return X, y


def merge_hyperparameters(defaults: dict, overrides: dict | None) -> dict:
    merged = dict(defaults)
    for key, value in (overrides or {}).items():
        if key not in defaults:
            raise InvalidHyperparameter(f"unknown hyperparameter {key!r}")
        merged[key] = value
    return merged


def require_positive(hp: dict, *keys: str) -> None:
    for key in keys:
        if hp[key] is not None and not hp[key] > 0:
            raise InvalidHyperparameter(f"{key} must be positive, got {hp[key]!r}")


class BaseModel:
    """Common behavior: schema checking and the predict entry point."""

    algorithm = ""

    def __init__(self, schema: list[str], hyperparameters: dict, seed: int):
        self.schema = list(schema)
        self.hyperparameters = dict(hyperparameters)
        self.seed = int(seed)
        # optional Normalizer fitted on the training rows; applied by the
        # pipeline before predict so fresh captures match training scale
        self.normalization = None

    def _check_rows(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape[1] != len(self.schema):
            raise SchemaMismatch(
                f"model expects {len(self.schema)} features, rows have {X.shape[1]}",
                self.schema,
            )
        return X

    def predict(self, X) -> np.ndarray:
        return self._predict(self._check_rows(X))

    def scores(self, X) -> np.ndarray | None:
        """Continuous decision values where the algorithm defines them."""
        return self._scores(self._check_rows(X))

    # subclass hooks
    def _predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _scores(self, X: np.ndarray) -> np.ndarray | None:
        return None

    def to_params(self) -> dict:
        raise NotImplementedError

    @classmethod
    def from_params(cls, schema, hyperparameters, seed, params) -> "BaseModel":
        raise NotImplementedError
