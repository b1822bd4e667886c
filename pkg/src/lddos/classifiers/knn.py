"""k-nearest-neighbors with fully specified tie handling."""

from __future__ import annotations

import numpy as np

from .base import BaseModel, check_training_data, merge_hyperparameters, require_positive


class KNearestNeighbors(BaseModel):
    """Euclidean k-NN.

    Vote ties go to the single nearest neighbor's label; equal distances
    rank by lower training index, so predictions are exactly reproducible
    regardless of storage order tricks."""

    algorithm = "knn"
    DEFAULTS = {"k": 5, "chunk": 512}

    def __init__(self, schema, hyperparameters, seed):
        super().__init__(schema, hyperparameters, seed)
        self.X = np.zeros((0, len(schema)))
        self.y = np.zeros(0, dtype=np.int64)

    @classmethod
    def fit(cls, X, y, schema, hyperparameters=None, seed=0):
        hp = merge_hyperparameters(cls.DEFAULTS, hyperparameters)
        require_positive(hp, "k", "chunk")
        X, y = check_training_data(X, y, require_both_classes=False)
        model = cls(schema, hp, seed)
        model.X = X.copy()
        model.y = y.copy()
        return model

    def _predict(self, X):
        k = min(int(self.hyperparameters["k"]), len(self.X))
        chunk = int(self.hyperparameters["chunk"])
        out = np.empty(len(X), dtype=np.int64)
        train_sq = np.einsum("ij,ij->i", self.X, self.X)
        for lo in range(0, len(X), chunk):
            Q = X[lo : lo + chunk]
            d2 = train_sq - 2.0 * (Q @ self.X.T)  # + |q|^2, constant per query
            order = np.argsort(d2, axis=1, kind="stable")[:, :k]
            votes = self.y[order]
            attack = votes.sum(axis=1)
            legit = k - attack
            row = np.where(
                attack > legit, 1, np.where(attack < legit, 0, votes[:, 0])
            )
            out[lo : lo + len(Q)] = row
        return out

    def to_params(self):
        return {
            "X": [[float(v) for v in row] for row in self.X],
            "y": [int(v) for v in self.y],
        }

    @classmethod
    def from_params(cls, schema, hyperparameters, seed, params):
        model = cls(schema, hyperparameters, seed)
        model.X = np.asarray(params["X"], dtype=np.float64).reshape(-1, len(schema))
        model.y = np.asarray(params["y"], dtype=np.int64)
        return model
