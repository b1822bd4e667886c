"""Linear models: logistic regression and hinge-loss (Pegasos) SVM."""

from __future__ import annotations

import numpy as np

from ..utils import make_rng
from .base import (
    BaseModel,
    check_training_data,
    merge_hyperparameters,
    require_positive,
)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_loss(z: np.ndarray, y: np.ndarray, l2: float, w: np.ndarray) -> float:
    # numerically stable: -log sigmoid(z) = log(1 + e^-z)
    per = y * np.logaddexp(0.0, -z) + (1 - y) * np.logaddexp(0.0, z)
    return float(per.mean() + 0.5 * l2 * np.dot(w, w))


class LogisticRegression(BaseModel):
    """Batch gradient descent on L2-regularized log-loss (bias unpenalized)."""

    algorithm = "logreg"
    DEFAULTS = {"lr": 0.1, "epochs": 500, "l2": 1e-4}

    def __init__(self, schema, hyperparameters, seed):
        super().__init__(schema, hyperparameters, seed)
        self.w = np.zeros(len(schema))
        self.b = 0.0
        self.loss_curve: list[float] = []

    @classmethod
    def fit(cls, X, y, schema, hyperparameters=None, seed=0):
        hp = merge_hyperparameters(cls.DEFAULTS, hyperparameters)
        require_positive(hp, "lr", "epochs")
        X, y = check_training_data(X, y)
        model = cls(schema, hp, seed)
        lr, l2 = float(hp["lr"]), float(hp["l2"])
        w, b = model.w, model.b
        n = len(X)
        yf = y.astype(np.float64)
        for _ in range(int(hp["epochs"])):
            z = X @ w + b
            model.loss_curve.append(_log_loss(z, yf, l2, w))
            err = _sigmoid(z) - yf
            w = w - lr * (X.T @ err / n + l2 * w)
            b = b - lr * float(err.mean())
        model.w, model.b = w, b
        model.loss_curve.append(_log_loss(X @ w + b, yf, l2, w))
        return model

    def _scores(self, X):
        return _sigmoid(X @ self.w + self.b)

    def _predict(self, X):
        return (self._scores(X) > 0.5).astype(np.int64)

    def to_params(self):
        return {
            "w": [float(v) for v in self.w],
            "b": float(self.b),
            "loss_curve": [float(v) for v in self.loss_curve],
        }

    @classmethod
    def from_params(cls, schema, hyperparameters, seed, params):
        model = cls(schema, hyperparameters, seed)
        model.w = np.asarray(params["w"], dtype=np.float64)
        model.b = float(params["b"])
        model.loss_curve = [float(v) for v in params["loss_curve"]]
        return model


class LinearSVM(BaseModel):
    """Mini-batch Pegasos on hinge loss with L2 regularization.

    The bias is an augmented always-one feature, regularized with the
    rest; batch_size trades gradient noise against wall-clock."""

    algorithm = "svm-linear"
    DEFAULTS = {"l2": 1e-4, "epochs": 50, "batch_size": 32}

    def __init__(self, schema, hyperparameters, seed):
        super().__init__(schema, hyperparameters, seed)
        self.w = np.zeros(len(schema) + 1)  # last entry is the bias weight

    @classmethod
    def fit(cls, X, y, schema, hyperparameters=None, seed=0):
        hp = merge_hyperparameters(cls.DEFAULTS, hyperparameters)
        require_positive(hp, "l2", "epochs", "batch_size")
        X, y = check_training_data(X, y)
        model = cls(schema, hp, seed)
        lam = float(hp["l2"])
        batch = int(hp["batch_size"])
        rng = make_rng(seed, "svm-linear")
        Xa = np.hstack([X, np.ones((len(X), 1))])
        ys = np.where(y == 1, 1.0, -1.0)
        n = len(Xa)
        w = model.w
        t = 0
        for _ in range(int(hp["epochs"])):
            order = rng.permutation(n)
            for start in range(0, n, batch):
                t += 1
                idx = order[start : start + batch]
                eta = 1.0 / (lam * t)
                margins = Xa[idx] @ w * ys[idx]
                viol = margins < 1.0
                grad = Xa[idx][viol].T @ ys[idx][viol] / len(idx)
                w = (1.0 - eta * lam) * w + eta * grad
        model.w = w
        return model

    def feature_weights(self) -> np.ndarray:
        """Per-feature weight magnitudes (bias excluded); the elimination
        signal for recursive feature selection."""
        return np.abs(self.w[:-1])

    def _scores(self, X):
        return X @ self.w[:-1] + self.w[-1]

    def _predict(self, X):
        return (self._scores(X) > 0).astype(np.int64)

    def to_params(self):
        return {"w": [float(v) for v in self.w]}

    @classmethod
    def from_params(cls, schema, hyperparameters, seed, params):
        model = cls(schema, hyperparameters, seed)
        model.w = np.asarray(params["w"], dtype=np.float64)
        return model
