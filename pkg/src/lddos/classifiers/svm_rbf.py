"""Gaussian-kernel SVM trained by simplified SMO."""

from __future__ import annotations

import numpy as np

from ..utils import make_rng
from .base import BaseModel, check_training_data, merge_hyperparameters, require_positive


def _sqdist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d = (
        np.einsum("ij,ij->i", A, A)[:, None]
        + np.einsum("ij,ij->i", B, B)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.maximum(d, 0.0)


class RbfSVM(BaseModel):
    """Simplified sequential minimal optimization over K = exp(-g*d^2).

    gamma defaults to 1/|schema| when left unset; max_sweeps bounds the
    outer loop so pathological inputs cannot spin forever."""

    algorithm = "svm-rbf"
    DEFAULTS = {"C": 1.0, "gamma": None, "tol": 1e-3, "max_passes": 5, "max_sweeps": 200}

    def __init__(self, schema, hyperparameters, seed):
        super().__init__(schema, hyperparameters, seed)
        self.sv = np.zeros((0, len(schema)))
        self.coef = np.zeros(0)  # alpha_i * y_i per support vector
        self.b = 0.0
        self.gamma = 1.0 / max(1, len(schema))

    @classmethod
    def fit(cls, X, y, schema, hyperparameters=None, seed=0):
        hp = merge_hyperparameters(cls.DEFAULTS, hyperparameters)
        require_positive(hp, "C", "gamma", "tol", "max_passes", "max_sweeps")
        X, y = check_training_data(X, y)
        model = cls(schema, hp, seed)
        gamma = float(hp["gamma"]) if hp["gamma"] is not None else 1.0 / X.shape[1]
        C, tol = float(hp["C"]), float(hp["tol"])
        rng = make_rng(seed, "svm-rbf")
        n = len(X)
        ys = np.where(y == 1, 1.0, -1.0)
        K = np.exp(-gamma * _sqdist(X, X))
        alpha = np.zeros(n)
        b = 0.0
        passes = 0
        sweeps = 0
        while passes < int(hp["max_passes"]) and sweeps < int(hp["max_sweeps"]):
            sweeps += 1
            changed = 0
            for i in range(n):
                coef = alpha * ys
                E_i = float(coef @ K[:, i]) + b - ys[i]
                if not (
                    (ys[i] * E_i < -tol and alpha[i] < C)
                    or (ys[i] * E_i > tol and alpha[i] > 0)
                ):
                    continue
                j = int(rng.integers(0, n - 1))
                if j >= i:
                    j += 1
                E_j = float(coef @ K[:, j]) + b - ys[j]
                ai_old, aj_old = alpha[i], alpha[j]
                if ys[i] != ys[j]:
                    L, H = max(0.0, aj_old - ai_old), min(C, C + aj_old - ai_old)
                else:
                    L, H = max(0.0, ai_old + aj_old - C), min(C, ai_old + aj_old)
                if L == H:
                    continue
                eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
                if eta >= 0:
                    continue
                aj = aj_old - ys[j] * (E_i - E_j) / eta
                aj = min(H, max(L, aj))
                if abs(aj - aj_old) < 1e-5:
                    continue
                ai = ai_old + ys[i] * ys[j] * (aj_old - aj)
                alpha[i], alpha[j] = ai, aj
                b1 = b - E_i - ys[i] * (ai - ai_old) * K[i, i] - ys[j] * (aj - aj_old) * K[i, j]
                b2 = b - E_j - ys[i] * (ai - ai_old) * K[i, j] - ys[j] * (aj - aj_old) * K[j, j]
                if 0 < ai < C:
                    b = b1
                elif 0 < aj < C:
                    b = b2
                else:
                    b = (b1 + b2) / 2.0
                changed += 1
            passes = passes + 1 if changed == 0 else 0
        keep = alpha > 0
        model.sv = X[keep].copy()
        model.coef = (alpha * ys)[keep]
        model.b = float(b)
        model.gamma = gamma
        return model

    def _scores(self, X):
        if len(self.sv) == 0:
            return np.full(len(X), self.b)
        K = np.exp(-self.gamma * _sqdist(X, self.sv))
        return K @ self.coef + self.b

    def _predict(self, X):
        return (self._scores(X) > 0).astype(np.int64)

    def to_params(self):
        return {
            "sv": [[float(v) for v in row] for row in self.sv],
            "coef": [float(v) for v in self.coef],
            "b": float(self.b),
            "gamma": float(self.gamma),
        }

    @classmethod
    def from_params(cls, schema, hyperparameters, seed, params):
        model = cls(schema, hyperparameters, seed)
        model.sv = np.asarray(params["sv"], dtype=np.float64).reshape(-1, len(schema))
        model.coef = np.asarray(params["coef"], dtype=np.float64)
        model.b = float(params["b"])
        model.gamma = float(params["gamma"])
        return model
