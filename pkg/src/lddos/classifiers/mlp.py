"""Small fully-connected network: ReLU hidden layers, sigmoid output."""

from __future__ import annotations

import numpy as np

from ..utils import make_rng
from .base import BaseModel, check_training_data, merge_hyperparameters, require_positive


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def init_params(dims: list[int], seed: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
    rng = make_rng(seed, "mlp-init")
    Ws, bs = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        Ws.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        bs.append(np.zeros(fan_out))
    return Ws, bs


def forward(Ws, bs, X) -> np.ndarray:
    """Output-layer logits."""
    a = X
    for W, b in zip(Ws[:-1], bs[:-1]):
        a = np.maximum(0.0, a @ W + b)
    return (a @ Ws[-1] + bs[-1]).reshape(-1)


def bce_loss(Ws, bs, X, y) -> float:
    z = forward(Ws, bs, X)
    per = y * np.logaddexp(0.0, -z) + (1 - y) * np.logaddexp(0.0, z)
    return float(per.mean())


def loss_and_grads(Ws, bs, X, y):
    """Mean binary cross-entropy and its exact gradients.

    Kept as a pure function of the parameter lists so tests can compare
    against finite differences parameter by parameter."""
    acts = [X]
    zs = []
    a = X
    for W, b in zip(Ws[:-1], bs[:-1]):
        z = a @ W + b
        zs.append(z)
        a = np.maximum(0.0, z)
        acts.append(a)
    logits = (a @ Ws[-1] + bs[-1]).reshape(-1)
    per = y * np.logaddexp(0.0, -logits) + (1 - y) * np.logaddexp(0.0, logits)
    loss = float(per.mean())

    n = len(X)
    delta = ((_sigmoid(logits) - y) / n).reshape(-1, 1)
    gWs = [np.zeros_like(W) for W in Ws]
    gbs = [np.zeros_like(b) for b in bs]
    gWs[-1] = acts[-1].T @ delta
    gbs[-1] = delta.sum(axis=0)
    for layer in range(len(Ws) - 2, -1, -1):
        delta = (delta @ Ws[layer + 1].T) * (zs[layer] > 0)
        gWs[layer] = acts[layer].T @ delta
        gbs[layer] = delta.sum(axis=0)
    return loss, gWs, gbs


class MLP(BaseModel):
    """Mini-batch SGD on binary cross-entropy."""

    algorithm = "mlp"
    DEFAULTS = {"hidden": [32, 16], "lr": 0.01, "epochs": 50, "batch_size": 32}

    def __init__(self, schema, hyperparameters, seed):
        super().__init__(schema, hyperparameters, seed)
        dims = [len(schema)] + list(self.hyperparameters["hidden"]) + [1]
        self.Ws, self.bs = init_params(dims, seed)
        self.loss_curve: list[float] = []

    @classmethod
    def fit(cls, X, y, schema, hyperparameters=None, seed=0):
        hp = merge_hyperparameters(cls.DEFAULTS, hyperparameters)
        require_positive(hp, "lr", "epochs", "batch_size")
        X, y = check_training_data(X, y)
        model = cls(schema, hp, seed)
        lr = float(hp["lr"])
        batch = int(hp["batch_size"])
        rng = make_rng(seed, "mlp-shuffle")
        yf = y.astype(np.float64)
        n = len(X)
        Ws, bs = model.Ws, model.bs
        model.loss_curve.append(bce_loss(Ws, bs, X, yf))
        for _ in range(int(hp["epochs"])):
            order = rng.permutation(n)
            for start in range(0, n, batch):
                idx = order[start : start + batch]
                _, gWs, gbs = loss_and_grads(Ws, bs, X[idx], yf[idx])
                for k in range(len(Ws)):
                    Ws[k] = Ws[k] - lr * gWs[k]
                    bs[k] = bs[k] - lr * gbs[k]
            model.loss_curve.append(bce_loss(Ws, bs, X, yf))
        model.Ws, model.bs = Ws, bs
        return model

    def _scores(self, X):
        return _sigmoid(forward(self.Ws, self.bs, X))

    def _predict(self, X):
        return (self._scores(X) > 0.5).astype(np.int64)

    def to_params(self):
        return {
            "Ws": [[[float(v) for v in row] for row in W] for W in self.Ws],
            "bs": [[float(v) for v in b] for b in self.bs],
            "loss_curve": [float(v) for v in self.loss_curve],
        }

    @classmethod
    def from_params(cls, schema, hyperparameters, seed, params):
        model = cls(schema, hyperparameters, seed)
        model.Ws = [np.asarray(W, dtype=np.float64) for W in params["Ws"]]
        model.bs = [np.asarray(b, dtype=np.float64) for b in params["bs"]]
        model.loss_curve = [float(v) for v in params["loss_curve"]]
        return model
