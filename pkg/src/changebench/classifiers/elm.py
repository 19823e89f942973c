"""Extreme learning machine: a seeded random hidden layer with least-squares
output weights. Three hidden maps are supported: identity of a random
projection (linear), a degree-2 polynomial of it, and Gaussian RBF units over
centers drawn from the training rows."""

from __future__ import annotations

import numpy as np

from ..errors import ModelError
from .base import FeatureScaler, TrainedModel, validate_training_data

ELM_ACTIVATIONS = ("linear", "polynomial", "rbf")


class ElmModel(TrainedModel):
    def __init__(self, kind, scaler, n_features, activation, proj_w, proj_b,
                 centers, rbf_gamma, out_w, out_b, flags=()):
        super().__init__(kind, scaler, n_features, flags=flags)
        self.activation = activation
        self.proj_w = proj_w
        self.proj_b = proj_b
        self.centers = centers
        self.rbf_gamma = rbf_gamma
        self.out_w = out_w
        self.out_b = out_b

    def _hidden(self, Xs):
        if self.activation == "rbf":
            sq = ((Xs[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=2)
            return np.exp(-self.rbf_gamma * sq)
        z = Xs @ self.proj_w + self.proj_b
        return z if self.activation == "linear" else (z + 1.0) ** 2

    def _score(self, Xs):
        return self._hidden(Xs) @ self.out_w + self.out_b

    def _state_json(self):
        return {"activation": self.activation, "hidden": int(self.out_w.size),
                "rbf_gamma": self.rbf_gamma}


def fit_elm(X, y, activation: str, hidden: int, seed: int,
            kind: str | None = None) -> ElmModel:
    """Random hidden layer (uniform [-1, 1] weights) plus pseudo-inverse output.

    For the RBF map, centers are training rows: when ``hidden`` >= n_rows the
    first n centers cover every row (so distinct rows can be interpolated
    exactly); otherwise a seeded sample without replacement is used.
    """
    if activation not in ELM_ACTIVATIONS:
        raise ModelError(f"unknown ELM activation {activation!r}")
    if hidden < 1:
        raise ModelError("hidden must be >= 1")
    X, y = validate_training_data(X, y)
    scaler = FeatureScaler.fit(X)
    Xs = scaler.transform(X)
    n, d = Xs.shape
    rng = np.random.default_rng(seed)

    proj_w = proj_b = centers = None
    rbf_gamma = 0.0
    if activation == "rbf":
        if hidden >= n:
            extra = rng.integers(0, n, hidden - n)
            idx = np.concatenate([np.arange(n), extra])
        else:
            idx = rng.choice(n, hidden, replace=False)
        centers = Xs[idx]
        rbf_gamma = 1.0 / d
        sq = ((Xs[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        H = np.exp(-rbf_gamma * sq)
    else:
        proj_w = rng.uniform(-1.0, 1.0, (d, hidden))
        proj_b = rng.uniform(-1.0, 1.0, hidden)
        z = Xs @ proj_w + proj_b
        H = z if activation == "linear" else (z + 1.0) ** 2

    design = np.column_stack([H, np.ones(n)])
    solution = np.linalg.lstsq(design, y.astype(float), rcond=None)[0]
    return ElmModel(kind or f"ELM-{activation[:4].upper()}", scaler, d, activation,
                    proj_w, proj_b, centers, rbf_gamma, solution[:-1], float(solution[-1]))
