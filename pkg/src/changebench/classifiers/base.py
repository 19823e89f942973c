"""Shared classifier machinery: per-feature standardization and the uniform
fit/score/predict contract every model in the zoo follows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ModelError


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class FeatureScaler:
    """Column standardization constants learned on the training fold only.

    Constant columns keep scale 1 so transformed values stay finite; they are
    recorded in ``constant_mask``.
    """

    mean: np.ndarray
    scale: np.ndarray
    constant_mask: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "FeatureScaler":
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        constant = std == 0.0
        scale = np.where(constant, 1.0, std)
        return cls(mean, scale, constant)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


class TrainedModel:
    """Base class for all fitted classifiers.

    Subclasses implement ``_score`` on standardized inputs. ``score`` returns a
    decision score where values at or above ``threshold`` (0.5) classify as
    class 1 ("changed"); margin models map their margin through a sigmoid so
    the shared threshold applies everywhere. A score exactly at the threshold
    classifies as 1.
    """

    def __init__(self, kind: str, scaler: FeatureScaler, n_features: int,
                 threshold: float = 0.5, flags: tuple[str, ...] = ()):
        self.kind = kind
        self.scaler = scaler
        self.n_features = n_features
        self.threshold = threshold
        self.flags = flags

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(0, self.n_features) if X.size == 0 else X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ModelError(
                f"{self.kind}: expected {self.n_features} features, got shape {X.shape}"
            )
        return X

    def score(self, X) -> np.ndarray:
        X = self._check(X)
        if X.shape[0] == 0:
            return np.empty(0)
        return self._score(self.scaler.transform(X))

    def predict(self, X) -> np.ndarray:
        return (self.score(X) >= self.threshold).astype(int)

    def _score(self, Xs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _state_json(self) -> dict:
        return {}

    def to_json(self) -> dict:
        """Versioned audit blob; not a stable cross-version format."""
        return {
            "format_version": 1,
            "kind": self.kind,
            "n_features": self.n_features,
            "threshold": self.threshold,
            "scaler_mean": self.scaler.mean.tolist(),
            "scaler_scale": self.scaler.scale.tolist(),
            "flags": list(self.flags),
            "state": self._state_json(),
        }


class MajorityModel(TrainedModel):
    """Degenerate fallback used when a training fold contains one class."""

    def __init__(self, n_features: int, majority_label: int, kind: str = "MAJORITY"):
        scaler = FeatureScaler(np.zeros(n_features), np.ones(n_features),
                               np.zeros(n_features, dtype=bool))
        super().__init__(kind, scaler, n_features, flags=("single-class training fold",))
        self.majority_label = int(majority_label)

    def _score(self, Xs):
        return np.full(Xs.shape[0], float(self.majority_label))

    def _state_json(self):
        return {"majority_label": self.majority_label}


def validate_training_data(X, y, require_both_classes: bool = True) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int)
    if X.ndim != 2:
        raise ModelError("X must be a 2-D matrix")
    if y.shape != (X.shape[0],):
        raise ModelError("X and y must have equal length")
    if not np.isfinite(X).all():
        raise ModelError("X contains non-finite values")
    if not np.isin(y, (0, 1)).all():
        raise ModelError("y must be 0/1")
    if require_both_classes and y.min() == y.max():
        raise ModelError("training data must contain both classes")
    return X, y
