"""Heterogeneous ensembles over the 18 base classifiers: majority voting
(MVE), best-training-accuracy selection (BTE), and a random-forest
meta-learner on the base predictions (NDTF)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifiers import TrainedModel, classifier_index
from .classifiers.tree import RandomForest
from .errors import ModelError

ENSEMBLE_KINDS: tuple[str, ...] = ("BTE", "MVE", "NDTF")

NDTF_TREES = 50


@dataclass
class EnsembleModel:
    """A fitted ensemble over an ordered list of base models.

    MVE votes need no training state; BTE stores the index of the base model
    with maximal training accuracy (ties break toward the earliest kind in
    canonical classifier order); NDTF stores a random forest trained on the
    n x 18 matrix of base predictions.
    """

    kind: str
    base: tuple[TrainedModel, ...]
    selected_index: int | None = None
    forest: RandomForest | None = None

    def predict(self, X) -> np.ndarray:
        if self.kind == "MVE":
            votes = self._base_predictions(X)
            # even 9-9 splits go to class 1
            return (votes.sum(axis=1) >= len(self.base) / 2.0).astype(int)
        if self.kind == "BTE":
            return self.base[self.selected_index].predict(X)
        if self.kind == "NDTF":
            return (self.forest.predict_mean(self._base_predictions(X)) >= 0.5).astype(int)
        raise ModelError(f"unknown ensemble kind {self.kind!r}")

    def _base_predictions(self, X) -> np.ndarray:
        return np.column_stack([m.predict(X) for m in self.base]).astype(float)


def fit_ensemble(kind: str, X_train, y_train, base: list[TrainedModel] | tuple,
                 seed: int = 0, n_trees: int = NDTF_TREES) -> EnsembleModel:
    """Build an ensemble from base models already fitted on ``X_train``."""
    if kind not in ENSEMBLE_KINDS:
        raise ModelError(f"unknown ensemble kind {kind!r}")
    base = tuple(base)
    if not base:
        raise ModelError("ensemble needs at least one base model")
    if kind == "MVE":
        return EnsembleModel("MVE", base)
    y_train = np.asarray(y_train).astype(int)
    if kind == "BTE":
        accuracies = [float((m.predict(X_train) == y_train).mean()) for m in base]
        order_keys = []
        for i, m in enumerate(base):
            try:
                canon = classifier_index(m.kind)
            except ModelError:
                canon = len(base) + i
            order_keys.append((-accuracies[i], canon, i))
        selected = min(range(len(base)), key=lambda i: order_keys[i])
        return EnsembleModel("BTE", base, selected_index=selected)
    # NDTF: forest on the base-prediction matrix
    preds = np.column_stack([m.predict(X_train) for m in base]).astype(float)
    forest = RandomForest(
        n_trees=n_trees,
        max_features=max(1, math.ceil(math.sqrt(len(base)))),
        seed=seed,
    ).fit(preds, y_train)
    return EnsembleModel("NDTF", base, forest=forest)


def ensemble_predict(model: EnsembleModel, X) -> np.ndarray:
    return model.predict(X)
