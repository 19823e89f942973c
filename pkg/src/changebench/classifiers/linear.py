"""Regression-family classifiers: least squares (LINR), degree-2 polynomial
least squares (POLYR), and ridge-stabilized logistic regression (LOGR)."""

from __future__ import annotations

import numpy as np

from ..errors import ModelError
from .base import FeatureScaler, TrainedModel, sigmoid, validate_training_data


def poly_expand(X: np.ndarray) -> np.ndarray:
    """Degree-2 expansion: linear terms, squares, then pairwise products (i<j)."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    blocks = [X, X**2]
    for i in range(d):
        for j in range(i + 1, d):
            blocks.append((X[:, i] * X[:, j])[:, None])
    return np.hstack(blocks) if blocks else X


class _LeastSquaresModel(TrainedModel):
    def __init__(self, kind, scaler, n_features, coef, intercept, expand,
                 expansion_scaler=None, flags=()):
        super().__init__(kind, scaler, n_features, flags=flags)
        self.coef = coef
        self.intercept = intercept
        self._expand = expand
        self._expansion_scaler = expansion_scaler

    def _design(self, Xs):
        if not self._expand:
            return Xs
        design = poly_expand(Xs)
        if self._expansion_scaler is not None:
            design = self._expansion_scaler.transform(design)
        return design

    def _score(self, Xs):
        return self._design(Xs) @ self.coef + self.intercept

    def _state_json(self):
        return {"coef": self.coef.tolist(), "intercept": float(self.intercept)}


class _LogisticModel(TrainedModel):
    def __init__(self, kind, scaler, n_features, coef, intercept, flags=()):
        super().__init__(kind, scaler, n_features, flags=flags)
        self.coef = coef
        self.intercept = intercept

    def _score(self, Xs):
        return sigmoid(Xs @ self.coef + self.intercept)

    def _state_json(self):
        return {"coef": self.coef.tolist(), "intercept": float(self.intercept)}


def _lstsq_fit(design: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float, bool]:
    """Least squares on [1 | design]; minimum-norm solution when singular."""
    full = np.column_stack([np.ones(design.shape[0]), design])
    solution, _, rank, _ = np.linalg.lstsq(full, y.astype(float), rcond=None)
    return solution[1:], float(solution[0]), rank < full.shape[1]


def fit_logistic(X: np.ndarray, y: np.ndarray, ridge: float = 1e-6,
                 max_iter: int = 100, kind: str = "LOGR") -> TrainedModel:
    """Multivariate logistic regression by IRLS with a small ridge on the slopes."""
    X, y = validate_training_data(X, y)
    scaler = FeatureScaler.fit(X)
    Xs = scaler.transform(X)
    n, d = Xs.shape
    design = np.column_stack([np.ones(n), Xs])
    beta = np.zeros(d + 1)
    penalty = np.diag([0.0] + [ridge] * d)
    yf = y.astype(float)
    flags: tuple[str, ...] = ()
    for _ in range(max_iter):
        p = sigmoid(design @ beta)
        w = p * (1.0 - p)
        grad = design.T @ (yf - p) - penalty @ beta
        hess = design.T @ (design * w[:, None]) + penalty
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
            flags = ("singular IRLS system; least-squares step",)
        beta = beta + step
        if np.max(np.abs(step)) < 1e-10:
            break
        if np.max(np.abs(beta)) > 1e6:
            flags = ("diverging coefficients; stopped early",)
            break
    return _LogisticModel(kind, scaler, d, beta[1:], float(beta[0]), flags=flags)


POLYR_UNDERDETERMINED_RIDGE = 10.0


def fit_regression_family(kind: str, X, y, ridge: float = 1e-6) -> TrainedModel:
    """Fit LINR, POLYR, or LOGR; classification thresholds the score at 0.5.

    When POLYR's degree-2 expansion has at least as many columns as training
    rows, a plain minimum-norm solution interpolates the fold and generalizes
    at chance level, so that regime switches to a ridge-stabilized solve on
    the standardized expansion (flagged on the model).
    """
    if kind == "LOGR":
        return fit_logistic(X, y, ridge=ridge)
    if kind not in ("LINR", "POLYR"):
        raise ModelError(f"unknown regression-family kind {kind!r}")
    X, y = validate_training_data(X, y)
    scaler = FeatureScaler.fit(X)
    Xs = scaler.transform(X)
    expand = kind == "POLYR"
    design = poly_expand(Xs) if expand else Xs
    if expand and design.shape[1] + 1 >= design.shape[0]:
        expansion_scaler = FeatureScaler.fit(design)
        design_std = expansion_scaler.transform(design)
        full = np.column_stack([np.ones(design_std.shape[0]), design_std])
        penalty = POLYR_UNDERDETERMINED_RIDGE * np.eye(full.shape[1])
        penalty[0, 0] = 0.0
        solution = np.linalg.solve(full.T @ full + penalty, full.T @ y.astype(float))
        return _LeastSquaresModel(
            kind, scaler, X.shape[1], solution[1:], float(solution[0]), expand,
            expansion_scaler=expansion_scaler,
            flags=("underdetermined expansion; ridge-stabilized fit",))
    coef, intercept, deficient = _lstsq_fit(design, y)
    flags = ("rank-deficient design; minimum-norm solution",) if deficient else ()
    return _LeastSquaresModel(kind, scaler, X.shape[1], coef, intercept, expand, flags=flags)
