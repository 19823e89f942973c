"""Soft-margin SVM trained by SMO-style pairwise coordinate ascent on the dual.

The working pair is chosen deterministically (first KKT violator in index
order, partner maximizing |E_i - E_j| with sequential fallback), so fits are
reproducible without any RNG.
"""

from __future__ import annotations

import numpy as np

from .base import FeatureScaler, TrainedModel, sigmoid, validate_training_data
from .kernels import KernelSpec


class SvmModel(TrainedModel):
    def __init__(self, kind, scaler, n_features, support_x, support_coef, bias,
                 kernel: KernelSpec, alphas, targets, dual_objective, flags=()):
        super().__init__(kind, scaler, n_features, flags=flags)
        self.support_x = support_x
        self.support_coef = support_coef  # alpha_i * t_i for support vectors
        self.bias = bias
        self.kernel = kernel
        self.alphas = alphas
        self.targets = targets
        self.dual_objective = dual_objective

    def margin(self, X) -> np.ndarray:
        X = self._check(X)
        if X.shape[0] == 0:
            return np.empty(0)
        Xs = self.scaler.transform(X)
        return self.kernel.gram(Xs, self.support_x) @ self.support_coef + self.bias

    def _score(self, Xs):
        return sigmoid(self.kernel.gram(Xs, self.support_x) @ self.support_coef + self.bias)

    def _state_json(self):
        return {
            "kernel": {"kind": self.kernel.kind, "degree": self.kernel.degree,
                       "gamma": self.kernel.gamma, "coef0": self.kernel.coef0},
            "bias": self.bias,
            "n_support": int(self.support_x.shape[0]),
            "dual_objective": self.dual_objective,
        }


def _dual_objective(alpha: np.ndarray, t: np.ndarray, K: np.ndarray) -> float:
    at = alpha * t
    return float(alpha.sum() - 0.5 * at @ K @ at)


def fit_svm(X, y, kernel: KernelSpec, c: float = 1.0, tol: float = 1e-3,
            max_passes: int = 200, kind: str | None = None) -> SvmModel:
    """Fit a soft-margin SVM; labels are recoded to -1/+1 internally.

    Stops when a full sweep changes no multiplier or after ``max_passes``
    sweeps (then the best iterate is returned, flagged). KKT violations are
    tolerated up to ``tol``.
    """
    X, y = validate_training_data(X, y)
    scaler = FeatureScaler.fit(X)
    Xs = scaler.transform(X)
    n = Xs.shape[0]
    t = np.where(y == 1, 1.0, -1.0)
    resolved = KernelSpec(kernel.kind, kernel.degree,
                          kernel.resolve_gamma(Xs.shape[1]), kernel.coef0)
    K = resolved.gram(Xs, Xs)

    alpha = np.zeros(n)
    b = 0.0
    errors = -t.copy()  # f(x) - t with f = 0 initially

    def try_update(i: int, j: int) -> bool:
        nonlocal b, errors
        if i == j:
            return False
        ai_old, aj_old = alpha[i], alpha[j]
        if t[i] != t[j]:
            lo = max(0.0, aj_old - ai_old)
            hi = min(c, c + aj_old - ai_old)
        else:
            lo = max(0.0, ai_old + aj_old - c)
            hi = min(c, ai_old + aj_old)
        if hi - lo < 1e-12:
            return False
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        if eta >= -1e-12:
            return False
        aj = aj_old - t[j] * (errors[i] - errors[j]) / eta
        aj = min(max(aj, lo), hi)
        if abs(aj - aj_old) < 1e-7 * (aj + aj_old + 1e-7):
            return False
        ai = ai_old + t[i] * t[j] * (aj_old - aj)
        di, dj = ai - ai_old, aj - aj_old
        b1 = b - errors[i] - t[i] * di * K[i, i] - t[j] * dj * K[i, j]
        b2 = b - errors[j] - t[i] * di * K[i, j] - t[j] * dj * K[j, j]
        if 0.0 < ai < c:
            b_new = b1
        elif 0.0 < aj < c:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        alpha[i], alpha[j] = ai, aj
        errors += t[i] * di * K[i] + t[j] * dj * K[j] + (b_new - b)
        b = b_new
        return True

    converged = False
    for _ in range(max_passes):
        changed = 0
        for i in range(n):
            e_i = errors[i]
            violates = (t[i] * e_i < -tol and alpha[i] < c) or (t[i] * e_i > tol and alpha[i] > 0)
            if not violates:
                continue
            gaps = np.abs(e_i - errors)
            gaps[i] = -1.0
            j = int(np.argmax(gaps))
            if try_update(i, j):
                changed += 1
                continue
            for j in range(n):  # deterministic fallback sweep
                if try_update(i, j):
                    changed += 1
                    break
        if changed == 0:
            converged = True
            break
    flags = () if converged else ("SMO pass limit reached; best iterate returned",)

    support = alpha > 1e-12
    support_x = Xs[support]
    support_coef = (alpha * t)[support]
    if support_x.shape[0] == 0:  # no violators at all; keep bias-only model
        support_x = Xs[:1]
        support_coef = np.zeros(1)
    return SvmModel(kind or f"SVM-{kernel.kind[:4].upper()}", scaler, X.shape[1],
                    support_x, support_coef, float(b), resolved, alpha.copy(), t,
                    _dual_objective(alpha, t, K), flags=flags)
