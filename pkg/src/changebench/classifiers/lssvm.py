"""Least-squares SVM: training reduces to one symmetric linear system.

With targets t in {-1, +1}, Omega_ij = t_i t_j K(x_i, x_j), and regularization
weight gamma_reg, the fitted (b, alpha) solve

    [ 0   t^T            ] [ b     ]   [ 0 ]
    [ t   Omega + I/gamma] [ alpha ] = [ 1 ]

and the decision function is sign(sum_i alpha_i t_i K(x_i, x) + b).
"""

from __future__ import annotations

import numpy as np

from .base import FeatureScaler, TrainedModel, sigmoid, validate_training_data
from .kernels import KernelSpec

RESIDUAL_LIMIT = 1e-8  # relative to the RHS norm; jitter retry beyond this


class LssvmModel(TrainedModel):
    def __init__(self, kind, scaler, n_features, train_x, coef, bias, kernel,
                 system_residual, rhs_norm, flags=()):
        super().__init__(kind, scaler, n_features, flags=flags)
        self.train_x = train_x
        self.coef = coef  # alpha_i * t_i
        self.bias = bias
        self.kernel = kernel
        self.system_residual = system_residual
        self.rhs_norm = rhs_norm

    def margin(self, X) -> np.ndarray:
        X = self._check(X)
        if X.shape[0] == 0:
            return np.empty(0)
        Xs = self.scaler.transform(X)
        return self.kernel.gram(Xs, self.train_x) @ self.coef + self.bias

    def _score(self, Xs):
        return sigmoid(self.kernel.gram(Xs, self.train_x) @ self.coef + self.bias)

    def _state_json(self):
        return {
            "kernel": {"kind": self.kernel.kind, "degree": self.kernel.degree,
                       "gamma": self.kernel.gamma, "coef0": self.kernel.coef0},
            "bias": self.bias,
            "n_train": int(self.train_x.shape[0]),
            "system_residual": self.system_residual,
        }


def fit_lssvm(X, y, kernel: KernelSpec, gamma_reg: float = 10.0,
              kind: str | None = None) -> LssvmModel:
    """Solve the LS-SVM system directly; jitter the diagonal once if the
    solve comes back with a poor residual or fails outright."""
    X, y = validate_training_data(X, y)
    scaler = FeatureScaler.fit(X)
    Xs = scaler.transform(X)
    n = Xs.shape[0]
    t = np.where(y == 1, 1.0, -1.0)
    resolved = KernelSpec(kernel.kind, kernel.degree,
                          kernel.resolve_gamma(Xs.shape[1]), kernel.coef0)
    K = resolved.gram(Xs, Xs)
    omega = (t[:, None] * t[None, :]) * K

    system = np.zeros((n + 1, n + 1))
    system[0, 1:] = t
    system[1:, 0] = t
    system[1:, 1:] = omega + np.eye(n) / gamma_reg
    rhs = np.concatenate([[0.0], np.ones(n)])
    rhs_norm = float(np.linalg.norm(rhs[1:]))  # == ||y|| for +-1 targets

    flags: tuple[str, ...] = ()
    try:
        solution = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError:
        solution = None
    if solution is not None:
        residual = float(np.linalg.norm(system @ solution - rhs))
    if solution is None or residual > RESIDUAL_LIMIT * rhs_norm:
        jittered = system.copy()
        jittered[1:, 1:] += np.eye(n) * 1e-10
        solution = np.linalg.solve(jittered, rhs)
        residual = float(np.linalg.norm(system @ solution - rhs))
        flags = ("ill-conditioned system; 1e-10 diagonal jitter applied",)

    bias = float(solution[0])
    alpha = solution[1:]
    return LssvmModel(kind or f"LSSVM-{kernel.kind[:4].upper()}", scaler, X.shape[1],
                      Xs, alpha * t, bias, resolved, residual, rhs_norm, flags=flags)
