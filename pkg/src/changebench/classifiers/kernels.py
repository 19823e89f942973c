"""Kernel specifications and Gram matrix evaluation for the SVM family."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ModelError

KERNEL_KINDS = ("linear", "polynomial", "rbf")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel for SVM/LSSVM: linear, polynomial (gamma x.z + coef0)^degree, or
    Gaussian RBF exp(-gamma |x-z|^2); gamma defaults to 1/n_features in both
    parametrized kernels, which keeps Gram magnitudes comparable across
    feature-set sizes."""

    kind: str
    degree: int = 2
    gamma: float = 0.0  # 0 -> 1 / n_features at evaluation time
    coef0: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ModelError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "polynomial" and self.degree < 1:
            raise ModelError("polynomial degree must be >= 1")
        if self.gamma < 0:
            raise ModelError("gamma must be positive")

    def resolve_gamma(self, n_features: int) -> float:
        return self.gamma if self.gamma > 0 else 1.0 / n_features

    def gram(self, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if self.kind == "linear":
            return X @ Z.T
        if self.kind == "polynomial":
            gamma = self.resolve_gamma(X.shape[1])
            return (gamma * (X @ Z.T) + self.coef0) ** self.degree
        gamma = self.resolve_gamma(X.shape[1])
        sq = (
            (X**2).sum(axis=1)[:, None]
            + (Z**2).sum(axis=1)[None, :]
            - 2.0 * (X @ Z.T)
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-gamma * sq)


def kernel_for_classifier(kind: str, degree: int = 2, gamma: float = 0.0,
                          coef0: float = 1.0) -> KernelSpec:
    """Map a classifier suffix (LIN/POLY/RBF) to its kernel."""
    suffix = kind.rsplit("-", 1)[-1]
    mapping = {"LIN": "linear", "POLY": "polynomial", "RBF": "rbf"}
    if suffix not in mapping:
        raise ModelError(f"classifier {kind!r} has no kernel suffix")
    return KernelSpec(mapping[suffix], degree=degree, gamma=gamma, coef0=coef0)
