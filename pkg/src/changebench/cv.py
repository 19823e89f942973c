"""Seeded stratified k-fold planning.

Each class's shuffled indices are dealt into folds with the remainder rotated
across classes, so fold sizes differ by at most one overall and each fold's
positive count stays within one row of the global rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DatasetError


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray  # per-row fold index in [0, k)
    seed: int
    stratified: bool = True
    warnings: tuple[str, ...] = ()

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def splits(self):
        for fold in range(self.k):
            yield self.train_indices(fold), self.test_indices(fold)


def make_folds(labels_or_ds, k: int = 5, seed: int = 0) -> FoldPlan:
    """Stratified assignment of rows to k folds; deterministic for a seed."""
    labels = getattr(labels_or_ds, "labels", labels_or_ds)
    labels = np.asarray(labels)
    n = labels.size
    if k < 2:
        raise DatasetError("need at least 2 folds")
    if k > n:
        raise DatasetError(f"cannot split {n} rows into {k} folds")
    rng = np.random.default_rng(seed)
    assignments = np.empty(n, dtype=int)
    warnings: list[str] = []
    offset = 0
    for cls in (1, 0):
        idx = np.flatnonzero(labels == cls)
        if 0 < idx.size < k:
            warnings.append(f"class {cls} has fewer than {k} members; stratification degraded")
        perm = rng.permutation(idx)
        base, rem = divmod(idx.size, k)
        sizes = np.full(k, base)
        for r in range(rem):
            sizes[(offset + r) % k] += 1
        offset = (offset + rem) % k
        pos = 0
        for fold in range(k):
            assignments[perm[pos : pos + sizes[fold]]] = fold
            pos += sizes[fold]
    return FoldPlan(k, assignments, seed, True, tuple(warnings))
