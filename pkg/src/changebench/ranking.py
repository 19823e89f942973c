"""Feature-ranking selectors FR1-FR4 (chi-squared, gain ratio, one-rule,
information gain) plus the eigenvalue/varimax PCA selector FR5.

The four score-based rankers see only bins from rank-preserving
equal-frequency discretization, so they are invariant under strictly
monotone transforms of a feature. Each keeps the top ceil(log2 n) metrics;
PCA instead keeps metrics loading strongly on a retained component.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import MetricDataset, canonical_sort_key
from .errors import StatsError
from .pfst import FeatureSet
from .stats import pearson_from_matrix

LOADING_THRESHOLD = 0.7
EIGENVALUE_THRESHOLD = 1.0


def top_k_count(n_candidates: int) -> int:
    """ceil(log2 n): the selection size for the ranking methods."""
    return max(1, math.ceil(math.log2(max(n_candidates, 2))))


def equal_frequency_codes(values: np.ndarray, bins: int = 10) -> np.ndarray:
    """Discretize into up to ``bins`` equal-frequency bins (distinct values get
    their own bin when there are fewer of them than bins)."""
    values = np.asarray(values, dtype=float)
    distinct = np.unique(values)
    if distinct.size <= bins:
        return np.searchsorted(distinct, values)
    quantiles = np.quantile(values, np.arange(1, bins) / bins)
    edges = np.unique(quantiles)
    return np.searchsorted(edges, values, side="right")


def _entropy(counts: np.ndarray) -> float:
    counts = counts[counts > 0].astype(float)
    total = counts.sum()
    p = counts / total
    return float(-(p * np.log2(p)).sum())


def _contingency(codes: np.ndarray, labels: np.ndarray) -> np.ndarray:
    n_bins = int(codes.max()) + 1
    table = np.zeros((n_bins, 2))
    np.add.at(table, (codes, labels), 1.0)
    return table


@dataclass(frozen=True)
class RankedFeatures:
    """Per-metric scores with the descending order and selection size k."""

    scores: dict
    order: tuple[str, ...]
    k: int
    flags: tuple[str, ...] = ()

    def selected(self) -> tuple[str, ...]:
        return self.order[: self.k]


def _rank(ds: MetricDataset, candidates, score_fn, bins: int) -> RankedFeatures:
    candidates = list(candidates) if candidates is not None else list(ds.columns)
    if not candidates:
        raise StatsError("no candidate metrics to rank")
    labels = ds.labels
    scores = {}
    flags = []
    for col in candidates:
        codes = equal_frequency_codes(ds.column_values(col), bins)
        score, flag = score_fn(codes, labels)
        scores[col] = score
        if flag:
            flags.append(f"{col}: {flag}")
    order = tuple(sorted(candidates, key=lambda c: (-scores[c], canonical_sort_key(c))))
    return RankedFeatures(scores, order, top_k_count(len(candidates)), tuple(flags))


def _chi_squared(codes, labels):
    table = _contingency(codes, labels)
    total = table.sum()
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / total
    mask = expected > 0
    stat = float((((table - expected) ** 2)[mask] / expected[mask]).sum())
    return stat, None


def _info_gain(codes, labels):
    table = _contingency(codes, labels)
    h_label = _entropy(table.sum(axis=0))
    n = table.sum()
    h_cond = sum(
        (row.sum() / n) * _entropy(row) for row in table if row.sum() > 0
    )
    return float(h_label - h_cond), None


def _gain_ratio(codes, labels):
    table = _contingency(codes, labels)
    split_info = _entropy(table.sum(axis=1))
    if split_info == 0.0:
        return 0.0, "zero split information (constant feature)"
    ig, _ = _info_gain(codes, labels)
    return ig / split_info, None


def _one_rule(codes, labels):
    table = _contingency(codes, labels)
    return float(table.max(axis=1).sum() / table.sum()), None


def chi_squared_rank(ds: MetricDataset, candidates: Sequence[str] | None = None,
                     bins: int = 10) -> RankedFeatures:
    """FR1: chi-squared statistic of the feature-bin x label table."""
    return _rank(ds, candidates, _chi_squared, bins)


def gain_ratio_rank(ds: MetricDataset, candidates: Sequence[str] | None = None,
                    bins: int = 10) -> RankedFeatures:
    """FR2: information gain divided by the split information."""
    return _rank(ds, candidates, _gain_ratio, bins)


def oner_rank(ds: MetricDataset, candidates: Sequence[str] | None = None,
              bins: int = 10) -> RankedFeatures:
    """FR3: training accuracy of the one-rule classifier (majority per bin)."""
    return _rank(ds, candidates, _one_rule, bins)


def info_gain_rank(ds: MetricDataset, candidates: Sequence[str] | None = None,
                   bins: int = 10) -> RankedFeatures:
    """FR4: mutual information between the binned feature and the label."""
    return _rank(ds, candidates, _info_gain, bins)


# ---------------------------------------------------------------------------
# FR5: PCA with varimax rotation


@dataclass(frozen=True)
class PcaLoadings:
    """Rotated loadings of the retained (eigenvalue > 1) components, plus the
    full eigenvalue spectrum of the correlation matrix."""

    columns: tuple[str, ...]
    loadings: np.ndarray  # (n_columns, n_retained), varimax-rotated
    eigenvalues: np.ndarray  # all, non-increasing
    variance_pct: np.ndarray
    cumulative_pct: np.ndarray
    n_retained: int
    excluded: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    def write_csv(self, path, comment: str | None = None) -> None:
        """Metrics x components table with eigenvalue/variance footer rows."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            writer = csv.writer(fh)
            names = [f"PC{i + 1}" for i in range(self.n_retained)]
            writer.writerow(["metric"] + names)
            for i, col in enumerate(self.columns):
                writer.writerow([col] + [f"{v:.6f}" for v in self.loadings[i]])
            writer.writerow(["Eigenvalues"] + [f"{v:.6f}" for v in self.eigenvalues[: self.n_retained]])
            writer.writerow(["% variance"] + [f"{v:.6f}" for v in self.variance_pct[: self.n_retained]])
            writer.writerow(["Cumulative % variance"] + [f"{v:.6f}" for v in self.cumulative_pct[: self.n_retained]])


def varimax(loadings: np.ndarray, max_iter: int = 200, tol: float = 1e-12) -> np.ndarray:
    """Varimax rotation with Kaiser row normalization.

    Orthogonal column rotation, so per-row communalities are preserved.
    """
    loadings = np.asarray(loadings, dtype=float)
    p, k = loadings.shape
    if k < 2:
        return loadings.copy()
    h = np.sqrt((loadings**2).sum(axis=1))
    h_safe = np.where(h < 1e-12, 1.0, h)
    a = loadings / h_safe[:, None]
    rotation = np.eye(k)
    d_old = 0.0
    for _ in range(max_iter):
        b = a @ rotation
        target = a.T @ (b**3 - b @ np.diag((b**2).sum(axis=0)) / p)
        u, s, vt = np.linalg.svd(target)
        rotation = u @ vt
        d = s.sum()
        if d_old != 0.0 and d <= d_old * (1.0 + tol):
            break
        d_old = d
    rotated = (a @ rotation) * h_safe[:, None]
    # deterministic sign convention: strongest loading in each column positive
    for j in range(k):
        peak = np.argmax(np.abs(rotated[:, j]))
        if rotated[peak, j] < 0:
            rotated[:, j] = -rotated[:, j]
    return rotated


def pca_select(ds: MetricDataset, candidates: Sequence[str] | None = None,
               loading_threshold: float = LOADING_THRESHOLD) -> tuple[FeatureSet, PcaLoadings]:
    """FR5: z-score the columns, eigendecompose the correlation matrix, keep
    components with eigenvalue above 1, varimax-rotate them, and select the
    metrics with an absolute rotated loading above 0.7 on any kept component."""
    candidates = list(candidates) if candidates is not None else list(ds.columns)
    if ds.n_rows < 3:
        raise StatsError("pca_select needs at least 3 rows")
    warnings = []
    usable = [c for c in candidates if np.ptp(ds.column_values(c)) > 0.0]
    excluded = tuple(c for c in candidates if c not in usable)
    if excluded:
        warnings.append(f"zero-variance columns excluded: {', '.join(excluded)}")
    if len(usable) < 2:
        raise StatsError("pca_select needs at least 2 non-constant candidates")

    corr = pearson_from_matrix(ds.matrix(usable), usable)
    eigvals, eigvecs = np.linalg.eigh(corr.r)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.maximum(eigvals[order], 0.0)
    eigvecs = eigvecs[:, order]

    n_retained = int((eigvals > EIGENVALUE_THRESHOLD).sum())
    if n_retained == 0:
        n_retained = 1
        warnings.append("no eigenvalue above 1; retained the first component")
    raw = eigvecs[:, :n_retained] * np.sqrt(eigvals[:n_retained])
    rotated = varimax(raw)

    variance_pct = 100.0 * eigvals / len(usable)
    loadings = PcaLoadings(
        columns=tuple(usable),
        loadings=rotated,
        eigenvalues=eigvals,
        variance_pct=variance_pct,
        cumulative_pct=np.cumsum(variance_pct),
        n_retained=n_retained,
        excluded=excluded,
        warnings=tuple(warnings),
    )

    peak = np.abs(rotated).max(axis=1)
    members = [c for c, v in zip(usable, peak) if v > loading_threshold]
    provenance = {
        c: f"peak |loading| {v:.3f}" for c, v in zip(usable, peak) if v > loading_threshold
    }
    if not members:
        best = usable[int(np.argmax(peak))]
        members = [best]
        provenance = {best: f"fallback: largest |loading| {peak.max():.3f}"}
        warnings.append("no loading above threshold; kept the strongest metric")
    members = sorted(members, key=canonical_sort_key)
    return FeatureSet("FR5", tuple(members), provenance), loadings
