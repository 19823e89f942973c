"""Four-stage metric validation pipeline (PFST): a rank-test filter, a
univariate-logistic filter, correlation-group pruning, and forward stepwise
selection over a linear model of the label.

Each stage only narrows (stage 3 may merge a correlated group but never
admits a metric absent from stage 2), so the trace satisfies
stage4 <= stage3 <= stage2 <= stage1 <= all metrics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classifiers.linear import fit_logistic
from .cv import make_folds
from .dataset import MetricDataset, canonical_order, canonical_sort_key
from .distributions import f_sf
from .errors import ChangebenchError
from .stats import pearson_from_matrix, rank_test, ulr_fit

STRONG_R = 0.7
P_ENTER = 0.05


@dataclass(frozen=True)
class FeatureSet:
    """A named, ordered selection of metric columns.

    ``provenance`` maps each member to a short note about which stage or
    scoring rule admitted it.
    """

    label: str
    members: tuple[str, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.members:
            raise ChangebenchError(f"feature set {self.label!r} has no members")
        if len(set(self.members)) != len(self.members):
            raise ChangebenchError(f"feature set {self.label!r} has duplicate members")
        object.__setattr__(self, "members", tuple(self.members))

    def to_json(self) -> dict:
        return {"label": self.label, "members": list(self.members),
                "provenance": dict(self.provenance)}


@dataclass(frozen=True)
class PfstTrace:
    """Everything the four stages computed, for reports and audits."""

    stage1_survivors: tuple[str, ...]
    stage2_survivors: tuple[str, ...]
    stage3_survivors: tuple[str, ...]
    stage4_selected: tuple[str, ...]
    stage1_p_values: dict
    stage2_p_values: dict
    correlation_groups: tuple
    stage4_steps: tuple
    warnings: tuple[str, ...] = ()
    fallback: str | None = None

    def to_json(self) -> dict:
        return {
            "stage1_survivors": list(self.stage1_survivors),
            "stage2_survivors": list(self.stage2_survivors),
            "stage3_survivors": list(self.stage3_survivors),
            "stage4_selected": list(self.stage4_selected),
            "stage1_p_values": dict(self.stage1_p_values),
            "stage2_p_values": dict(self.stage2_p_values),
            "correlation_groups": [dict(g) for g in self.correlation_groups],
            "stage4_steps": [dict(s) for s in self.stage4_steps],
            "warnings": list(self.warnings),
            "fallback": self.fallback,
        }

    def stage_membership(self, metric: str) -> tuple[bool, bool, bool, bool]:
        return (metric in self.stage1_survivors, metric in self.stage2_survivors,
                metric in self.stage3_survivors, metric in self.stage4_selected)


def _stage1_details(ds: MetricDataset, alpha: float) -> tuple[list[str], dict]:
    p_values = {}
    for col in ds.columns:
        changed, unchanged = ds.class_split(col)
        p_values[col] = rank_test(changed, unchanged, alpha=alpha).p_value
    survivors = [c for c in ds.columns if p_values[c] <= alpha]
    return canonical_order(survivors), p_values


def stage1_rank_filter(ds: MetricDataset, alpha: float = 0.05) -> list[str]:
    """Metrics whose changed/unchanged rank-test p-value is at most alpha."""
    return _stage1_details(ds, alpha)[0]


def _stage2_details(ds: MetricDataset, survivors: Sequence[str], alpha: float):
    p_values = {}
    for col in survivors:
        p_values[col] = ulr_fit(ds.column_values(col), ds.labels, alpha=alpha).coef_p_value
    kept = [c for c in survivors if p_values[c] < alpha]
    return canonical_order(kept), p_values


def stage2_ulr_filter(ds: MetricDataset, survivors: Sequence[str],
                      alpha: float = 0.05) -> list[str]:
    """Metrics whose univariate logistic slope is significant (p < alpha)."""
    return _stage2_details(ds, survivors, alpha)[0]


def _cv_f_measure(ds: MetricDataset, members: Sequence[str], seed: int, k: int = 5) -> float:
    """5-fold CV F-measure of a logistic model on the given columns."""
    X = ds.matrix(members)
    y = ds.labels
    k = min(k, ds.n_rows)
    plan = make_folds(y, k=k, seed=seed)
    tp = fp = fn = 0
    for train_idx, test_idx in plan.splits():
        y_train = y[train_idx]
        if y_train.min() == y_train.max():
            pred = np.full(test_idx.size, int(y_train[0]))
        else:
            model = fit_logistic(X[train_idx], y_train)
            pred = model.predict(X[test_idx])
        truth = y[test_idx]
        tp += int(((pred == 1) & (truth == 1)).sum())
        fp += int(((pred == 1) & (truth == 0)).sum())
        fn += int(((pred == 0) & (truth == 1)).sum())
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def _correlation_components(ds: MetricDataset, survivors: Sequence[str],
                            threshold: float) -> list[list[str]]:
    corr = pearson_from_matrix(ds.matrix(survivors), survivors)
    n = len(survivors)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if abs(corr.r[i, j]) >= threshold:
                parent[find(i)] = find(j)
    groups: dict[int, list[str]] = {}
    for i, name in enumerate(survivors):
        groups.setdefault(find(i), []).append(name)
    return [canonical_order(g) for g in groups.values()]


def _stage3_details(ds: MetricDataset, survivors: Sequence[str], seed: int,
                    threshold: float):
    survivors = canonical_order(survivors)
    if len(survivors) < 2:
        return list(survivors), ()
    kept: list[str] = []
    group_records = []
    for group in _correlation_components(ds, survivors, threshold):
        if len(group) == 1:
            kept.extend(group)
            continue
        candidates: list[tuple[str, ...]] = [(m,) for m in group] + [tuple(group)]
        scored = []
        for cand in candidates:
            scored.append((cand, _cv_f_measure(ds, cand, seed=seed)))
        # best score; ties prefer fewer metrics, then canonical order
        best = min(scored, key=lambda cs: (-cs[1], len(cs[0]),
                                           tuple(canonical_sort_key(m) for m in cs[0])))
        kept.extend(best[0])
        group_records.append({
            "members": list(group),
            "candidates": [{"members": list(c), "f_measure": s} for c, s in scored],
            "chosen": list(best[0]),
        })
    return canonical_order(kept), tuple(group_records)


def stage3_correlation_prune(ds: MetricDataset, survivors: Sequence[str],
                             seed: int = 0, threshold: float = STRONG_R) -> list[str]:
    """Within each strongly-correlated group (|r| >= threshold), keep the
    single metric or the whole group, whichever predicts better under a
    seeded logistic CV; singletons pass through."""
    return _stage3_details(ds, survivors, seed, threshold)[0]


def _stage4_details(ds: MetricDataset, survivors: Sequence[str], p_enter: float):
    survivors = canonical_order(survivors)
    y = ds.labels.astype(float)
    n = ds.n_rows
    selected: list[str] = []
    steps = []
    rss_current = float(((y - y.mean()) ** 2).sum())
    scale = max(rss_current, 1e-12)
    candidates = list(survivors)
    while candidates:
        n_params = len(selected) + 2  # intercept + selected + candidate
        df_denom = n - n_params
        if df_denom < 1 or rss_current < 1e-12 * scale:
            break
        best = None
        for cand in candidates:
            design = np.column_stack(
                [np.ones(n)] + [ds.column_values(c) for c in selected + [cand]]
            )
            coef, *_ = np.linalg.lstsq(design, y, rcond=None)
            resid = y - design @ coef
            rss_new = float(resid @ resid)
            rss_new = min(rss_new, rss_current)
            # floor keeps a perfect fit's F statistic finite (and JSON-safe)
            f_stat = (rss_current - rss_new) * df_denom / max(rss_new, 1e-300)
            p_value = f_sf(f_stat, 1.0, float(df_denom))
            if best is None or p_value < best[1]:
                best = (cand, p_value, f_stat, rss_new)
        if best is None or best[1] >= p_enter:
            break
        cand, p_value, f_stat, rss_new = best
        selected.append(cand)
        candidates.remove(cand)
        rss_current = rss_new
        steps.append({"metric": cand, "f_stat": f_stat, "p_value": p_value})
    return selected, tuple(steps)


def stage4_stepwise(ds: MetricDataset, survivors: Sequence[str],
                    p_enter: float = P_ENTER) -> list[str]:
    """Greedy forward selection on a linear regression of the binary label;
    admits the candidate with the smallest entry F-test p-value while it stays
    below ``p_enter``. Returns metrics in admission order."""
    return _stage4_details(ds, survivors, p_enter)[0]


def run_pfst(ds: MetricDataset, seed: int = 0, alpha: float = 0.05,
             p_enter: float = P_ENTER) -> tuple[FeatureSet, PfstTrace]:
    """Chain the four stages; falls back to all metrics when the filters empty
    out, or to the best stage-3 metric when only the stepwise stage is empty."""
    warnings: list[str] = []
    fallback = None
    s1, p1 = _stage1_details(ds, alpha)
    s2, p2 = _stage2_details(ds, s1, alpha) if s1 else ([], {})
    s3, groups = _stage3_details(ds, s2, seed, STRONG_R) if s2 else ([], ())
    s4, steps = _stage4_details(ds, s3, p_enter) if s3 else ([], ())

    if not s3:
        empty_stage = 1 if not s1 else (2 if not s2 else 3)
        fallback = f"stage {empty_stage} left no metrics; fell back to all metrics"
        warnings.append(fallback)
        members = list(ds.columns)
        provenance = {m: "fallback: all metrics" for m in members}
    elif not s4:
        # keep the single best stage-3 metric by its first-step p-value
        _, probe_steps = _stage4_details(ds, s3, p_enter=1.1)
        best_metric = probe_steps[0]["metric"] if probe_steps else s3[0]
        fallback = "stepwise admitted nothing; kept the best stage-3 metric"
        warnings.append(fallback)
        members = [best_metric]
        provenance = {best_metric: "fallback: best stage-3 metric"}
        s4 = members
        steps = probe_steps[:1]
    else:
        members = canonical_order(s4)
        provenance = {
            step["metric"]: f"stepwise step {i + 1} (p={step['p_value']:.3g})"
            for i, step in enumerate(steps)
        }

    trace = PfstTrace(
        stage1_survivors=tuple(s1),
        stage2_survivors=tuple(s2),
        stage3_survivors=tuple(s3),
        stage4_selected=tuple(canonical_order(s4)),
        stage1_p_values=p1,
        stage2_p_values=p2,
        correlation_groups=groups,
        stage4_steps=steps,
        warnings=tuple(warnings),
        fallback=fallback,
    )
    return FeatureSet("PFST", tuple(canonical_order(members)), provenance), trace


def write_trace_json(trace: PfstTrace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(trace.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
